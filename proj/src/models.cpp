#include "kryloc/models.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "kryloc/errors.hpp"

namespace kryloc {

HamiltonianOperator build_anderson(const AndersonConfig& cfg) {
  if (cfg.w_half < 0) throw std::invalid_argument("w_half must be non-negative");
  auto basis = enumerate_lattice(cfg.D, cfg.L);
  const std::size_t n = basis->dim();

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> eps(-cfg.w_half, cfg.w_half);
  Eigen::VectorXd diag(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) diag[static_cast<Eigen::Index>(i)] = cfg.w_half > 0 ? eps(rng) : 0.0;

  // Row-major: the neighbour along axis a is index + L^(D-1-a).
  std::vector<Coupling> couplings;
  couplings.reserve(n * cfg.D);
  for (std::size_t i = 0; i < n; ++i) {
    auto c = basis->site(i);
    std::size_t stride = 1;
    for (int a = cfg.D - 1; a >= 0; --a) {
      if (c[a] + 1 < cfg.L) couplings.push_back({i, i + stride, -cfg.J});
      stride *= static_cast<std::size_t>(cfg.L);
    }
  }
  return HamiltonianOperator(basis, std::move(diag), std::move(couplings),
                             cfg.w_half / std::sqrt(3.0), std::abs(cfg.J));
}

std::vector<double> dipolar_initial_state(const DipolarConfig& cfg) {
  const int N = cfg.nx * cfg.ny;
  if (cfg.initial.empty()) return std::vector<double>(N, 0.0);
  if (static_cast<int>(cfg.initial.size()) != N)
    throw ConfigError("initial state must list one m per site");
  return cfg.initial;
}

HamiltonianOperator build_dipolar_plaquette(const DipolarConfig& cfg) {
  const int N = cfg.nx * cfg.ny;
  if (cfg.nx < 1 || cfg.ny < 1 || N < 2) throw std::invalid_argument("plaquette needs at least 2 sites");
  auto init = dipolar_initial_state(cfg);
  double M = 0;
  for (double m : init) M += m;
  if (cfg.Mz && std::abs(*cfg.Mz - M) > 1e-9)
    throw ConfigError("requested sector M_z does not contain the initial state");

  auto basis = enumerate_spin_sector(N, cfg.s, M);
  const int ts = basis->twice_spin();
  const double ss1 = cfg.s * (cfg.s + 1);

  struct Pair { int i, j; double v; };
  std::vector<Pair> pairs;
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      double dx = i / cfg.ny - j / cfg.ny, dy = i % cfg.ny - j % cfg.ny;
      double r = std::hypot(dx, dy);
      if (r <= cfg.coupling_cutoff) pairs.push_back({i, j, cfg.V / (r * r * r)});
    }

  const std::size_t dim = basis->dim();
  Eigen::VectorXd diag(static_cast<Eigen::Index>(dim));
  std::vector<Coupling> couplings;
  std::vector<int> cfg_m(N);
  for (std::size_t a = 0; a < dim; ++a) {
    auto tm = basis->twice_m(a);
    double e = 0;
    for (const auto& p : pairs) e += p.v * (tm[p.i] / 2.0) * (tm[p.j] / 2.0);
    for (int i = 0; i < N; ++i) e += cfg.Q * (tm[i] / 2.0) * (tm[i] / 2.0);
    diag[static_cast<Eigen::Index>(a)] = e;

    for (int i = 0; i < N; ++i) cfg_m[i] = tm[i];
    for (const auto& p : pairs) {
      // s_i^+ s_j^- and s_i^- s_j^+; keep only the partner with the larger index.
      for (int dir : {+2, -2}) {
        int mi = tm[p.i] + dir, mj = tm[p.j] - dir;
        if (std::abs(mi) > ts || std::abs(mj) > ts) continue;
        cfg_m[p.i] = mi;
        cfg_m[p.j] = mj;
        std::size_t b = basis->index_of_spins(cfg_m);
        cfg_m[p.i] = tm[p.i];
        cfg_m[p.j] = tm[p.j];
        if (b <= a) continue;
        double m_i = tm[p.i] / 2.0, m_j = tm[p.j] / 2.0, d = dir / 2.0;
        double el = std::sqrt(ss1 - m_i * (m_i + d)) * std::sqrt(ss1 - m_j * (m_j - d));
        couplings.push_back({a, b, -p.v / 4.0 * el});
      }
    }
  }
  return HamiltonianOperator(basis, std::move(diag), std::move(couplings), cfg.Q, cfg.V);
}

StateVector dipolar_initial_vector(const DipolarConfig& cfg, const HamiltonianOperator& H) {
  auto init = dipolar_initial_state(cfg);
  std::vector<int> tm(init.size());
  for (std::size_t i = 0; i < init.size(); ++i) tm[i] = static_cast<int>(std::lround(2 * init[i]));
  auto idx = H.basis().find_spins(tm);
  if (!idx) throw ConfigError("initial state is not a configuration of the operator's sector");
  return StateVector::basis_state(H.basis_ptr(), *idx);
}

TridiagonalMatrix build_random_tridiagonal(const EnsembleConfig& cfg) {
  if (cfg.n < 4) throw std::invalid_argument("ensemble matrix size must be >= 4");
  if (cfg.gamma_bar == 0) throw std::invalid_argument("gamma_bar must be nonzero");
  if (cfg.W < 0 || cfg.var_gamma < 0) throw std::invalid_argument("dispersions must be non-negative");

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  TridiagonalMatrix t;
  t.h.resize(cfg.n);
  t.gamma.resize(cfg.n - 1);
  for (int k = 1; k <= cfg.n; ++k) {
    double s = std::sin(std::numbers::pi / 2 * k / cfg.n);
    t.h[k - 1] = cfg.drift_amplitude * s * s + cfg.W * gauss(rng);
  }
  const double g0 = std::abs(cfg.gamma_bar), sg = std::sqrt(cfg.var_gamma);
  for (auto& g : t.gamma) {
    do g = g0 + sg * gauss(rng);
    while (g <= 0);
  }
  return t;
}

}  // namespace kryloc
