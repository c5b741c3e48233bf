#include "kryloc/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "kryloc/errors.hpp"

namespace kryloc {

namespace {

void check_times(const std::vector<double>& times) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0) throw std::invalid_argument("times must be non-negative");
    if (i > 0 && times[i] < times[i - 1]) throw std::invalid_argument("times must be sorted");
  }
}

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tridiagonal_eigen(const TridiagonalMatrix& tri) {
  const auto n = static_cast<Eigen::Index>(tri.size());
  Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(tri.h.data(), n);
  Eigen::VectorXd e = n > 1 ? Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(tri.gamma.data(), n - 1))
                            : Eigen::VectorXd();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw NumericalError("tridiagonal eigensolver did not converge");
  return es;
}

}  // namespace

EvolutionTrace evolve_krylov(const TridiagonalMatrix& tri, const std::vector<double>& times) {
  check_times(times);
  if (tri.size() == 0) throw std::invalid_argument("empty Lanczos matrix");
  const auto es = tridiagonal_eigen(tri);
  const Eigen::MatrixXd& U = es.eigenvectors();
  const Eigen::VectorXd& E = es.eigenvalues();
  const Eigen::VectorXd c0 = U.row(0).transpose();
  const auto n = static_cast<Eigen::Index>(tri.size());

  EvolutionTrace tr;
  tr.times = times;
  tr.krylov_weights.resize(static_cast<Eigen::Index>(times.size()), n);
  for (std::size_t t = 0; t < times.size(); ++t) {
    Eigen::VectorXcd phase(n);
    for (Eigen::Index j = 0; j < n; ++j) phase[j] = std::polar(c0[j], -E[j] * times[t]);
    Eigen::VectorXcd w = U * phase;
    tr.krylov_weights.row(static_cast<Eigen::Index>(t)) = w.transpose();
    double spread = 0;
    for (Eigen::Index k = 0; k < n; ++k) spread += static_cast<double>(k) * std::norm(w[k]);
    tr.spread_complexity.push_back(spread);
    tr.last_state_pop.push_back(std::norm(w[n - 1]));
  }
  return tr;
}

namespace {

Trajectory evolve_dense(const HamiltonianOperator& H, const StateVector& psi0, const std::vector<double>& times) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.to_dense());
  if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver did not converge");
  const Eigen::MatrixXd& U = es.eigenvectors();
  const Eigen::VectorXd& E = es.eigenvalues();
  const Eigen::VectorXcd c = U.transpose() * psi0.amplitudes;

  Trajectory tr{psi0.basis, times, {}, PropagationPath::dense};
  for (double t : times) {
    Eigen::VectorXcd ct(c.size());
    for (Eigen::Index j = 0; j < c.size(); ++j) ct[j] = c[j] * std::polar(1.0, -E[j] * t);
    tr.states.emplace_back(U * ct);
  }
  return tr;
}

// Advances psi by total time T in Krylov steps small enough that the last
// Krylov vector stays below step_tol; dt carries over between calls.
void krylov_advance(const HamiltonianOperator& H, Eigen::VectorXcd& psi, double T, double& dt,
                    const EvolveOptions& opts) {
  double done = 0;
  while (done < T) {
    const double beta = psi.norm();
    StateVector v{H.basis_ptr(), psi / beta};
    LanczosOptions lo;
    lo.n_max = std::min(opts.krylov_dim, H.dim());
    lo.termination_tol = 1e-14;
    const auto lr = lanczos_iterate(H, v, lo);
    const auto es = tridiagonal_eigen(lr.tri);
    const Eigen::MatrixXd& U = es.eigenvectors();
    const Eigen::VectorXd& E = es.eigenvalues();
    const auto m = static_cast<Eigen::Index>(lr.size());
    const bool exact = lr.reason == Termination::exhausted || m == static_cast<Eigen::Index>(H.dim());

    double step = std::min(dt, T - done);
    Eigen::VectorXcd w;
    bool halved = false;
    for (int tries = 0;; ++tries) {
      Eigen::VectorXcd ph(m);
      for (Eigen::Index j = 0; j < m; ++j) ph[j] = std::polar(U(0, j), -E[j] * step);
      w = U * ph;
      if (exact || std::abs(w[m - 1]) <= opts.step_tol) break;
      if (tries > 60) throw NumericalError("Krylov propagation step did not converge");
      step *= 0.5;
      halved = true;
    }
    Eigen::VectorXcd next = Eigen::VectorXcd::Zero(psi.size());
    for (Eigen::Index k = 0; k < m; ++k) next += w[k] * lr.vectors[static_cast<std::size_t>(k)];
    psi = beta * next;
    done += step;
    if (halved)
      dt = step;
    else if (step == dt)
      dt *= 1.25;
  }
}

Trajectory evolve_krylov_restart(const HamiltonianOperator& H, const StateVector& psi0,
                                 const std::vector<double>& times, const EvolveOptions& opts) {
  Trajectory tr{psi0.basis, times, {}, PropagationPath::krylov};
  Eigen::VectorXcd psi = psi0.amplitudes;
  double t = 0, dt = 1.0 / std::max(H.norm_estimate(), 1e-12);
  for (double target : times) {
    if (target > t) krylov_advance(H, psi, target - t, dt, opts);
    t = target;
    tr.states.push_back(psi);
  }
  return tr;
}

}  // namespace

Trajectory evolve_full(const HamiltonianOperator& H, const StateVector& psi0, const std::vector<double>& times,
                       const EvolveOptions& opts) {
  if (psi0.basis.get() != H.basis_ptr().get()) throw std::invalid_argument("basis mismatch in evolve_full");
  check_times(times);
  PropagationPath path = opts.path;
  if (path == PropagationPath::automatic)
    path = H.dim() <= opts.dense_limit ? PropagationPath::dense : PropagationPath::krylov;
  if (path == PropagationPath::dense && H.dim() > opts.dense_limit)
    throw ConfigError("dimension " + std::to_string(H.dim()) + " exceeds the dense limit " +
                      std::to_string(opts.dense_limit) + "; use the Krylov propagation path");
  return path == PropagationPath::dense ? evolve_dense(H, psi0, times) : evolve_krylov_restart(H, psi0, times, opts);
}

double diagonal_entropy(const Eigen::VectorXcd& psi) {
  double s = 0;
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    const double p = std::norm(psi[i]);
    if (p > 0) s -= p * std::log(p);
  }
  return s;
}

double boltzmann_entropy(const Eigen::VectorXcd& psi, const MicrostateBasis& basis) {
  if (basis.kind() != BasisKind::spin_sector) throw std::invalid_argument("Boltzmann entropy needs a spin sector");
  const int ts = basis.twice_spin(), N = basis.sites();
  std::vector<double> pm(static_cast<std::size_t>(ts) + 1, 0.0);
  for (std::size_t a = 0; a < basis.dim(); ++a) {
    const double p = std::norm(psi[static_cast<Eigen::Index>(a)]);
    if (p == 0) continue;
    for (auto m : basis.twice_m(a)) pm[static_cast<std::size_t>((m + ts) / 2)] += p;
  }
  double s = 0;
  for (double p : pm) {
    p /= N;
    if (p > 0) s -= p * std::log(p);
  }
  return N * s;
}

EntropyTrace entropy_trace(const Trajectory& traj) {
  if (!traj.basis) throw std::invalid_argument("trajectory without basis");
  EntropyTrace e;
  e.times = traj.times;
  e.S_C = std::log(static_cast<double>(traj.basis->dim()));
  const bool spin = traj.basis->kind() == BasisKind::spin_sector;
  for (const auto& psi : traj.states) {
    const double sd = diagonal_entropy(psi);
    e.S_D.push_back(sd);
    e.populated_fraction.push_back(std::exp(sd - e.S_C));
    if (spin) e.S_B.push_back(boltzmann_entropy(psi, *traj.basis));
  }
  if (spin && !e.S_B.empty() && e.S_B.back() > 0) {
    e.F = e.S_C / e.S_B.back();
    for (double sb : e.S_B) {
      e.S_B_corrected.push_back(e.F * sb);
      e.populated_fraction_boltzmann.push_back(std::exp(e.F * sb - e.S_C));
    }
  }
  return e;
}

GuardResult last_state_guard(const EvolutionTrace& trace, std::size_t n, bool exhausted) {
  GuardResult g;
  if (exhausted) {
    g.note = "Krylov space exhausted; no truncation error to guard against";
    return g;
  }
  if (n == 0) throw std::invalid_argument("n must be positive");
  for (double p : trace.last_state_pop) g.max_population = std::max(g.max_population, p);
  g.passed = g.max_population < 1.0 / (10.0 * static_cast<double>(n));
  if (!g.passed) g.note = "last Krylov state population reached " + std::to_string(g.max_population) +
                          "; re-run with a larger n_max";
  return g;
}

double tail_average(const std::vector<double>& values, double fraction) {
  if (values.empty()) throw std::invalid_argument("empty series");
  const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(values.size() * fraction)));
  double s = 0;
  for (std::size_t i = values.size() - k; i < values.size(); ++i) s += values[i];
  return s / static_cast<double>(k);
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = n == 1 ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return x;
}

}  // namespace kryloc
