#include "kryloc/lanczos.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace kryloc {

TridiagonalMatrix TridiagonalMatrix::leading(std::size_t n) const {
  if (n > size()) throw std::out_of_range("leading block larger than matrix");
  TridiagonalMatrix t;
  t.h.assign(h.begin(), h.begin() + n);
  if (n > 1) t.gamma.assign(gamma.begin(), gamma.begin() + (n - 1));
  return t;
}

Eigen::MatrixXd TridiagonalMatrix::to_dense() const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) M(i, i) = h[i];
  for (Eigen::Index i = 0; i + 1 < n; ++i) M(i, i + 1) = M(i + 1, i) = gamma[i];
  return M;
}

LanczosResult lanczos_iterate(const HamiltonianOperator& H, const StateVector& psi0,
                              const LanczosOptions& opts) {
  if (psi0.basis.get() != H.basis_ptr().get()) throw std::invalid_argument("basis mismatch in lanczos_iterate");
  if (opts.n_max < 2) throw std::invalid_argument("n_max must be >= 2");
  if (std::abs(psi0.norm() - 1.0) > 1e-10) throw std::invalid_argument("initial state is not normalized");

  LanczosResult res;
  res.basis = H.basis_ptr();
  std::size_t n_max = opts.n_max;
  if (n_max > H.dim()) {
    n_max = H.dim();
    res.terminated_early = true;
    res.reason = Termination::dimension;
  }
  const double cutoff = opts.termination_tol * std::max(H.norm_estimate(), 1e-300);

  std::vector<Eigen::VectorXcd>& V = res.vectors;
  V.reserve(n_max);
  V.push_back(psi0.amplitudes);
  Eigen::VectorXcd w;
  for (std::size_t k = 0;; ++k) {
    H.apply_into(V[k], w);
    const double hk = V[k].dot(w).real();
    res.tri.h.push_back(hk);
    if (k + 1 == n_max) break;

    w -= hk * V[k];
    if (k > 0) w -= res.tri.gamma[k - 1] * V[k - 1];
    double worst = 0;
    for (int pass = 0; pass < 2; ++pass) {
      const double rn = std::max(w.norm(), 1e-300);
      for (std::size_t j = 0; j <= k; ++j) {
        std::complex<double> c = V[j].dot(w);
        if (pass == 1) worst = std::max(worst, std::abs(c) / rn);
        w -= c * V[j];
      }
    }
    res.reorthogonalization_log.push_back(worst);

    const double g = w.norm();
    if (g <= cutoff) {
      res.terminated_early = true;
      res.reason = Termination::exhausted;
      break;
    }
    res.tri.gamma.push_back(g);
    V.push_back(w / g);
  }
  if (!opts.store_vectors) {
    V.clear();
    V.shrink_to_fit();
  }
  return res;
}

std::vector<double> krylov_microstate_weights(const LanczosResult& res, std::size_t k) {
  if (res.vectors.empty())
    throw std::logic_error("Krylov vectors were not stored; re-run with store_vectors = true");
  if (k >= res.vectors.size()) throw std::out_of_range("Krylov index out of range");
  const auto& v = res.vectors[k];
  std::vector<double> w(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) w[static_cast<std::size_t>(i)] = std::norm(v[i]);
  return w;
}

namespace {

template <class Radius>
RadialProfile profile(const std::vector<double>& weights, const MicrostateBasis& basis, Radius radius) {
  if (basis.kind() != BasisKind::lattice) throw std::invalid_argument("radial profile needs a lattice basis");
  if (weights.size() != basis.dim()) throw std::invalid_argument("weights do not match basis");
  double W = 0, m1 = 0, m2 = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] == 0) continue;
    const double r = radius(basis.site(i));
    W += weights[i];
    m1 += weights[i] * r;
    m2 += weights[i] * r * r;
  }
  if (W <= 0) throw std::invalid_argument("weights sum to zero");
  m1 /= W;
  m2 /= W;
  return {m1, std::sqrt(std::max(0.0, m2 - m1 * m1))};
}

}  // namespace

RadialProfile radial_profile(const std::vector<double>& weights, const MicrostateBasis& basis) {
  return profile(weights, basis, [](const std::vector<int>& c) {
    double s = 0;
    for (int x : c) s += double(x) * x;
    return std::sqrt(s);
  });
}

RadialProfile manhattan_profile(const std::vector<double>& weights, const MicrostateBasis& basis) {
  return profile(weights, basis, [](const std::vector<int>& c) {
    double s = 0;
    for (int x : c) s += x;
    return s;
  });
}

double orthogonality_defect(const LanczosResult& res) {
  double worst = 0;
  for (std::size_t i = 0; i < res.vectors.size(); ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      std::complex<double> g = res.vectors[i].dot(res.vectors[j]);
      worst = std::max(worst, std::abs(g - (i == j ? 1.0 : 0.0)));
    }
  return worst;
}

namespace {

const char* reason_name(Termination t) {
  switch (t) {
    case Termination::requested: return "requested";
    case Termination::exhausted: return "exhausted";
    case Termination::dimension: return "dimension";
  }
  return "requested";
}

}  // namespace

void save_lanczos(const LanczosResult& res, const std::filesystem::path& prefix) {
  static_assert(std::endian::native == std::endian::little, "binary vector dump assumes little-endian host");
  nlohmann::json j;
  j["format"] = "kryloc-lanczos-1";
  j["n"] = res.size();
  j["dim"] = res.basis ? res.basis->dim() : 0;
  j["h"] = res.tri.h;
  j["gamma"] = res.tri.gamma;
  j["terminated_early"] = res.terminated_early;
  j["reason"] = reason_name(res.reason);
  j["reorthogonalization_log"] = res.reorthogonalization_log;
  j["vectors"] = res.vectors.empty()
                     ? nlohmann::json(nullptr)
                     : nlohmann::json{{"file", prefix.filename().string() + ".bin"},
                                      {"rows", res.vectors.size()},
                                      {"row_length", res.vectors.front().size()},
                                      {"layout", "row = Krylov vector, entries (re, im) float64 little-endian"}};
  std::ofstream(prefix.string() + ".json") << j.dump(1) << '\n';
  if (res.vectors.empty()) return;
  std::ofstream bin(prefix.string() + ".bin", std::ios::binary);
  for (const auto& v : res.vectors)
    bin.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(std::complex<double>)));
  if (!bin) throw std::runtime_error("failed writing " + prefix.string() + ".bin");
}

LanczosResult load_lanczos(const std::filesystem::path& prefix, BasisPtr basis) {
  std::ifstream in(prefix.string() + ".json");
  if (!in) throw std::runtime_error("cannot open " + prefix.string() + ".json");
  nlohmann::json j = nlohmann::json::parse(in);
  LanczosResult res;
  res.basis = std::move(basis);
  res.tri.h = j.at("h").get<std::vector<double>>();
  res.tri.gamma = j.at("gamma").get<std::vector<double>>();
  res.terminated_early = j.at("terminated_early").get<bool>();
  const std::string r = j.at("reason").get<std::string>();
  res.reason = r == "exhausted" ? Termination::exhausted : r == "dimension" ? Termination::dimension : Termination::requested;
  res.reorthogonalization_log = j.at("reorthogonalization_log").get<std::vector<double>>();
  if (!j.at("vectors").is_null()) {
    const auto rows = j["vectors"]["rows"].get<std::size_t>();
    const auto len = j["vectors"]["row_length"].get<Eigen::Index>();
    std::ifstream bin(prefix.string() + ".bin", std::ios::binary);
    for (std::size_t i = 0; i < rows; ++i) {
      Eigen::VectorXcd v(len);
      bin.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(len * sizeof(std::complex<double>)));
      if (!bin) throw std::runtime_error("truncated vector file " + prefix.string() + ".bin");
      res.vectors.push_back(std::move(v));
    }
  }
  return res;
}

}  // namespace kryloc
