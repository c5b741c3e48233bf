#include "kryloc/eth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "kryloc/errors.hpp"
#include "kryloc/localization.hpp"
#include "kryloc/spectral.hpp"

namespace kryloc {

namespace {

template <class M>
ObservableMatrix with_profile(M entries) {
  ObservableMatrix o;
  const Eigen::Index n = entries.rows();
  o.bandwidth_profile.assign(static_cast<std::size_t>(n), 0.0);
  double total = 0;
  for (Eigen::Index p = 0; p < n; ++p)
    for (Eigen::Index q = 0; q < n; ++q) {
      const double w = std::norm(std::complex<double>(entries(p, q)));
      o.bandwidth_profile[static_cast<std::size_t>(std::abs(p - q))] += w;
      total += w;
    }
  if (total > 0) {
    double acc = 0;
    bool found = false;
    for (std::size_t j = 0; j < o.bandwidth_profile.size(); ++j) {
      o.bandwidth_profile[j] /= total;
      acc += o.bandwidth_profile[j];
      if (!found && acc >= 0.95 - 1e-12) {
        o.effective_bandwidth = j;
        found = true;
      }
    }
  }
  o.entries = entries.template cast<std::complex<double>>();
  return o;
}

}  // namespace

Eigen::MatrixXd banded_observable(std::size_t n, ObservableProfile profile, double ell, double a, std::size_t jmax) {
  if (ell <= 0) throw std::invalid_argument("observable decay length must be positive");
  const double dn = static_cast<double>(n);
  auto f = [&](double x) {
    return profile == ObservableProfile::linear ? 0.2 + x / dn : 1.0 + 0.5 * std::cos(M_PI * x / dn);
  };
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = p; q < n && q - p <= jmax; ++q) {
      const double j = static_cast<double>(q - p);
      const double v = f(0.5 * static_cast<double>(p + q)) * (q == p ? 1.0 : a * std::exp(-j / ell));
      B(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) = v;
      B(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(p)) = v;
    }
  return B;
}

ObservableMatrix observable_in_krylov(const HamiltonianOperator& B, const LanczosResult& res) {
  if (res.vectors.empty()) throw std::logic_error("Krylov vectors were not stored; re-run with store_vectors = true");
  if (B.basis_ptr().get() != res.basis.get()) throw std::invalid_argument("observable and Lanczos run use different bases");
  const auto n = static_cast<Eigen::Index>(res.vectors.size());
  std::vector<Eigen::VectorXcd> BV(res.vectors.size());
  for (std::size_t q = 0; q < res.vectors.size(); ++q) B.apply_into(res.vectors[q], BV[q]);
  Eigen::MatrixXcd M(n, n);
  for (Eigen::Index p = 0; p < n; ++p)
    for (Eigen::Index q = 0; q < n; ++q)
      M(p, q) = res.vectors[static_cast<std::size_t>(p)].dot(BV[static_cast<std::size_t>(q)]);
  return with_profile(M);
}

ObservableMatrix observable_from_matrix(const Eigen::MatrixXd& B) {
  if (B.rows() != B.cols()) throw std::invalid_argument("observable matrix must be square");
  return with_profile(B);
}

double smoothness_metric(const std::vector<double>& v) {
  if (v.size() < 8) throw std::invalid_argument("smoothness needs at least 8 eigenstates");
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  const double range = *mx - *mn;
  if (range <= 0) return 0.0;
  const std::size_t n = v.size(), a = n / 4, b = 3 * n / 4;
  std::vector<double> d;
  for (std::size_t i = a; i + 1 < b; ++i) d.push_back(v[i + 1] - v[i]);
  double m = 0, s = 0;
  for (double x : d) m += x;
  m /= static_cast<double>(d.size());
  for (double x : d) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(d.size())) / range;
}

EthExpectations eigenstate_expectations(const TridiagonalMatrix& tri, const Eigen::MatrixXd& B) {
  const auto n = static_cast<Eigen::Index>(tri.size());
  if (B.rows() != n || B.cols() != n) throw std::invalid_argument("observable size does not match Lanczos matrix");
  EthExpectations r;
  r.energies = sturm_eigenvalues(tri);
  const Eigen::MatrixXd Z = inverse_iteration(tri, r.energies);
  for (Eigen::Index q = 0; q < n; ++q) {
    const auto z = Z.col(q);
    r.expectations.push_back(z.dot(B * z));
    double c = 0;
    for (Eigen::Index p = 0; p < n; ++p) c += static_cast<double>(p) * z[p] * z[p];
    r.centroid.push_back(c);
  }
  r.smoothness = smoothness_metric(r.expectations);
  return r;
}

EthExpectations eigenstate_expectations(const HamiltonianOperator& H, const HamiltonianOperator& B,
                                        std::size_t dense_limit) {
  if (H.basis_ptr().get() != B.basis_ptr().get()) throw std::invalid_argument("H and B use different bases");
  if (H.dim() > dense_limit) throw ConfigError("dimension exceeds the dense limit for eigenstate expectations");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.to_dense());
  if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver did not converge");
  const Eigen::MatrixXd& U = es.eigenvectors();
  EthExpectations r;
  Eigen::VectorXd Bz;
  for (Eigen::Index q = 0; q < U.cols(); ++q) {
    const Eigen::VectorXd z = U.col(q);
    B.apply_into(z, Bz);
    r.energies.push_back(es.eigenvalues()[q]);
    r.expectations.push_back(z.dot(Bz));
    double c = 0;
    for (Eigen::Index p = 0; p < z.size(); ++p) c += static_cast<double>(p) * z[p] * z[p];
    r.centroid.push_back(c);
  }
  r.smoothness = smoothness_metric(r.expectations);
  return r;
}

namespace {

// Per-site h and Gamma (the last site reuses the last coupling), optionally smoothed.
void local_band(const TridiagonalMatrix& tri, std::size_t smoothing, std::vector<double>& h, std::vector<double>& g) {
  const std::size_t n = tri.size();
  if (n < 2) throw std::invalid_argument("WKB needs at least two Krylov states");
  h = tri.h;
  g.assign(tri.gamma.begin(), tri.gamma.begin() + (n - 1));
  g.push_back(g.back());
  for (auto& x : g) x = std::abs(x);
  if (smoothing > 1) {
    h = moving_average(h, smoothing);
    g = moving_average(g, smoothing);
  }
}

void lattice_wavevector(const std::vector<double>& h, const std::vector<double>& g, double E,
                        std::vector<double>& k, std::vector<double>& amp2) {
  const std::size_t n = h.size();
  k.assign(n, 0.0);
  amp2.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double x = (E - h[j]) / (2 * g[j]);
    if (std::abs(x) < 1) {
      k[j] = std::acos(x);
      amp2[j] = 1.0 / (g[j] * std::max(std::sin(k[j]), 1e-12));
    }
  }
}

}  // namespace

WkbEigenstate wkb_eigenstate(const TridiagonalMatrix& tri, double E, const WkbOptions& opts) {
  std::vector<double> h, g, amp2;
  local_band(tri, opts.smoothing, h, g);
  const std::size_t n = h.size();
  WkbEigenstate w;
  w.E = E;
  w.E_local.resize(n);
  for (std::size_t j = 0; j < n; ++j) w.E_local[j] = h[j] + 2 * g[j];

  if (opts.dispersion == WkbDispersion::lattice) {
    lattice_wavevector(h, g, E, w.k_local, amp2);
  } else {
    w.k_local.assign(n, 0.0);
    amp2.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double d = w.E_local[j] - E;
      if (d > 0 && d < 4 * g[j]) {
        w.k_local[j] = std::sqrt(d / g[j]);
        amp2[j] = 1.0 / (g[j] * w.k_local[j]);
      }
    }
  }
  double total = 0;
  for (double a : amp2) total += a;
  if (total <= 0) throw std::domain_error("energy lies outside the local band everywhere");
  w.alpha = 1.0 / std::sqrt(total);
  w.c.resize(n);
  for (std::size_t j = 0; j < n; ++j) w.c[j] = std::sqrt(amp2[j]) * w.alpha;

  // Standing wave sin(theta_j), theta_j = sum_{p<=j} k_p: vanishes one site
  // beyond the left wall. The two-sided form also integrates from the right
  // wall and joins the halves at the midpoint with a sign fitted by overlap.
  std::vector<double> left(n), right(n);
  double th = 0;
  for (std::size_t j = 0; j < n; ++j) {
    th += w.k_local[j];
    left[j] = w.c[j] * std::sin(th);
  }
  w.psi = left;
  if (opts.two_sided) {
    th = 0;
    for (std::size_t j = n; j-- > 0;) {
      th += w.k_local[j];
      right[j] = w.c[j] * std::sin(th);
    }
    const std::size_t m = n / 2;
    const std::size_t lo = m > opts.match_half_width ? m - opts.match_half_width : 0;
    const std::size_t hi = std::min(n, m + opts.match_half_width);
    double dot = 0;
    for (std::size_t j = lo; j < hi; ++j) dot += left[j] * right[j];
    const double s = dot < 0 ? -1.0 : 1.0;
    for (std::size_t j = m; j < n; ++j) w.psi[j] = s * right[j];
  }
  double nn = 0;
  for (double x : w.psi) nn += x * x;
  if (nn <= 0) throw std::domain_error("WKB wavefunction vanishes");
  for (auto& x : w.psi) x /= std::sqrt(nn);
  return w;
}

double wkb_overlap(const WkbEigenstate& w, const Eigen::VectorXd& exact) {
  if (static_cast<std::size_t>(exact.size()) != w.psi.size()) throw std::invalid_argument("size mismatch");
  double d = 0;
  for (std::size_t j = 0; j < w.psi.size(); ++j) d += w.psi[j] * exact[static_cast<Eigen::Index>(j)];
  return std::abs(d) / exact.norm();
}

FourierCheck fourier_expectation_check(const TridiagonalMatrix& tri, const ObservableMatrix& B, double E_q,
                                       const Eigen::VectorXd& psi_q, const FourierOptions& opts) {
  const std::size_t n = tri.size();
  const Eigen::MatrixXd Br = B.real();
  if (static_cast<std::size_t>(Br.rows()) != n || static_cast<std::size_t>(psi_q.size()) != n)
    throw std::invalid_argument("observable or eigenvector size does not match Lanczos matrix");

  FourierCheck f;
  f.bandwidth = B.effective_bandwidth;
  if (static_cast<double>(f.bandwidth) > opts.bandwidth_limit * static_cast<double>(n))
    f.warning = "effective bandwidth " + std::to_string(f.bandwidth) + " exceeds " +
                std::to_string(opts.bandwidth_limit) + " n; the Fourier approximation is not expected to hold";

  std::vector<double> h, g, k, wkb_env;
  local_band(tri, opts.smoothing, h, g);
  lattice_wavevector(h, g, E_q, k, wkb_env);

  std::vector<double> env(n);
  if (opts.envelope == FourierEnvelope::exact) {
    const double nn = psi_q.squaredNorm();
    for (std::size_t p = 0; p < n; ++p) env[p] = psi_q[static_cast<Eigen::Index>(p)] * psi_q[static_cast<Eigen::Index>(p)] / nn;
  } else {
    double t = 0;
    for (double a : wkb_env) t += a;
    if (t <= 0) throw std::domain_error("energy lies outside the local band everywhere");
    for (std::size_t p = 0; p < n; ++p) env[p] = wkb_env[p] / t;
  }

  f.exact = psi_q.dot(Br * psi_q) / psi_q.squaredNorm();
  for (std::size_t p = 0; p < n; ++p) {
    if (env[p] == 0) continue;
    double tf = 0;
    const auto P = static_cast<Eigen::Index>(p);
    for (Eigen::Index q = 0; q < static_cast<Eigen::Index>(n); ++q) {
      const double b = Br(P, q);
      if (b != 0) tf += std::cos(static_cast<double>(q - P) * k[p]) * b;
    }
    f.approx += env[p] * tf;
  }
  f.rel_error = std::abs(f.approx - f.exact) / std::max(std::abs(f.exact), 1e-300);
  return f;
}

FourierCheck fourier_expectation_check(const TridiagonalMatrix& tri, const Eigen::MatrixXd& B, std::size_t q,
                                       const FourierOptions& opts) {
  const auto ev = sturm_eigenvalues(tri);
  if (q >= ev.size()) throw std::out_of_range("eigenstate index out of range");
  return fourier_expectation_check(tri, observable_from_matrix(B), ev[q], inverse_iteration(tri, ev[q]), opts);
}

}  // namespace kryloc
