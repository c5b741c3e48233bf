#include "kryloc/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

namespace kryloc {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void check_order(const TridiagonalMatrix& tri, std::size_t n) {
  if (n == 0 || n > tri.size()) throw std::out_of_range("requested order outside matrix");
  if (tri.gamma.size() + 1 < tri.size()) throw std::invalid_argument("gamma array too short");
}

bool splits(const TridiagonalMatrix& tri, std::size_t i) {
  const double g = tri.gamma[i];
  return g == 0.0 || std::abs(g) <= kEps * (std::abs(tri.h[i]) + std::abs(tri.h[i + 1]));
}

// Sturm count restricted to rows [b, e) treated as an independent block.
std::size_t block_count(const TridiagonalMatrix& tri, std::size_t b, std::size_t e, double lambda,
                        double pivmin) {
  std::size_t neg = 0;
  double q = tri.h[b] - lambda;
  if (std::abs(q) < pivmin) q = -pivmin;
  if (q < 0) ++neg;
  for (std::size_t i = b + 1; i < e; ++i) {
    const double g = tri.gamma[i - 1];
    q = (tri.h[i] - lambda) - g * g / q;
    if (std::abs(q) < pivmin) q = -pivmin;
    if (q < 0) ++neg;
  }
  return neg;
}

double pivot_floor(const TridiagonalMatrix& tri, std::size_t n) {
  double m = std::numeric_limits<double>::min();
  for (std::size_t i = 0; i + 1 < n; ++i) m = std::max(m, tri.gamma[i] * tri.gamma[i]);
  return std::numeric_limits<double>::min() * std::max(1.0, m);
}

void bisect_block(const TridiagonalMatrix& tri, std::size_t b, std::size_t e, std::vector<double>& out) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = b; i < e; ++i) {
    double r = (i > b ? std::abs(tri.gamma[i - 1]) : 0.0) + (i + 1 < e ? std::abs(tri.gamma[i]) : 0.0);
    lo = std::min(lo, tri.h[i] - r);
    hi = std::max(hi, tri.h[i] + r);
  }
  const double scale = std::max({std::abs(lo), std::abs(hi), std::numeric_limits<double>::min()});
  lo -= 2 * kEps * scale + std::numeric_limits<double>::min();
  hi += 2 * kEps * scale + std::numeric_limits<double>::min();
  const double pivmin = pivot_floor(tri, e);
  const double abs_tol = kEps * scale;

  const std::size_t first = out.size();
  out.resize(first + (e - b));
  auto rec = [&](auto&& self, double a, double c, std::size_t na, std::size_t nc) -> void {
    if (nc == na) return;
    const double mid = 0.5 * (a + c);
    if (c - a <= 2 * kEps * std::max(std::abs(a), std::abs(c)) + abs_tol || mid <= a || mid >= c) {
      for (std::size_t k = na; k < nc; ++k) out[first + k] = mid;
      return;
    }
    const std::size_t nm = block_count(tri, b, e, mid, pivmin);
    self(self, a, mid, na, nm);
    self(self, mid, c, nm, nc);
  };
  rec(rec, lo, hi, 0, e - b);
}

}  // namespace

std::size_t sturm_count(const TridiagonalMatrix& tri, std::size_t n, double lambda) {
  check_order(tri, n);
  return block_count(tri, 0, n, lambda, pivot_floor(tri, n));
}

std::vector<double> sturm_eigenvalues(const TridiagonalMatrix& tri, std::size_t n) {
  check_order(tri, n);
  std::vector<double> ev;
  ev.reserve(n);
  std::size_t b = 0;
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (splits(tri, i)) {
      bisect_block(tri, b, i + 1, ev);
      b = i + 1;
    }
  bisect_block(tri, b, n, ev);
  std::sort(ev.begin(), ev.end());
  return ev;
}

std::vector<double> sturm_eigenvalues(const TridiagonalMatrix& tri) {
  return sturm_eigenvalues(tri, tri.size());
}

namespace {

// Tridiagonal LU with partial pivoting; same layout as LAPACK dgttrf.
struct TriLU {
  std::vector<double> dl, d, du, du2;
  std::vector<char> swapped;

  TriLU(const TridiagonalMatrix& tri, std::size_t n, double shift, double pivfloor) {
    d.resize(n);
    dl.assign(tri.gamma.begin(), tri.gamma.begin() + (n - 1));
    du = dl;
    du2.assign(n > 2 ? n - 2 : 0, 0.0);
    swapped.assign(n > 1 ? n - 1 : 0, 0);
    for (std::size_t i = 0; i < n; ++i) d[i] = tri.h[i] - shift;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (std::abs(d[i]) >= std::abs(dl[i])) {
        if (d[i] == 0) d[i] = pivfloor;
        const double f = dl[i] / d[i];
        dl[i] = f;
        d[i + 1] -= f * du[i];
      } else {
        const double f = d[i] / dl[i];
        d[i] = dl[i];
        dl[i] = f;
        const double t = du[i];
        du[i] = d[i + 1];
        d[i + 1] = t - f * d[i + 1];
        if (i + 2 < n) {
          du2[i] = du[i + 1];
          du[i + 1] = -f * du[i + 1];
        }
        swapped[i] = 1;
      }
    }
    for (auto& x : d)
      if (std::abs(x) < pivfloor) x = std::copysign(pivfloor, x == 0 ? 1.0 : x);
  }

  void solve(Eigen::VectorXd& b) const {
    const std::size_t n = d.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (!swapped[i]) {
        b[i + 1] -= dl[i] * b[i];
      } else {
        const double t = b[i] - dl[i] * b[i + 1];
        b[i] = b[i + 1];
        b[i + 1] = t;
      }
    }
    b[n - 1] /= d[n - 1];
    if (n > 1) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    for (std::size_t i = n > 2 ? n - 2 : 0; i-- > 0;) b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
  }
};

}  // namespace

Eigen::MatrixXd inverse_iteration(const TridiagonalMatrix& tri, const std::vector<double>& eigenvalues) {
  const std::size_t n = tri.size();
  if (n == 0) throw std::invalid_argument("empty matrix");
  double norm = 0;
  for (std::size_t i = 0; i < n; ++i)
    norm = std::max(norm, std::abs(tri.h[i]) + (i > 0 ? std::abs(tri.gamma[i - 1]) : 0.0) +
                              (i + 1 < n ? std::abs(tri.gamma[i]) : 0.0));
  norm = std::max(norm, std::numeric_limits<double>::min());
  const double cluster_gap = 1e-3 * norm;
  const double pivfloor = kEps * norm;

  std::vector<std::size_t> order(eigenvalues.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return eigenvalues[a] < eigenvalues[b]; });

  Eigen::MatrixXd Z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(eigenvalues.size()));
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::size_t cluster_start = 0;
  double prev_shift = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < order.size(); ++c) {
    double shift = eigenvalues[order[c]];
    if (c > 0 && shift - eigenvalues[order[c - 1]] > cluster_gap) cluster_start = c;
    // Coincident shifts would reproduce the same vector; nudge them apart.
    if (c > cluster_start && shift <= prev_shift + 10 * kEps * norm) shift = prev_shift + 10 * kEps * norm;
    prev_shift = shift;

    TriLU lu(tri, n, shift, pivfloor);
    Eigen::VectorXd x(static_cast<Eigen::Index>(n));
    for (auto& v : x) v = uni(rng);
    for (int it = 0; it < 4; ++it) {
      lu.solve(x);
      for (std::size_t j = cluster_start; j < c; ++j) x -= Z.col(static_cast<Eigen::Index>(order[j])).dot(x) * Z.col(static_cast<Eigen::Index>(order[j]));
      x.normalize();
    }
    Eigen::Index imax;
    x.cwiseAbs().maxCoeff(&imax);
    if (x[imax] < 0) x = -x;
    Z.col(static_cast<Eigen::Index>(order[c])) = x;
  }
  return Z;
}

Eigen::VectorXd inverse_iteration(const TridiagonalMatrix& tri, double eigenvalue) {
  return inverse_iteration(tri, std::vector<double>{eigenvalue}).col(0);
}

InterlacingResult interlacing_check(const TridiagonalMatrix& tri, std::size_t n) {
  if (n < 2) throw std::invalid_argument("interlacing needs n >= 2");
  const auto a = sturm_eigenvalues(tri, n);
  const auto b = sturm_eigenvalues(tri, n - 1);
  const double tol = 1e-9 * std::max(a.back() - a.front(), std::numeric_limits<double>::min());
  InterlacingResult r;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double v = std::max({a[k] - b[k], b[k] - a[k + 1], 0.0});
    r.max_violation = std::max(r.max_violation, v);
  }
  r.ok = r.max_violation <= tol;
  return r;
}

FixedPointScan fixed_point_scan(const TridiagonalMatrix& tri, std::size_t n,
                                const std::vector<double>& lambda_grid, double beta) {
  if (n < 2 || n > tri.size()) throw std::out_of_range("fixed_point_scan needs 2 <= n <= size");
  const auto ev1 = sturm_eigenvalues(tri, n - 1);
  const auto ev2 = n > 2 ? sturm_eigenvalues(tri, n - 2) : std::vector<double>{};
  const double G = tri.gamma[n - 2];
  if (beta == 0) {
    double gb = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) gb += tri.gamma[i];
    beta = (n - 1) / gb;
  }
  const double scale = std::max(std::abs(ev1.front()), std::abs(ev1.back()));

  FixedPointScan s;
  for (double x : lambda_grid) {
    std::size_t k0 = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < ev1.size(); ++k)
      if (std::abs(ev1[k] - x) < best) best = std::abs(ev1[k] - x), k0 = k;
    if (best <= 1e-14 * std::max(scale, 1.0)) {
      s.skipped.push_back(x);
      continue;
    }
    double la = 0;
    int sg = 1;
    for (double e : ev2) {
      const double d = e - x;
      la += std::log(std::abs(d));
      if (d < 0) sg = -sg;
    }
    for (double e : ev1) {
      const double d = e - x;
      la -= std::log(std::abs(d));
      if (d < 0) sg = -sg;
    }
    s.lambda.push_back(x);
    s.L.push_back((tri.h[n - 1] - x) / (G * G));
    s.R_log_abs.push_back(la);
    s.R_sign.push_back(sg);
    s.R.push_back(sg * std::exp(la));
    s.pole.push_back(k0);
    s.R0.push_back(k0 < ev2.size() ? (ev2[k0] - x) / (ev1[k0] - x) * beta
                                   : std::numeric_limits<double>::quiet_NaN());
  }
  return s;
}

RepulsionPrediction repulsion_propagation(const TridiagonalMatrix& tri, std::size_t n, std::size_t k,
                                          const std::vector<double>& ev2, const std::vector<double>& ev1,
                                          const std::vector<double>& ev0, const RepulsionOptions& opts) {
  if (n < 3 || n > tri.size()) throw std::out_of_range("repulsion_propagation needs 3 <= n <= size");
  if (k >= ev2.size() || k >= ev1.size()) throw std::out_of_range("k must index an order n-2 eigenvalue");
  RepulsionPrediction p;
  if (opts.ref_window > 0) {
    const std::size_t w = std::min(opts.ref_window, n);
    for (std::size_t i = n - w; i < n; ++i) p.e_ref += tri.h[i];
    p.e_ref /= static_cast<double>(w);
  }
  double gb = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) gb += tri.gamma[i];
  gb /= static_cast<double>(n - 1);
  const double G2 = tri.gamma[n - 2] * tri.gamma[n - 2];
  const double hn = tri.h[n - 1] - p.e_ref;
  const double a = ev2[k] - p.e_ref, b = ev1[k] - p.e_ref;
  const double den = G2 - gb * hn;
  p.flagged = std::abs(den) <= opts.denominator_tol * G2;
  p.factor = G2 / den;
  p.predicted = (-gb * hn * b + G2 * a) / den + p.e_ref;

  auto it = std::lower_bound(ev0.begin(), ev0.end(), p.predicted);
  std::size_t j = static_cast<std::size_t>(it - ev0.begin());
  if (j == ev0.size() || (j > 0 && p.predicted - ev0[j - 1] < ev0[j] - p.predicted)) --j;
  p.exact = ev0[j];
  const std::size_t lo = j > 0 ? j - 1 : 0, hi = std::min(j + 1, ev0.size() - 1);
  p.local_spacing = hi > lo ? (ev0[hi] - ev0[lo]) / static_cast<double>(hi - lo) : 0.0;
  p.error = std::abs(p.predicted - p.exact) / p.local_spacing;
  return p;
}

RepulsionPrediction repulsion_propagation(const TridiagonalMatrix& tri, std::size_t n, std::size_t k,
                                          const RepulsionOptions& opts) {
  if (n < 3 || n > tri.size()) throw std::out_of_range("repulsion_propagation needs 3 <= n <= size");
  return repulsion_propagation(tri, n, k, sturm_eigenvalues(tri, n - 2), sturm_eigenvalues(tri, n - 1),
                               sturm_eigenvalues(tri, n), opts);
}

std::vector<PropagationRecord> propagation_sweep(const TridiagonalMatrix& tri, std::size_t n_min,
                                                 std::size_t n_step, double mid_band,
                                                 const RepulsionOptions& opts) {
  if (n_min < 3 || n_step == 0) throw std::invalid_argument("propagation sweep needs n_min >= 3 and n_step >= 1");
  std::vector<PropagationRecord> out;
  for (std::size_t n = n_min; n <= tri.size(); n += n_step) {
    const auto ev2 = sturm_eigenvalues(tri, n - 2), ev1 = sturm_eigenvalues(tri, n - 1), ev0 = sturm_eigenvalues(tri, n);
    double gb = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) gb += tri.gamma[i];
    gb /= static_cast<double>(n - 1);
    for (std::size_t k = 0; k < ev2.size(); ++k) {
      const auto p = repulsion_propagation(tri, n, k, ev2, ev1, ev0, opts);
      if (std::abs(ev1[k] - p.e_ref) <= mid_band * gb) out.push_back({n, k, p});
    }
  }
  return out;
}

double wigner_surmise(double s) {
  return std::numbers::pi * s / 2 * std::exp(-std::numbers::pi * s * s / 4);
}

double poisson_density(double s) { return std::exp(-s); }

double kolmogorov_q(double x) {
  if (x <= 0) return 1.0;
  if (x < 1.18) {
    // Jacobi theta form converges fast for small x.
    const double y = std::exp(-std::numbers::pi * std::numbers::pi / (8 * x * x));
    double sum = 0;
    for (int j = 1; j <= 7; j += 2) sum += std::pow(y, j * j);
    return 1.0 - std::sqrt(2 * std::numbers::pi) / x * sum;
  }
  double sum = 0;
  for (int j = 1; j <= 100; ++j) {
    const double t = std::exp(-2.0 * j * j * x * x);
    sum += (j % 2 ? t : -t);
    if (t < 1e-18) break;
  }
  return std::clamp(2 * sum, 0.0, 1.0);
}

KsResult ks_exponential(std::vector<double> x) {
  if (x.empty()) throw std::invalid_argument("KS test needs samples");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double D = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = x[i] > 0 ? 1.0 - std::exp(-x[i]) : 0.0;
    D = std::max({D, F - i / n, (i + 1) / n - F});
  }
  const double sn = std::sqrt(n);
  return {D, kolmogorov_q((sn + 0.12 + 0.11 / sn) * D)};
}

SpectralReport spacing_statistics(std::vector<double> ev, const SpacingOptions& opts) {
  SpectralReport r;
  std::sort(ev.begin(), ev.end());
  if (ev.size() < 100) r.warnings.push_back("fewer than 100 eigenvalues");
  const std::size_t n = ev.size();
  const std::size_t a = static_cast<std::size_t>(std::floor(n * (1.0 - opts.mid_fraction) / 2.0));
  if (n < 2 * a + 11) throw std::invalid_argument("fewer than 10 spacings in the central window");
  for (std::size_t i = a; i + 1 < n - a; ++i) r.spacings.push_back(ev[i + 1] - ev[i]);
  r.eigenvalues = std::move(ev);

  const std::size_t m = r.spacings.size(), win = std::min(opts.unfold_window, m);
  r.unfolded_spacings.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t lo = i >= win / 2 ? i - win / 2 : 0;
    const std::size_t hi = std::min(m, lo + win);
    lo = hi - win;
    double mean = 0;
    for (std::size_t j = lo; j < hi; ++j) mean += r.spacings[j];
    mean /= static_cast<double>(win);
    r.unfolded_spacings[i] = mean > 0 ? r.spacings[i] / mean : 0.0;
  }
  const double total = std::accumulate(r.unfolded_spacings.begin(), r.unfolded_spacings.end(), 0.0);
  if (total <= 0) throw std::invalid_argument("degenerate spectrum: all spacings vanish");
  for (auto& s : r.unfolded_spacings) s *= static_cast<double>(m) / total;

  r.bin_width = opts.bin_width;
  const std::size_t bins = static_cast<std::size_t>(std::lround(opts.s_max / opts.bin_width));
  r.histogram.assign(bins, 0);
  std::size_t below = 0;
  for (double s : r.unfolded_spacings) {
    if (s < opts.repulsion_cut) ++below;
    const auto b = static_cast<std::size_t>(s / opts.bin_width);
    if (b < bins) ++r.histogram[b];
  }
  for (std::size_t b = 0; b < bins; ++b) {
    const double c = (b + 0.5) * opts.bin_width;
    r.bin_centers.push_back(c);
    r.density.push_back(r.histogram[b] / (m * opts.bin_width));
    r.wigner_ref.push_back(wigner_surmise(c));
    r.poisson_ref.push_back(poisson_density(c));
  }
  r.repulsion_metric = static_cast<double>(below) / static_cast<double>(m);
  const auto ks = ks_exponential(r.unfolded_spacings);
  r.ks_statistic = ks.statistic;
  r.ks_pvalue = ks.pvalue;
  return r;
}

}  // namespace kryloc
