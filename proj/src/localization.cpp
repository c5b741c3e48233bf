#include "kryloc/localization.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kryloc {

namespace {

double mean_of(std::span<const double> x) {
  double s = 0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance_of(std::span<const double> x) {
  const double m = mean_of(x);
  double s = 0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size());
}

}  // namespace

std::vector<double> moving_average(std::span<const double> x, std::size_t width) {
  const std::size_t n = x.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = std::min({width / 2, i, n - 1 - i});
    out[i] = mean_of(x.subspan(i - r, 2 * r + 1));
  }
  return out;
}

CoefficientStats coefficient_stats(const TridiagonalMatrix& tri, const StatsOptions& opts) {
  const std::size_t n = tri.size();
  if (n < 4) throw std::invalid_argument("coefficient_stats needs at least 4 Lanczos states");
  if (opts.window_len < 2 || opts.window_start + opts.window_len > n)
    throw std::invalid_argument("statistics window outside the Lanczos matrix");

  CoefficientStats s;
  s.window_start = opts.window_start;
  s.window_len = opts.window_len;
  std::span<const double> h(tri.h.data() + opts.window_start, opts.window_len);
  const std::size_t g_end = std::min(opts.window_start + opts.window_len, tri.gamma.size());
  std::span<const double> g(tri.gamma.data() + opts.window_start, g_end - opts.window_start);

  const std::size_t m = opts.drift_window ? opts.drift_window : (opts.window_len + 3) / 4;
  s.drift = moving_average(h, m);
  s.gamma_bar = mean_of(g);
  s.var_gamma = variance_of(g);
  if (opts.detrend) {
    std::vector<double> r(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) r[i] = h[i] - s.drift[i];
    s.W2 = variance_of(r);
  } else {
    s.W2 = variance_of(h);
  }
  return s;
}

CoefficientStats coefficient_stats(const TridiagonalMatrix& tri, std::size_t window_len) {
  StatsOptions o;
  o.window_len = window_len;
  return coefficient_stats(tri, o);
}

double wannier_stark_length(std::span<const double> drift, double gamma_bar) {
  for (std::size_t l = 1; l < drift.size(); ++l)
    if (std::abs(drift[l] - drift[0]) >= std::abs(gamma_bar)) return static_cast<double>(l + 1);
  return kInfinity;
}

double wannier_stark_length(const CoefficientStats& stats) {
  return wannier_stark_length(stats.drift, stats.gamma_bar);
}

AndersonLengths anderson_lengths(const CoefficientStats& stats, double alpha) {
  if (stats.gamma_bar == 0) throw std::domain_error("gamma_bar = 0: degenerate chain");
  const double g2 = stats.gamma_bar * stats.gamma_bar;
  AndersonLengths a;
  if (stats.W2 > 0) a.l_loc_1 = alpha * g2 / stats.W2;
  if (stats.var_gamma > 0) a.l_loc_2 = g2 / stats.var_gamma;
  return a;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::localized: return "localized";
    case Verdict::delocalized: return "delocalized";
    case Verdict::marginal: return "marginal";
  }
  return "marginal";
}

XiResult xi_criterion(double l_loc, double c, double d, double R, double S_C, double xi_low, double xi_high) {
  if (R <= 1) throw std::invalid_argument("branching number must exceed 1");
  if (S_C <= 0) throw std::invalid_argument("S_C must be positive");
  XiResult r;
  const double w = c * c + d * d;
  r.xi = (c == 0) ? 0.0 : (c * c / w) * l_loc * std::log(R) / S_C;
  r.verdict = r.xi < xi_low ? Verdict::localized : r.xi > xi_high ? Verdict::delocalized : Verdict::marginal;
  return r;
}

RatioResult single_particle_criterion(double l_loc, double c, double d, int D, double L, double threshold) {
  if (D < 1 || D > 3) throw std::invalid_argument("dimension must be 1, 2 or 3");
  if (L <= 0) throw std::invalid_argument("extent must be positive");
  RatioResult r;
  r.ratio = (c == 0) ? 0.0 : (c * c / (c * c + d * d)) * l_loc / L;
  r.verdict = r.ratio < threshold ? Verdict::localized : Verdict::delocalized;
  return r;
}

double phase_drift_length_2d(double gamma_bar, double w, double b) {
  if (w <= 0) throw std::invalid_argument("w must be positive");
  return std::exp(b * gamma_bar * gamma_bar / (w * w));
}

ContinuumLengths continuum_calculator(double J, double W, double Delta, std::optional<double> q) {
  if (W <= 0) throw std::invalid_argument("W must be positive");
  ContinuumLengths c;
  const double r = J * J / (W * W);
  c.mean_free_path = Delta * r;
  if (q) c.l_loc_q = c.mean_free_path * std::exp(std::numbers::pi / 2 * *q * Delta * r);
  c.l_loc_integrated = Delta * (std::exp(std::numbers::pi * std::numbers::pi / 2 * r) - 1.0);
  return c;
}

LocalizationReport localization_report(const TridiagonalMatrix& tri, double c, double d, double R, double S_C,
                                       const ReportOptions& opts) {
  LocalizationReport rep;
  rep.stats = coefficient_stats(tri, opts.stats);
  rep.l_loc_0 = wannier_stark_length(rep.stats);
  const auto a = anderson_lengths(rep.stats, opts.alpha);
  rep.l_loc_1 = a.l_loc_1;
  rep.l_loc_2 = a.l_loc_2;
  rep.l_loc = std::min({rep.l_loc_0, rep.l_loc_1, rep.l_loc_2});
  rep.R = R;
  rep.S_C = S_C;
  const auto x = xi_criterion(rep.l_loc, c, d, R, S_C, opts.xi_low, opts.xi_high);
  rep.xi = x.xi;
  rep.verdict = x.verdict;
  return rep;
}

double windowed_std(std::span<const double> h, std::size_t k, std::size_t half) {
  if (h.empty() || k >= h.size()) throw std::out_of_range("window centre outside sequence");
  const std::size_t lo = k >= half ? k - half : 0, hi = std::min(h.size(), k + half + 1);
  return std::sqrt(variance_of(h.subspan(lo, hi - lo)));
}

}  // namespace kryloc
