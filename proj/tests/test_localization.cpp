#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kryloc/localization.hpp"
#include "kryloc/models.hpp"

using namespace kryloc;

namespace {

TridiagonalMatrix random_tri(std::size_t n, double gbar, double w, double sg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  TridiagonalMatrix t;
  for (std::size_t i = 0; i < n; ++i) t.h.push_back(w * g(rng));
  for (std::size_t i = 0; i + 1 < n; ++i) t.gamma.push_back(gbar + sg * g(rng));
  return t;
}

}  // namespace

TEST_CASE("moving average keeps constants and straight lines") {
  std::vector<double> line;
  for (int i = 0; i < 30; ++i) line.push_back(0.5 * i - 3);
  for (std::size_t w : {1u, 3u, 10u, 11u}) {
    const auto m = moving_average(line, w);
    for (std::size_t i = 0; i < line.size(); ++i) CHECK(m[i] == doctest::Approx(line[i]).epsilon(1e-13));
  }
  const std::vector<double> x{0, 0, 3, 0, 0};
  const auto m = moving_average(x, 3);
  CHECK(m[0] == 0.0);
  CHECK(m[1] == doctest::Approx(1.0));
  CHECK(m[2] == doctest::Approx(1.0));
  CHECK(m[4] == 0.0);
}

TEST_CASE("coefficient statistics use population moments over the window") {
  TridiagonalMatrix t;
  for (int i = 0; i < 50; ++i) t.h.push_back(i % 2 ? 1.0 : -1.0);
  for (int i = 0; i < 49; ++i) t.gamma.push_back(i % 2 ? 5.0 : 3.0);
  const auto s = coefficient_stats(t, 40);
  CHECK(s.gamma_bar == doctest::Approx(4.0));
  CHECK(s.W2 == doctest::Approx(1.0));
  CHECK(s.var_gamma == doctest::Approx(1.0));
  CHECK(s.window_len == 40);
  CHECK(s.drift.size() == 40);
  const auto a = anderson_lengths(s);
  CHECK(a.l_loc_1 == doctest::Approx(9.0 * 16.0));
  CHECK(a.l_loc_2 == doctest::Approx(16.0));
  CHECK_THROWS(coefficient_stats(t, 60));
}

TEST_CASE("detrending removes a smooth drift from W2") {
  TridiagonalMatrix t;
  for (int i = 0; i < 40; ++i) t.h.push_back(0.1 * i);
  t.gamma.assign(39, 1.0);
  StatsOptions o;
  const double raw = coefficient_stats(t, o).W2;
  o.detrend = true;
  CHECK(raw == doctest::Approx(0.01 * (40.0 * 40 - 1) / 12));
  CHECK(coefficient_stats(t, o).W2 < 1e-20);
}

TEST_CASE("Wannier-Stark length is the first index reached by a drift of gamma_bar") {
  std::vector<double> d;
  for (int i = 0; i < 20; ++i) d.push_back(0.5 * i);
  CHECK(wannier_stark_length(d, 2.0) == 5.0);
  CHECK(wannier_stark_length(d, -2.0) == 5.0);
  CHECK(wannier_stark_length(d, 100.0) == kInfinity);
  std::vector<double> flat(20, 1.0);
  CHECK(wannier_stark_length(flat, 0.1) == kInfinity);
}

TEST_CASE("zero disorder gives infinite Anderson lengths") {
  CoefficientStats s;
  s.gamma_bar = 2;
  const auto a = anderson_lengths(s);
  CHECK(a.l_loc_1 == kInfinity);
  CHECK(a.l_loc_2 == kInfinity);
  s.gamma_bar = 0;
  CHECK_THROWS(anderson_lengths(s));
}

TEST_CASE("xi criterion formula and verdicts") {
  const double xi = xi_criterion(10.0, 1.0, 1.0, 81.0, std::log(3139.0)).xi;
  CHECK(xi == doctest::Approx(0.5 * 10.0 * std::log(81.0) / std::log(3139.0)));
  CHECK(xi_criterion(10.0, 0.0, 1.0, 81.0, 2.0).xi == 0.0);
  CHECK(xi_criterion(1.0, 1.0, 0.0, 81.0, 100.0).verdict == Verdict::localized);
  CHECK(xi_criterion(1000.0, 1.0, 0.0, 81.0, 1.0).verdict == Verdict::delocalized);
  CHECK(xi_criterion(1.0, 1.0, 0.0, std::exp(1.0), 1.0).verdict == Verdict::marginal);
  CHECK(xi_criterion(kInfinity, 1.0, 0.0, 81.0, 1.0).xi == kInfinity);
  CHECK_THROWS(xi_criterion(1.0, 1.0, 0.0, 1.0, 1.0));
  CHECK_THROWS(xi_criterion(1.0, 1.0, 0.0, 4.0, 0.0));
}

TEST_CASE("xi is monotone in l_loc, in the off-diagonal share and in S_C") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  for (int trial = 0; trial < 500; ++trial) {
    const double l = u(rng), c = u(rng), d = u(rng), R = 1.5 + u(rng), S = u(rng);
    const double base = xi_criterion(l, c, d, R, S).xi;
    CHECK(xi_criterion(l * 1.1, c, d, R, S).xi > base);
    CHECK(xi_criterion(l, c * 1.1, d, R, S).xi > base);
    CHECK(xi_criterion(l, c, d * 1.1, R, S).xi < base);
    CHECK(xi_criterion(l, c, d, R, S * 1.1).xi < base);
  }
}

TEST_CASE("scale covariance: lengths and xi are invariant under H -> sH") {
  const auto t = random_tri(80, 2.0, 0.4, 0.3, 5);
  for (double s : {0.3, 2.0, 17.0}) {
    TridiagonalMatrix u = t;
    for (auto& x : u.h) x *= s;
    for (auto& x : u.gamma) x *= s;
    const auto a = coefficient_stats(t), b = coefficient_stats(u);
    CHECK(b.gamma_bar == doctest::Approx(s * a.gamma_bar));
    CHECK(std::sqrt(b.W2) == doctest::Approx(s * std::sqrt(a.W2)));
    CHECK(std::sqrt(b.var_gamma) == doctest::Approx(s * std::sqrt(a.var_gamma)));
    const auto ra = localization_report(t, 1.0, 0.5, 81, 8.0), rb = localization_report(u, s, 0.5 * s, 81, 8.0);
    CHECK(rb.l_loc_1 == doctest::Approx(ra.l_loc_1));
    CHECK(rb.l_loc_2 == doctest::Approx(ra.l_loc_2));
    CHECK(rb.xi == doctest::Approx(ra.xi));
  }
}

TEST_CASE("report takes the shortest mechanism") {
  TridiagonalMatrix t;
  for (int i = 0; i < 45; ++i) t.h.push_back(0.3 * i);
  t.gamma.assign(44, 1.0);
  // Raw W2 counts the drift as disorder.
  const auto raw = localization_report(t, 1.0, 0.0, 81.0, 8.0);
  CHECK(raw.l_loc == raw.l_loc_1);
  CHECK(raw.l_loc_1 == doctest::Approx(9.0 / (0.09 * (40.0 * 40 - 1) / 12)));
  ReportOptions o;
  o.stats.detrend = true;
  const auto r = localization_report(t, 1.0, 0.0, 81.0, 8.0, o);
  CHECK(r.l_loc_0 == 5.0);
  CHECK(r.l_loc == r.l_loc_0);
  CHECK(r.l_loc_2 == kInfinity);
}

TEST_CASE("single-particle criterion and phase-drift length") {
  const auto r = single_particle_criterion(30.0, 1.0, 1.0, 2, 60.0);
  CHECK(r.ratio == doctest::Approx(0.25));
  CHECK(r.verdict == Verdict::localized);
  CHECK(single_particle_criterion(120.0, 1.0, 0.0, 2, 60.0).verdict == Verdict::delocalized);
  CHECK(phase_drift_length_2d(1.0, 1.0) == doctest::Approx(std::exp(std::numbers::pi * std::numbers::pi / 2)));
  CHECK_THROWS(phase_drift_length_2d(1.0, 0.0));
}

TEST_CASE("continuum calculator closed forms") {
  auto c = continuum_calculator(1, 1, 1);
  CHECK(c.mean_free_path == 1.0);
  CHECK(c.l_loc_integrated == doctest::Approx(138.0).epsilon(1e-3));
  CHECK(!c.l_loc_q);
  c = continuum_calculator(2, 1, 0.5, 0.0);
  CHECK(*c.l_loc_q == c.mean_free_path);
  CHECK(c.mean_free_path == 2.0);
  c = continuum_calculator(1, 2, 3, 1.0);
  CHECK(*c.l_loc_q == doctest::Approx(0.75 * std::exp(std::numbers::pi / 2 * 0.75)));
  CHECK_THROWS(continuum_calculator(1, 0, 1));
}

TEST_CASE("windowed standard deviation clips at the ends") {
  const std::vector<double> h{0, 2, 0, 2, 0, 2};
  CHECK(windowed_std(h, 0, 1) == doctest::Approx(1.0));
  CHECK(windowed_std(h, 2, 1) == doctest::Approx(std::sqrt(8.0 / 9)));
  CHECK(windowed_std(h, 5, 10) == doctest::Approx(1.0));
  CHECK_THROWS(windowed_std(h, 6, 1));
}
