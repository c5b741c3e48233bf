#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kryloc/lanczos.hpp"

namespace kryloc {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct CoefficientStats {
  double gamma_bar = 0;
  double W2 = 0;
  double var_gamma = 0;
  std::size_t window_start = 0;
  std::size_t window_len = 0;
  std::vector<double> drift;  // moving average of h over the window
};

struct StatsOptions {
  std::size_t window_len = 40;
  std::size_t window_start = 0;
  // Moving-average width; 0 selects ceil(window_len / 4).
  std::size_t drift_window = 0;
  // Subtract the drift from h before taking W2.
  bool detrend = false;
};

// Centered moving average of half-width width/2, shrunk symmetrically near the
// ends so that linear sequences are reproduced exactly.
std::vector<double> moving_average(std::span<const double> x, std::size_t width);

CoefficientStats coefficient_stats(const TridiagonalMatrix& tri, const StatsOptions& opts = {});
CoefficientStats coefficient_stats(const TridiagonalMatrix& tri, std::size_t window_len);

// Smallest 1-based l with |drift_l - drift_1| >= gamma_bar, or infinity.
double wannier_stark_length(std::span<const double> drift, double gamma_bar);
double wannier_stark_length(const CoefficientStats& stats);

struct AndersonLengths {
  double l_loc_1 = kInfinity;
  double l_loc_2 = kInfinity;
};

AndersonLengths anderson_lengths(const CoefficientStats& stats, double alpha = 9.0);

enum class Verdict { localized, delocalized, marginal };
std::string to_string(Verdict v);

struct XiResult {
  double xi = 0;
  Verdict verdict = Verdict::marginal;
};

XiResult xi_criterion(double l_loc, double c, double d, double R, double S_C, double xi_low = 0.3,
                      double xi_high = 3.0);

struct RatioResult {
  double ratio = 0;
  Verdict verdict = Verdict::marginal;
};

RatioResult single_particle_criterion(double l_loc, double c, double d, int D, double L, double threshold = 0.3);

double phase_drift_length_2d(double gamma_bar, double w, double b = 4.934802200544679);

struct ContinuumLengths {
  double mean_free_path = 0;
  std::optional<double> l_loc_q;
  double l_loc_integrated = 0;
};

ContinuumLengths continuum_calculator(double J, double W, double Delta, std::optional<double> q = std::nullopt);

struct LocalizationReport {
  CoefficientStats stats;
  double l_loc_0 = kInfinity;
  double l_loc_1 = kInfinity;
  double l_loc_2 = kInfinity;
  double l_loc = kInfinity;
  double xi = 0;
  double R = 0;
  double S_C = 0;
  Verdict verdict = Verdict::marginal;
};

struct ReportOptions {
  StatsOptions stats;
  double alpha = 9.0;
  double xi_low = 0.3;
  double xi_high = 3.0;
};

LocalizationReport localization_report(const TridiagonalMatrix& tri, double c, double d, double R, double S_C,
                                       const ReportOptions& opts = {});

// Standard deviation of h over [k - half, k + half] clipped to the matrix.
double windowed_std(std::span<const double> h, std::size_t k, std::size_t half);

}  // namespace kryloc
