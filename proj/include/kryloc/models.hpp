#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "kryloc/lanczos.hpp"
#include "kryloc/operator.hpp"

namespace kryloc {

struct AndersonConfig {
  int D = 2;
  int L = 60;
  double J = -1.0;
  double w_half = 0.0;
  std::uint64_t seed = 0;
};

struct DipolarConfig {
  int nx = 3, ny = 3;
  double s = 1.0;
  double V = 1.0;
  double Q = 0.0;
  // Pairs farther apart than this are dropped; infinity keeps every pair.
  double coupling_cutoff = std::numeric_limits<double>::infinity();
  // Per-site m of the initial product state; empty means all zero.
  std::vector<double> initial;
  std::optional<double> Mz;
};

struct EnsembleConfig {
  int n = 400;
  double gamma_bar = 4.0;
  double W = 0.1;
  double var_gamma = 0.0;
  double drift_amplitude = 0.0;
  std::uint64_t seed = 0;
};

HamiltonianOperator build_anderson(const AndersonConfig& cfg);

HamiltonianOperator build_dipolar_plaquette(const DipolarConfig& cfg);
std::vector<double> dipolar_initial_state(const DipolarConfig& cfg);
StateVector dipolar_initial_vector(const DipolarConfig& cfg, const HamiltonianOperator& H);

TridiagonalMatrix build_random_tridiagonal(const EnsembleConfig& cfg);

}  // namespace kryloc
