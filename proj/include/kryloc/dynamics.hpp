#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kryloc/lanczos.hpp"
#include "kryloc/operator.hpp"

namespace kryloc {

struct EvolutionTrace {
  std::vector<double> times;
  Eigen::MatrixXcd krylov_weights;  // row t, column k: <k|psi(t)>
  std::vector<double> spread_complexity;
  std::vector<double> last_state_pop;
};

/// Propagates |0> under the Lanczos matrix through its eigendecomposition.
EvolutionTrace evolve_krylov(const TridiagonalMatrix& tri, const std::vector<double>& times);

enum class PropagationPath { automatic, dense, krylov };

struct EvolveOptions {
  PropagationPath path = PropagationPath::automatic;
  std::size_t dense_limit = 8192;
  std::size_t krylov_dim = 30;
  /// Per-step bound on the amplitude left in the last Krylov vector.
  double step_tol = 1e-10;
};

struct Trajectory {
  BasisPtr basis;
  std::vector<double> times;
  std::vector<Eigen::VectorXcd> states;
  PropagationPath path = PropagationPath::dense;
};

/// psi(t) = exp(-iHt) psi0. Dense eigendecomposition up to dense_limit,
/// restarted short-step Krylov propagation above it.
Trajectory evolve_full(const HamiltonianOperator& H, const StateVector& psi0, const std::vector<double>& times,
                       const EvolveOptions& opts = {});

struct EntropyTrace {
  std::vector<double> times;
  std::vector<double> S_D;
  std::vector<double> S_B;            // empty unless the basis is a spin sector
  std::vector<double> S_B_corrected;  // F * S_B
  double S_C = 0;
  double F = 0;  // S_C / S_B(t_final); 0 without S_B
  std::vector<double> populated_fraction;             // exp(S_D - S_C)
  std::vector<double> populated_fraction_boltzmann;   // exp(F S_B - S_C)
};

double diagonal_entropy(const Eigen::VectorXcd& psi);
double boltzmann_entropy(const Eigen::VectorXcd& psi, const MicrostateBasis& basis);

EntropyTrace entropy_trace(const Trajectory& traj);

struct GuardResult {
  bool passed = true;
  double max_population = 0;
  std::string note;
  explicit operator bool() const { return passed; }
};

/// max_t |w_{n-1}(t)|^2 < 1/(10 n); vacuously true when the Krylov space was exhausted.
GuardResult last_state_guard(const EvolutionTrace& trace, std::size_t n, bool exhausted = false);

/// Mean of the last `fraction` of a time series (at least one sample).
double tail_average(const std::vector<double>& values, double fraction = 0.2);

std::vector<double> linspace(double a, double b, std::size_t n);

}  // namespace kryloc
