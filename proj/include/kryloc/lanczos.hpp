#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kryloc/operator.hpp"

namespace kryloc {

/// Symmetric tridiagonal (Jacobi) matrix: diagonal h_0..h_{n-1} and
/// off-diagonal gamma_0..gamma_{n-2}, gamma_k coupling states k and k+1.
struct TridiagonalMatrix {
  std::vector<double> h;
  std::vector<double> gamma;

  std::size_t size() const { return h.size(); }
  /// Leading n x n block.
  TridiagonalMatrix leading(std::size_t n) const;
  Eigen::MatrixXd to_dense() const;
};

struct LanczosOptions {
  std::size_t n_max = 200;
  /// Breakdown threshold relative to the operator's max-row-sum norm.
  double termination_tol = 1e-10;
  bool store_vectors = true;
};

enum class Termination { requested, exhausted, dimension };

struct LanczosResult {
  TridiagonalMatrix tri;
  BasisPtr basis;
  /// Krylov vectors |0>..|n-1>; empty when store_vectors is false.
  std::vector<Eigen::VectorXcd> vectors;
  bool terminated_early = false;
  Termination reason = Termination::requested;
  /// Largest |<j|r>|/|r| seen in the second orthogonalization pass, per step.
  std::vector<double> reorthogonalization_log;

  std::size_t size() const { return tri.size(); }
};

/// Three-term Lanczos recurrence with full (two-pass) reorthogonalization.
///
/// Stops after n_max vectors or when the residual norm falls below
/// termination_tol * |H|_est (Krylov space exhausted). Requests beyond the
/// basis dimension are truncated and flagged.
LanczosResult lanczos_iterate(const HamiltonianOperator& H, const StateVector& psi0,
                              const LanczosOptions& opts = {});

/// |<microstate|k>|^2 over the microstate basis.
std::vector<double> krylov_microstate_weights(const LanczosResult& res, std::size_t k);

struct RadialProfile {
  double mean = 0;
  double std = 0;
};

/// Weighted mean and standard deviation of the Euclidean site radius.
RadialProfile radial_profile(const std::vector<double>& weights, const MicrostateBasis& basis);
/// Same aggregation with the Manhattan radius p + q + ...
RadialProfile manhattan_profile(const std::vector<double>& weights, const MicrostateBasis& basis);

/// Max |<i|j> - delta_ij| over the stored vectors.
double orthogonality_defect(const LanczosResult& res);

/// Writes <prefix>.json (header and coefficients) and, when vectors are stored,
/// <prefix>.bin (little-endian float64 (re, im) pairs, one vector per row).
void save_lanczos(const LanczosResult& res, const std::filesystem::path& prefix);
LanczosResult load_lanczos(const std::filesystem::path& prefix, BasisPtr basis);

}  // namespace kryloc
