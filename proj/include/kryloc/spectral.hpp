#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kryloc/lanczos.hpp"

namespace kryloc {

// Number of eigenvalues of the leading n x n block strictly below lambda,
// from the sign pattern of the ratio form of the determinant recursion.
std::size_t sturm_count(const TridiagonalMatrix& tri, std::size_t n, double lambda);

// Sorted eigenvalues of the leading n x n block by bisection. Zero couplings
// split the matrix into independent blocks.
std::vector<double> sturm_eigenvalues(const TridiagonalMatrix& tri, std::size_t n);
std::vector<double> sturm_eigenvalues(const TridiagonalMatrix& tri);

// Unit eigenvectors of the leading block by inverse iteration, one per
// supplied eigenvalue; nearby eigenvalues are orthogonalized as a cluster.
Eigen::MatrixXd inverse_iteration(const TridiagonalMatrix& tri, const std::vector<double>& eigenvalues);
Eigen::VectorXd inverse_iteration(const TridiagonalMatrix& tri, double eigenvalue);

struct InterlacingResult {
  bool ok = true;
  double max_violation = 0;
};

// Checks lambda_k^n <= lambda_k^{n-1} <= lambda_{k+1}^n, tolerance 1e-9 times
// the spectral width; per block if the matrix splits.
InterlacingResult interlacing_check(const TridiagonalMatrix& tri, std::size_t n);

struct FixedPointScan {
  std::vector<double> lambda, L, R, R_log_abs, R0;
  std::vector<int> R_sign;
  std::vector<std::size_t> pole;  // index k0 of the nearest order n-1 eigenvalue
  std::vector<double> skipped;    // grid points sitting on a pole
};

// L(lambda) = (h_n - lambda)/Gamma_{n-1}^2 and
// R(lambda) = prod(lambda^{n-2} - lambda)/prod(lambda^{n-1} - lambda), the two
// sides of the eigenvalue condition of the order-n block. R0 keeps only the
// nearest pole and scales it by beta (default 1/gamma_bar).
FixedPointScan fixed_point_scan(const TridiagonalMatrix& tri, std::size_t n,
                                const std::vector<double>& lambda_grid, double beta = 0);

struct RepulsionPrediction {
  double predicted = 0;
  double factor = 0;  // Gamma_{n-1}^2 / (Gamma_{n-1}^2 - gamma_bar h_n)
  double exact = 0;   // nearest order-n eigenvalue
  double local_spacing = 0;
  double error = 0;   // |predicted - exact| / local_spacing
  double e_ref = 0;
  bool flagged = false;
};

struct RepulsionOptions {
  // Energies are measured from the mean of the last ref_window diagonal
  // entries of the order-n block; 0 measures from the origin.
  std::size_t ref_window = 9;
  double denominator_tol = 1e-8;
};

// Propagated eigenvalue of the order-n block (n is 1-based, k 0-based, k < n-2)
// from lambda_k^{n-1} and lambda_k^{n-2}.
RepulsionPrediction repulsion_propagation(const TridiagonalMatrix& tri, std::size_t n, std::size_t k,
                                          const RepulsionOptions& opts = {});

// Same, reusing precomputed eigenvalue lists of orders n-2, n-1, n.
RepulsionPrediction repulsion_propagation(const TridiagonalMatrix& tri, std::size_t n, std::size_t k,
                                          const std::vector<double>& ev_n2, const std::vector<double>& ev_n1,
                                          const std::vector<double>& ev_n, const RepulsionOptions& opts = {});

struct PropagationRecord {
  std::size_t n = 0, k = 0;
  RepulsionPrediction prediction;
};

// Propagation over orders n = n_min, n_min + n_step, ... <= size, keeping the
// k with |lambda_k^{n-1} - e_ref| <= mid_band * gamma_bar (mean coupling of
// the order-n block).
std::vector<PropagationRecord> propagation_sweep(const TridiagonalMatrix& tri, std::size_t n_min,
                                                 std::size_t n_step, double mid_band,
                                                 const RepulsionOptions& opts = {});

struct SpectralReport {
  std::vector<double> eigenvalues;
  std::vector<double> spacings;           // raw, central part
  std::vector<double> unfolded_spacings;  // mean exactly 1
  double bin_width = 0.1;
  std::vector<double> bin_centers;
  std::vector<std::size_t> histogram;
  std::vector<double> density;
  std::vector<double> wigner_ref, poisson_ref;
  double repulsion_metric = 0;  // fraction of s < 0.25
  double ks_statistic = 0;      // against e^{-s}
  double ks_pvalue = 0;
  std::vector<std::string> warnings;
};

struct SpacingOptions {
  double mid_fraction = 0.5;
  std::size_t unfold_window = 15;
  double bin_width = 0.1;
  double s_max = 4.0;
  double repulsion_cut = 0.25;
};

SpectralReport spacing_statistics(std::vector<double> eigenvalues, const SpacingOptions& opts = {});

double wigner_surmise(double s);
double poisson_density(double s);

struct KsResult {
  double statistic = 0;
  double pvalue = 0;
};

// One-sample Kolmogorov-Smirnov test of samples against the unit exponential.
KsResult ks_exponential(std::vector<double> samples);
// Asymptotic Kolmogorov survival function Q_KS(x) = 2 sum (-1)^{j-1} exp(-2 j^2 x^2).
double kolmogorov_q(double x);

}  // namespace kryloc
