#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kryloc/lanczos.hpp"
#include "kryloc/operator.hpp"

namespace kryloc {

struct ObservableMatrix {
  Eigen::MatrixXcd entries;               // <p|B|q> in the Krylov basis
  std::vector<double> bandwidth_profile;  // share of sum |B_pq|^2 at |p - q| = j
  std::size_t effective_bandwidth = 0;    // smallest j* holding 95% of the weight

  Eigen::MatrixXd real() const { return entries.real(); }
};

enum class ObservableProfile { linear, cosine };

// Banded Krylov-basis observable: B_pq = f((p+q)/2) on the diagonal and
// a f((p+q)/2) exp(-|p-q|/ell) for 0 < |p-q| <= jmax, with
// f(x) = 0.2 + x/n (linear) or 1 + cos(pi x/n)/2 (cosine).
Eigen::MatrixXd banded_observable(std::size_t n, ObservableProfile profile, double ell, double a, std::size_t jmax);

ObservableMatrix observable_in_krylov(const HamiltonianOperator& B, const LanczosResult& res);
ObservableMatrix observable_from_matrix(const Eigen::MatrixXd& B);

struct EthExpectations {
  std::vector<double> energies;
  std::vector<double> expectations;  // <Psi_q|B|Psi_q>, sorted by energy
  std::vector<double> centroid;      // sum_p p |<p|Psi_q>|^2
  double smoothness = 0;
};

// Std of consecutive differences over the central half, over the full range.
double smoothness_metric(const std::vector<double>& values);

// Eigenstates of the Lanczos matrix by Sturm bisection and inverse iteration;
// B is given in the same Krylov basis.
EthExpectations eigenstate_expectations(const TridiagonalMatrix& tri, const Eigen::MatrixXd& B);
// Dense eigenstates of H; both operators on the same microstate basis.
EthExpectations eigenstate_expectations(const HamiltonianOperator& H, const HamiltonianOperator& B,
                                        std::size_t dense_limit = 8192);

enum class WkbDispersion { lattice, continuum };

struct WkbOptions {
  WkbDispersion dispersion = WkbDispersion::lattice;
  std::size_t smoothing = 1;  // moving-average width applied to h and Gamma
  bool two_sided = true;
  std::size_t match_half_width = 10;
};

struct WkbEigenstate {
  double E = 0;
  std::vector<double> c;        // amplitude envelope, sum c^2 = 1 over the allowed region
  std::vector<double> k_local;  // local wavevector, 0 where forbidden
  std::vector<double> E_local;  // band edge h_j + 2 Gamma_j
  std::vector<double> psi;      // real standing wave, unit norm
  double alpha = 0;             // normalization of the raw envelope
};

// Lattice dispersion uses cos k = (E - h_j)/(2 Gamma_j) with |c_j|^2 ~ 1/(Gamma_j sin k);
// the continuum form uses k = sqrt((E_j - E)/Gamma_j) with |c_j|^2 ~ 1/(Gamma_j k).
WkbEigenstate wkb_eigenstate(const TridiagonalMatrix& tri, double E, const WkbOptions& opts = {});
double wkb_overlap(const WkbEigenstate& w, const Eigen::VectorXd& exact);

enum class FourierEnvelope { exact, wkb };

struct FourierOptions {
  std::size_t smoothing = 9;
  FourierEnvelope envelope = FourierEnvelope::exact;
  double bandwidth_limit = 0.1;  // fraction of n
};

struct FourierCheck {
  double exact = 0;
  double approx = 0;
  double rel_error = 0;
  std::size_t bandwidth = 0;
  std::string warning;
};

FourierCheck fourier_expectation_check(const TridiagonalMatrix& tri, const ObservableMatrix& B, double E_q,
                                       const Eigen::VectorXd& psi_q, const FourierOptions& opts = {});
FourierCheck fourier_expectation_check(const TridiagonalMatrix& tri, const Eigen::MatrixXd& B, std::size_t q,
                                       const FourierOptions& opts = {});

}  // namespace kryloc
