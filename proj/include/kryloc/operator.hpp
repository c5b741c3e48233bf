#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "kryloc/basis.hpp"

namespace kryloc {

struct StateVector {
  BasisPtr basis;
  Eigen::VectorXcd amplitudes;

  static StateVector basis_state(BasisPtr basis, std::size_t index);
  double norm() const { return amplitudes.norm(); }
  void normalize();
};

struct Coupling {
  std::size_t a = 0, b = 0;  // a < b
  double value = 0.0;
};

/// Matrix-free Hermitian operator: real diagonal plus a list of symmetric
/// off-diagonal couplings, each stored once.
class HamiltonianOperator {
 public:
  HamiltonianOperator(BasisPtr basis, Eigen::VectorXd diagonal, std::vector<Coupling> couplings,
                      double d_strength = 0.0, double c_strength = 0.0);

  const MicrostateBasis& basis() const { return *basis_; }
  const BasisPtr& basis_ptr() const { return basis_; }
  std::size_t dim() const { return basis_->dim(); }
  const Eigen::VectorXd& diagonal() const { return diagonal_; }
  std::span<const Coupling> couplings() const { return couplings_; }
  double d_strength() const { return d_strength_; }
  double c_strength() const { return c_strength_; }

  // Max absolute row sum, an upper bound on the spectral norm.
  double norm_estimate() const { return norm_est_; }

  void apply_into(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const;
  void apply_into(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;
  Eigen::MatrixXd to_dense() const;

 private:
  BasisPtr basis_;
  Eigen::VectorXd diagonal_;
  std::vector<Coupling> couplings_;
  double d_strength_, c_strength_;
  double norm_est_ = 0.0;
};

StateVector apply(const HamiltonianOperator& H, const StateVector& v);
std::complex<double> expectation(const HamiltonianOperator& H, const StateVector& v);

}  // namespace kryloc
