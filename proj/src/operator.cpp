#include "kryloc/operator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace kryloc {

StateVector StateVector::basis_state(BasisPtr basis, std::size_t index) {
  if (!basis) throw std::invalid_argument("null basis");
  if (index >= basis->dim()) throw std::out_of_range("basis state index out of range");
  StateVector v{basis, Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis->dim()))};
  v.amplitudes[static_cast<Eigen::Index>(index)] = 1.0;
  return v;
}

void StateVector::normalize() {
  double n = amplitudes.norm();
  if (n == 0.0) throw std::domain_error("cannot normalize the zero vector");
  amplitudes /= n;
}

HamiltonianOperator::HamiltonianOperator(BasisPtr basis, Eigen::VectorXd diagonal,
                                         std::vector<Coupling> couplings, double d_strength,
                                         double c_strength)
    : basis_(std::move(basis)),
      diagonal_(std::move(diagonal)),
      couplings_(std::move(couplings)),
      d_strength_(d_strength),
      c_strength_(c_strength) {
  if (!basis_) throw std::invalid_argument("null basis");
  const std::size_t n = basis_->dim();
  if (static_cast<std::size_t>(diagonal_.size()) != n)
    throw std::invalid_argument("diagonal length does not match basis dimension");
  for (const auto& c : couplings_) {
    if (c.a >= c.b) throw std::invalid_argument("coupling must satisfy index_a < index_b");
    if (c.b >= n) throw std::out_of_range("coupling index outside basis");
  }
  std::sort(couplings_.begin(), couplings_.end(), [](const Coupling& x, const Coupling& y) {
    return x.a != y.a ? x.a < y.a : x.b < y.b;
  });
  for (std::size_t i = 1; i < couplings_.size(); ++i)
    if (couplings_[i].a == couplings_[i - 1].a && couplings_[i].b == couplings_[i - 1].b)
      throw std::invalid_argument("duplicate coupling (" + std::to_string(couplings_[i].a) + ", " +
                                  std::to_string(couplings_[i].b) + ")");

  Eigen::VectorXd rows = diagonal_.cwiseAbs();
  for (const auto& c : couplings_) {
    rows[static_cast<Eigen::Index>(c.a)] += std::abs(c.value);
    rows[static_cast<Eigen::Index>(c.b)] += std::abs(c.value);
  }
  norm_est_ = n ? rows.maxCoeff() : 0.0;
}

namespace {

template <class Vec>
void apply_impl(const Eigen::VectorXd& diag, std::span<const Coupling> couplings, const Vec& x,
                Vec& y) {
  if (x.size() != diag.size()) throw std::invalid_argument("vector length does not match operator");
  y = diag.cwiseProduct(x);
  auto* yp = y.data();
  const auto* xp = x.data();
  for (const auto& c : couplings) {
    yp[c.a] += c.value * xp[c.b];
    yp[c.b] += c.value * xp[c.a];
  }
}

}  // namespace

void HamiltonianOperator::apply_into(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const {
  apply_impl(diagonal_, couplings_, x, y);
}

void HamiltonianOperator::apply_into(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
  apply_impl(diagonal_, couplings_, x, y);
}

Eigen::MatrixXd HamiltonianOperator::to_dense() const {
  const auto n = static_cast<Eigen::Index>(dim());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  M.diagonal() = diagonal_;
  for (const auto& c : couplings_) {
    M(static_cast<Eigen::Index>(c.a), static_cast<Eigen::Index>(c.b)) = c.value;
    M(static_cast<Eigen::Index>(c.b), static_cast<Eigen::Index>(c.a)) = c.value;
  }
  return M;
}

StateVector apply(const HamiltonianOperator& H, const StateVector& v) {
  if (v.basis.get() != H.basis_ptr().get()) throw std::invalid_argument("basis mismatch in apply");
  StateVector out{v.basis, {}};
  H.apply_into(v.amplitudes, out.amplitudes);
  return out;
}

std::complex<double> expectation(const HamiltonianOperator& H, const StateVector& v) {
  StateVector Hv = apply(H, v);
  return v.amplitudes.dot(Hv.amplitudes);
}

}  // namespace kryloc
