#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "kryloc/basis.hpp"
#include "kryloc/errors.hpp"
#include "kryloc/operator.hpp"

using namespace kryloc;

namespace {

// Counts configurations of N spins s with sum 2m = twice_M by full enumeration.
std::size_t brute_force_count(int N, int twice_s, int twice_M) {
  const int base = twice_s + 1;
  std::size_t total = 1, count = 0;
  for (int i = 0; i < N; ++i) total *= static_cast<std::size_t>(base);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    int sum = 0;
    for (int i = 0; i < N; ++i) {
      sum += 2 * static_cast<int>(c % base) - twice_s;
      c /= base;
    }
    count += sum == twice_M;
  }
  return count;
}

}  // namespace

TEST_CASE("spin sector dimension matches brute-force enumeration") {
  CHECK(MicrostateBasis::spin_sector(9, 1.0, 0.0).dim() == brute_force_count(9, 2, 0));
  CHECK(MicrostateBasis::spin_sector(9, 1.0, 0.0).dim() == 3139);
  CHECK(MicrostateBasis::spin_sector(4, 0.5, 0.0).dim() == 6);
  CHECK(MicrostateBasis::spin_sector(5, 1.5, 0.5).dim() == brute_force_count(5, 3, 1));
  CHECK(MicrostateBasis::spin_sector(6, 2.0, 3.0).dim() == brute_force_count(6, 4, 6));
  CHECK(MicrostateBasis::spin_sector(3, 1.0, 3.0).dim() == 1);
}

TEST_CASE("spin sector is lexicographic and indices round-trip") {
  const auto b = MicrostateBasis::spin_sector(5, 1.0, 1.0);
  for (std::size_t i = 0; i < b.dim(); ++i) {
    auto m = b.twice_m(i);
    int sum = std::accumulate(m.begin(), m.end(), 0);
    CHECK(sum == 2);
    std::vector<int> v(m.begin(), m.end());
    CHECK(b.index_of_spins(v) == i);
    if (i > 0) {
      auto p = b.twice_m(i - 1);
      CHECK(std::lexicographical_compare(p.begin(), p.end(), m.begin(), m.end()));
    }
  }
  std::vector<int> outside{2, 2, 2, 2, 2};
  CHECK_FALSE(b.find_spins(outside).has_value());
  CHECK(b.spin_label(0) == std::vector<double>{-1, -1, 1, 1, 1});
}

TEST_CASE("empty or inconsistent sectors are rejected") {
  CHECK_THROWS_AS(MicrostateBasis::spin_sector(3, 1.0, 4.0), EmptySectorError);
  CHECK_THROWS_AS(MicrostateBasis::spin_sector(3, 0.5, 0.0), EmptySectorError);
  CHECK_THROWS_AS(MicrostateBasis::spin_sector(3, 0.3, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(MicrostateBasis::spin_sector(0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("lattice basis uses row-major indexing") {
  const auto b = MicrostateBasis::lattice(2, 7);
  CHECK(b.dim() == 49);
  CHECK(b.site(0) == std::vector<int>{0, 0});
  CHECK(b.site(8) == std::vector<int>{1, 1});
  for (std::size_t i = 0; i < b.dim(); ++i) CHECK(b.index_of_site(b.site(i)) == i);
  const auto c = MicrostateBasis::lattice(3, 4);
  CHECK(c.site(4 * 4 * 3 + 4 * 2 + 1) == std::vector<int>{3, 2, 1});
  CHECK_THROWS(MicrostateBasis::lattice(4, 3));
  CHECK_THROWS(MicrostateBasis::lattice(2, 1));
}

TEST_CASE("operator application matches its dense matrix") {
  auto basis = enumerate_lattice(1, 6);
  Eigen::VectorXd diag(6);
  diag << 0.5, -1, 2, 0, 0.25, 3;
  std::vector<Coupling> cs{{0, 1, 1.0}, {1, 2, -0.5}, {2, 5, 0.75}, {3, 4, 2.0}};
  HamiltonianOperator H(basis, diag, cs);
  const Eigen::MatrixXd M = H.to_dense();
  CHECK((M - M.transpose()).norm() == 0.0);
  CHECK(M(2, 5) == 0.75);
  CHECK(M(5, 2) == 0.75);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Eigen::VectorXcd x(6);
  for (int i = 0; i < 6; ++i) x[i] = {g(rng), g(rng)};
  Eigen::VectorXcd y;
  H.apply_into(x, y);
  CHECK((y - M.cast<std::complex<double>>() * x).norm() < 1e-14);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  CHECK(es.eigenvalues().cwiseAbs().maxCoeff() <= H.norm_estimate() + 1e-12);
}

TEST_CASE("expectation of a basis state is its diagonal entry") {
  auto basis = enumerate_lattice(1, 3);
  Eigen::VectorXd diag(3);
  diag << 1, 2, 3;
  HamiltonianOperator H(basis, diag, {{0, 1, 1.0}, {1, 2, 1.0}});
  CHECK(expectation(H, StateVector::basis_state(basis, 1)).real() == doctest::Approx(2.0));
  StateVector v{basis, Eigen::VectorXcd::Ones(3)};
  v.normalize();
  CHECK(v.norm() == doctest::Approx(1.0));
  CHECK(expectation(H, v).real() == doctest::Approx((6.0 + 4.0) / 3.0));
}

TEST_CASE("malformed operators are rejected") {
  auto basis = enumerate_lattice(1, 3);
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(3);
  CHECK_THROWS(HamiltonianOperator(basis, diag, {{1, 0, 1.0}}));
  CHECK_THROWS(HamiltonianOperator(basis, diag, {{0, 1, 1.0}, {0, 1, 2.0}}));
  CHECK_THROWS(HamiltonianOperator(basis, diag, {{0, 3, 1.0}}));
  CHECK_THROWS(HamiltonianOperator(basis, Eigen::VectorXd::Zero(2), {}));
  HamiltonianOperator H(basis, diag, {});
  CHECK_THROWS(apply(H, StateVector::basis_state(enumerate_lattice(1, 3), 0)));
  CHECK_THROWS(StateVector::basis_state(basis, 3));
}
