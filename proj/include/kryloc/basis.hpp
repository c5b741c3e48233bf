#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace kryloc {

enum class BasisKind { lattice, spin_sector };

/// Dense indexing of the microstates spanned by a model.
///
/// Lattice bases hold the sites {0..L-1}^D in row-major order. Spin-sector
/// bases hold the configurations (m_1..m_N) with fixed total magnetization in
/// lexicographic order; labels are stored as 2*m so half-integer spins stay
/// exact.
class MicrostateBasis {
 public:
  static MicrostateBasis lattice(int D, int L);
  static MicrostateBasis spin_sector(int N, double s, double Mz);

  BasisKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }

  int dimension() const { return D_; }
  int extent() const { return L_; }
  std::vector<int> site(std::size_t index) const;
  std::size_t index_of_site(std::span<const int> coords) const;

  int sites() const { return N_; }
  double spin() const { return twice_s_ / 2.0; }
  int twice_spin() const { return twice_s_; }
  double magnetization() const { return twice_M_ / 2.0; }
  std::span<const std::int8_t> twice_m(std::size_t index) const;
  std::vector<double> spin_label(std::size_t index) const;
  std::optional<std::size_t> find_spins(std::span<const int> twice_m) const;
  std::size_t index_of_spins(std::span<const int> twice_m) const;

 private:
  MicrostateBasis() = default;

  BasisKind kind_ = BasisKind::lattice;
  std::size_t dim_ = 0;
  int D_ = 0, L_ = 0;
  int N_ = 0, twice_s_ = 0, twice_M_ = 0;
  std::vector<std::int8_t> labels_;
  std::vector<std::uint64_t> keys_;
};

using BasisPtr = std::shared_ptr<const MicrostateBasis>;

BasisPtr enumerate_spin_sector(int N, double s, double Mz);
BasisPtr enumerate_lattice(int D, int L);

}  // namespace kryloc
