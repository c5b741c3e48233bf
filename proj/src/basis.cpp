#include "kryloc/basis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "kryloc/errors.hpp"

namespace kryloc {

namespace {

int twice_of(double x, const char* what) {
  double t = 2.0 * x;
  if (std::abs(t - std::round(t)) > 1e-9)
    throw std::invalid_argument(std::string(what) + " must be a multiple of 1/2");
  return static_cast<int>(std::lround(t));
}

}  // namespace

MicrostateBasis MicrostateBasis::lattice(int D, int L) {
  if (D < 1 || D > 3) throw std::invalid_argument("lattice dimension must be 1, 2 or 3");
  if (L < 2) throw std::invalid_argument("lattice extent must be >= 2");
  MicrostateBasis b;
  b.kind_ = BasisKind::lattice;
  b.D_ = D;
  b.L_ = L;
  b.dim_ = 1;
  for (int a = 0; a < D; ++a) b.dim_ *= static_cast<std::size_t>(L);
  return b;
}

MicrostateBasis MicrostateBasis::spin_sector(int N, double s, double Mz) {
  if (N < 1) throw std::invalid_argument("site count must be >= 1");
  const int ts = twice_of(s, "spin");
  const int tM = twice_of(Mz, "magnetization");
  if (ts < 1) throw std::invalid_argument("spin must be positive");
  if (std::abs(tM) > N * ts || (N * ts - tM) % 2 != 0)
    throw EmptySectorError("no configuration of " + std::to_string(N) + " spins s=" +
                           std::to_string(s) + " has total magnetization " + std::to_string(Mz));

  const std::uint64_t base = static_cast<std::uint64_t>(ts) + 1;
  long double span = 1;
  for (int i = 0; i < N; ++i) span *= base;
  if (span > 9.2e18L) throw std::invalid_argument("spin sector too large to index");

  MicrostateBasis b;
  b.kind_ = BasisKind::spin_sector;
  b.N_ = N;
  b.twice_s_ = ts;
  b.twice_M_ = tM;

  // Depth-first in lexicographic order, pruning branches whose remaining sum is unreachable.
  std::vector<int> cur(N);
  auto rec = [&](auto&& self, int i, int remaining) -> void {
    if (i == N) {
      std::uint64_t key = 0;
      for (int j = 0; j < N; ++j) {
        b.labels_.push_back(static_cast<std::int8_t>(cur[j]));
        key = key * base + static_cast<std::uint64_t>((cur[j] + ts) / 2);
      }
      b.keys_.push_back(key);
      return;
    }
    const int rest = (N - i - 1) * ts;
    for (int m = -ts; m <= ts; m += 2) {
      int r = remaining - m;
      if (r < -rest || r > rest) continue;
      cur[i] = m;
      self(self, i + 1, r);
    }
  };
  rec(rec, 0, tM);
  b.dim_ = b.keys_.size();
  return b;
}

std::vector<int> MicrostateBasis::site(std::size_t index) const {
  if (kind_ != BasisKind::lattice) throw std::logic_error("site() on a spin basis");
  if (index >= dim_) throw std::out_of_range("site index out of range");
  std::vector<int> c(D_);
  for (int a = D_ - 1; a >= 0; --a) {
    c[a] = static_cast<int>(index % L_);
    index /= L_;
  }
  return c;
}

std::size_t MicrostateBasis::index_of_site(std::span<const int> coords) const {
  if (kind_ != BasisKind::lattice) throw std::logic_error("index_of_site() on a spin basis");
  if (static_cast<int>(coords.size()) != D_) throw std::invalid_argument("coordinate rank mismatch");
  std::size_t idx = 0;
  for (int c : coords) {
    if (c < 0 || c >= L_) throw std::out_of_range("site outside lattice");
    idx = idx * L_ + c;
  }
  return idx;
}

std::span<const std::int8_t> MicrostateBasis::twice_m(std::size_t index) const {
  if (kind_ != BasisKind::spin_sector) throw std::logic_error("twice_m() on a lattice basis");
  if (index >= dim_) throw std::out_of_range("spin configuration index out of range");
  return {labels_.data() + index * N_, static_cast<std::size_t>(N_)};
}

std::vector<double> MicrostateBasis::spin_label(std::size_t index) const {
  auto t = twice_m(index);
  std::vector<double> m(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) m[i] = t[i] / 2.0;
  return m;
}

std::optional<std::size_t> MicrostateBasis::find_spins(std::span<const int> tm) const {
  if (kind_ != BasisKind::spin_sector) throw std::logic_error("find_spins() on a lattice basis");
  if (static_cast<int>(tm.size()) != N_) return std::nullopt;
  const std::uint64_t base = static_cast<std::uint64_t>(twice_s_) + 1;
  std::uint64_t key = 0;
  int sum = 0;
  for (int m : tm) {
    if (m < -twice_s_ || m > twice_s_ || (m + twice_s_) % 2 != 0) return std::nullopt;
    key = key * base + static_cast<std::uint64_t>((m + twice_s_) / 2);
    sum += m;
  }
  if (sum != twice_M_) return std::nullopt;
  auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
  if (it == keys_.end() || *it != key) return std::nullopt;
  return static_cast<std::size_t>(it - keys_.begin());
}

std::size_t MicrostateBasis::index_of_spins(std::span<const int> tm) const {
  auto r = find_spins(tm);
  if (!r) throw std::out_of_range("configuration not in this sector");
  return *r;
}

BasisPtr enumerate_spin_sector(int N, double s, double Mz) {
  return std::make_shared<const MicrostateBasis>(MicrostateBasis::spin_sector(N, s, Mz));
}

BasisPtr enumerate_lattice(int D, int L) {
  return std::make_shared<const MicrostateBasis>(MicrostateBasis::lattice(D, L));
}

}  // namespace kryloc
