#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace relabel {

// Seeded random source with pinned sampling algorithms. std::mt19937_64 output
// is fully specified by the standard, and all derived draws below avoid
// std::*_distribution (whose algorithms are implementation-defined), so a seed
// produces the same stream on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection sampling keeps the draw exact.
  int uniform_int(int n) {
    const std::uint64_t nn = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % nn;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return static_cast<int>(x % nn);
  }

  // Fisher-Yates with fixed draw order.
  template <typename T>
  void shuffle(std::vector<T>& xs) {
    for (int i = static_cast<int>(xs.size()) - 1; i > 0; --i) {
      const int j = uniform_int(i + 1);
      std::swap(xs[static_cast<std::size_t>(i)], xs[static_cast<std::size_t>(j)]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace relabel
