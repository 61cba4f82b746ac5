#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sme {

// xoshiro256** seeded through splitmix64. Every derived draw (uniform,
// normal, Poisson, shuffles) is implemented here rather than through
// <random> distributions, whose algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64();

  // [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  // Standard normal (Box-Muller, one value cached).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Poisson by sequential inversion; lambda is clamped to [0, 500].
  std::uint64_t poisson(double lambda);

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // Independent child stream, e.g. one per training run.
  Rng fork(std::uint64_t stream);

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sme
