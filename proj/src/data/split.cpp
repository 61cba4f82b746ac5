#include "sme/data/split.hpp"

#include <cmath>
#include <numeric>
#include <span>

#include "sme/error.hpp"
#include "sme/numcore/rng.hpp"

namespace sme {

SplitPart parse_split_part(std::string_view s) {
  if (s == "train") return SplitPart::train;
  if (s == "val") return SplitPart::val;
  if (s == "test") return SplitPart::test;
  throw ArgumentError("unknown split '" + std::string(s) + "' (expected train|val|test)");
}

const std::vector<std::size_t>& SplitAssignment::part(SplitPart p) const {
  switch (p) {
    case SplitPart::train: return train;
    case SplitPart::val: return val;
    case SplitPart::test: return test;
  }
  return test;
}

SplitAssignment split_indices(std::size_t count, const SplitRatios& ratios, std::uint64_t seed) {
  if (!(ratios.train > 0.0 && ratios.val > 0.0 && ratios.test > 0.0)) {
    throw ArgumentError("split ratios must be positive");
  }
  if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw ArgumentError("split ratios must sum to 1");
  }
  if (count < 3) throw ArgumentError("split needs at least 3 records, got " + std::to_string(count));

  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  // The small slack absorbs representation error such as 0.6 * 10 = 5.999...
  const auto n = static_cast<double>(count);
  const auto n_train = static_cast<std::size_t>(std::floor(ratios.train * n + 1e-9));
  const auto n_val = static_cast<std::size_t>(std::floor(ratios.val * n + 1e-9));

  SplitAssignment s;
  s.seed = seed;
  s.train.assign(order.begin(), order.begin() + n_train);
  s.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  s.test.assign(order.begin() + n_train + n_val, order.end());
  return s;
}

SplitAssignment split_dataset(const Dataset& dataset, const SplitRatios& ratios, std::uint64_t seed) {
  return split_indices(dataset.size(), ratios, seed);
}

}  // namespace sme
