#pragma once

#include <cstdint>
#include <vector>

#include "sme/data/dataset.hpp"

namespace sme {

struct SplitRatios {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

enum class SplitPart { train, val, test };

SplitPart parse_split_part(std::string_view s);

struct SplitAssignment {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;

  const std::vector<std::size_t>& part(SplitPart p) const;
  bool operator==(const SplitAssignment&) const = default;
};

// Seeded uniform shuffle of 0..K-1 cut at floor(train*K) and
// floor(train*K) + floor(val*K); test takes the remainder.
SplitAssignment split_indices(std::size_t count, const SplitRatios& ratios, std::uint64_t seed);

SplitAssignment split_dataset(const Dataset& dataset, const SplitRatios& ratios, std::uint64_t seed);

}  // namespace sme
