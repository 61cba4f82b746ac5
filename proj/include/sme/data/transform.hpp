#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sme/data/dataset.hpp"

namespace sme {

enum class TargetScale { identity, log1p };

// What the user asked for per task; `automatic` resolves to log1p when all
// training labels of the task are nonnegative and to identity otherwise.
enum class ScaleRequest { identity, log1p, automatic };

ScaleRequest parse_scale_request(std::string_view s);
std::string_view to_string(ScaleRequest r);
std::string_view to_string(TargetScale s);
TargetScale parse_target_scale(std::string_view s);

struct TaskTransform {
  TargetScale scale = TargetScale::identity;
  double mean = 0.0;
  double std = 1.0;
  bool std_clamped = false;

  double apply(double y) const;
  double invert(double v) const;
};

struct TargetTransform {
  std::vector<TaskTransform> tasks;

  // K x T matrix of transformed labels, rows aligned with dataset.records.
  Matrix apply_all(const Dataset& dataset) const;

  static TargetTransform identity(std::size_t num_tasks);
};

// Fits f in {identity, log1p} then a z-score on the training rows only.
// A zero standard deviation is clamped to 1 and flagged.
TargetTransform fit_target_transform(const Dataset& dataset, std::span<const std::size_t> train,
                                     std::span<const ScaleRequest> per_task);

}  // namespace sme
