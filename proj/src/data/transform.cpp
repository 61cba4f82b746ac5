#include "sme/data/transform.hpp"

#include <cmath>

#include "sme/error.hpp"

namespace sme {

ScaleRequest parse_scale_request(std::string_view s) {
  if (s == "none" || s == "identity") return ScaleRequest::identity;
  if (s == "log1p") return ScaleRequest::log1p;
  if (s == "auto") return ScaleRequest::automatic;
  throw ConfigError("unknown target transform '" + std::string(s) + "' (expected none|log1p|auto)");
}

std::string_view to_string(ScaleRequest r) {
  switch (r) {
    case ScaleRequest::identity: return "none";
    case ScaleRequest::log1p: return "log1p";
    case ScaleRequest::automatic: return "auto";
  }
  return "auto";
}

std::string_view to_string(TargetScale s) { return s == TargetScale::log1p ? "log1p" : "none"; }

TargetScale parse_target_scale(std::string_view s) {
  if (s == "log1p") return TargetScale::log1p;
  if (s == "none" || s == "identity") return TargetScale::identity;
  throw FormatError("unknown target scale '" + std::string(s) + "'");
}

double TaskTransform::apply(double y) const {
  const double f = scale == TargetScale::log1p ? std::log1p(y) : y;
  return (f - mean) / std;
}

double TaskTransform::invert(double v) const {
  const double f = v * std + mean;
  return scale == TargetScale::log1p ? std::expm1(f) : f;
}

Matrix TargetTransform::apply_all(const Dataset& dataset) const {
  const std::size_t t_count = tasks.size();
  if (t_count != dataset.manifest.num_tasks) {
    throw ShapeError("target transform has " + std::to_string(t_count) + " tasks, dataset has " +
                     std::to_string(dataset.manifest.num_tasks));
  }
  Matrix out(dataset.size(), t_count);
  for (std::size_t k = 0; k < dataset.size(); ++k) {
    for (std::size_t t = 0; t < t_count; ++t) out(k, t) = tasks[t].apply(dataset.records[k].labels[t]);
  }
  return out;
}

TargetTransform TargetTransform::identity(std::size_t num_tasks) {
  return TargetTransform{std::vector<TaskTransform>(num_tasks)};
}

TargetTransform fit_target_transform(const Dataset& dataset, std::span<const std::size_t> train,
                                     std::span<const ScaleRequest> per_task) {
  const std::size_t t_count = dataset.manifest.num_tasks;
  if (train.empty()) throw ArgumentError("fit_target_transform: empty training split");
  if (per_task.size() != t_count) {
    throw ConfigError("target transform lists " + std::to_string(per_task.size()) +
                      " entries for " + std::to_string(t_count) + " tasks");
  }
  TargetTransform out;
  for (std::size_t t = 0; t < t_count; ++t) {
    // Scale choice looks at every record so that val/test labels stay in log1p's domain.
    bool any_negative = false;
    for (const auto& r : dataset.records) any_negative |= r.labels[t] < 0.0;
    for (std::size_t k : train) {
      if (k >= dataset.size()) throw ArgumentError("training index out of range");
    }

    TaskTransform tt;
    switch (per_task[t]) {
      case ScaleRequest::identity: tt.scale = TargetScale::identity; break;
      case ScaleRequest::log1p:
        if (any_negative) {
          throw DataError("log1p transform requested for task '" + dataset.manifest.task_names[t] +
                          "' but it has negative labels");
        }
        tt.scale = TargetScale::log1p;
        break;
      case ScaleRequest::automatic:
        tt.scale = any_negative ? TargetScale::identity : TargetScale::log1p;
        break;
    }

    auto f = [&](double y) { return tt.scale == TargetScale::log1p ? std::log1p(y) : y; };
    const double n = static_cast<double>(train.size());
    double mean = 0.0;
    for (std::size_t k : train) mean += f(dataset.records[k].labels[t]);
    mean /= n;
    double var = 0.0;
    for (std::size_t k : train) {
      const double d = f(dataset.records[k].labels[t]) - mean;
      var += d * d;
    }
    var /= n;
    tt.mean = mean;
    tt.std = std::sqrt(var);
    if (!(tt.std > 0.0)) {
      tt.std = 1.0;
      tt.std_clamped = true;
    }
    out.tasks.push_back(tt);
  }
  return out;
}

}  // namespace sme
