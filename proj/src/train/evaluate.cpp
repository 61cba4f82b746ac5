#include "sme/error.hpp"
#include "sme/train/train.hpp"

namespace sme {

Matrix predict_all(const Model& model, const Dataset& dataset, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), model.heads.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const Prediction p = predict(model, dataset.records.at(indices[i]));
    for (std::size_t s = 0; s < p.y.size(); ++s) out(i, s) = p.y[s];
  }
  return out;
}

TaskMetrics evaluate(const Model& model, const Dataset& dataset, std::span<const std::size_t> indices,
                     const TargetTransform& transform, bool original_space) {
  if (indices.empty()) throw ArgumentError("evaluate: no rows to evaluate");
  const Matrix pred = predict_all(model, dataset, indices);
  std::vector<TaskMetric> per_task;
  for (std::size_t s = 0; s < model.heads.size(); ++s) {
    const std::size_t task = model.heads[s].task;
    const TaskTransform& tt = transform.tasks.at(task);
    Vector y(indices.size());
    Vector y_hat(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const double raw = dataset.records[indices[i]].labels[task];
      if (original_space) {
        y[i] = raw;
        y_hat[i] = tt.invert(pred(i, s));
      } else {
        y[i] = tt.apply(raw);
        y_hat[i] = pred(i, s);
      }
    }
    per_task.push_back(compute_task_metric(model.config.task_names[task], y, y_hat));
  }
  return aggregate(std::move(per_task));
}

std::vector<double> mean_active_counts(const Model& model, const Dataset& dataset,
                                       std::span<const std::size_t> indices) {
  std::vector<double> sums(model.heads.size(), 0.0);
  if (indices.empty()) return sums;
  for (std::size_t idx : indices) {
    const Prediction p = predict(model, dataset.records.at(idx), true);
    for (std::size_t s = 0; s < model.heads.size(); ++s) {
      sums[s] += static_cast<double>(p.gates[2 * s].active_count + p.gates[2 * s + 1].active_count);
    }
  }
  for (double& v : sums) v /= 2.0 * static_cast<double>(indices.size());
  return sums;
}

}  // namespace sme
