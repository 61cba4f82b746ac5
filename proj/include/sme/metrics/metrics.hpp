#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sme {

// 1 - SS_res / SS_tot with SS_tot about the mean of y. nullopt when y has
// fewer than two entries or zero variance.
std::optional<double> r2(std::span<const double> y, std::span<const double> y_hat);
double rmse(std::span<const double> y, std::span<const double> y_hat);
double mae(std::span<const double> y, std::span<const double> y_hat);

struct TaskMetric {
  std::string task;
  std::optional<double> r2;
  double rmse = 0.0;
  double mae = 0.0;
};

TaskMetric compute_task_metric(std::string task, std::span<const double> y,
                               std::span<const double> y_hat);

struct TaskMetrics {
  std::vector<TaskMetric> tasks;
  std::optional<double> avg_r2;  // undefined if any task's r2 is
  double avg_rmse = 0.0;
  double avg_mae = 0.0;

  const TaskMetric& task(std::string_view name) const;
};

// Unweighted means across tasks.
TaskMetrics aggregate(std::vector<TaskMetric> per_task);

}  // namespace sme
