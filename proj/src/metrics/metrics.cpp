#include "sme/metrics/metrics.hpp"

#include <cmath>

#include "sme/error.hpp"

namespace sme {
namespace {

void check(std::span<const double> y, std::span<const double> y_hat, const char* what,
           std::size_t min_len) {
  if (y.size() != y_hat.size()) {
    throw ShapeError(std::string(what) + ": y has " + std::to_string(y.size()) +
                     " entries, y_hat has " + std::to_string(y_hat.size()));
  }
  if (y.size() < min_len) {
    throw ShapeError(std::string(what) + ": needs at least " + std::to_string(min_len) + " entries");
  }
}

}  // namespace

std::optional<double> r2(std::span<const double> y, std::span<const double> y_hat) {
  check(y, y_hat, "r2", 0);
  if (y.size() < 2) return std::nullopt;
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss_tot = 0.0;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_tot += (y[i] - mean) * (y[i] - mean);
    ss_res += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
  }
  if (!(ss_tot > 0.0)) return std::nullopt;
  return 1.0 - ss_res / ss_tot;
}

double rmse(std::span<const double> y, std::span<const double> y_hat) {
  check(y, y_hat, "rmse", 1);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
  return std::sqrt(s / static_cast<double>(y.size()));
}

double mae(std::span<const double> y, std::span<const double> y_hat) {
  check(y, y_hat, "mae", 1);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - y_hat[i]);
  return s / static_cast<double>(y.size());
}

TaskMetric compute_task_metric(std::string task, std::span<const double> y,
                               std::span<const double> y_hat) {
  return {std::move(task), r2(y, y_hat), rmse(y, y_hat), mae(y, y_hat)};
}

const TaskMetric& TaskMetrics::task(std::string_view name) const {
  for (const auto& t : tasks) {
    if (t.task == name) return t;
  }
  throw LookupError("no metrics for task '" + std::string(name) + "'");
}

TaskMetrics aggregate(std::vector<TaskMetric> per_task) {
  if (per_task.empty()) throw ArgumentError("aggregate: no tasks");
  TaskMetrics m;
  const double n = static_cast<double>(per_task.size());
  double r2_sum = 0.0;
  bool r2_ok = true;
  for (const auto& t : per_task) {
    if (t.r2) r2_sum += *t.r2;
    else r2_ok = false;
    m.avg_rmse += t.rmse;
    m.avg_mae += t.mae;
  }
  if (r2_ok) m.avg_r2 = r2_sum / n;
  m.avg_rmse /= n;
  m.avg_mae /= n;
  m.tasks = std::move(per_task);
  return m;
}

}  // namespace sme
