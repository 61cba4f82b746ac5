#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sme/error.hpp"
#include "sme/metrics/metrics.hpp"
#include "sme/numcore/rng.hpp"

using namespace sme;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

}  // namespace

TEST(R2, Examples) {
  const std::vector<double> y{0, 1, 2, 3};
  EXPECT_NEAR(*r2(y, std::vector<double>{0.5, 1.5, 1.5, 2.5}), 0.8, 1e-12);
  EXPECT_EQ(*r2(y, y), 1.0);
  EXPECT_NEAR(*r2(y, std::vector<double>(4, 1.5)), 0.0, 1e-15);
}

TEST(R2, UndefinedAndErrors) {
  EXPECT_FALSE(r2(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 3}).has_value());
  EXPECT_FALSE(r2(std::vector<double>{1}, std::vector<double>{1}).has_value());
  EXPECT_THROW(r2(std::vector<double>{1, 2}, std::vector<double>{1}), ShapeError);
}

TEST(R2, NeverExceedsOne) {
  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng.below(30);
    const auto y = random_vec(rng, n), yh = random_vec(rng, n);
    EXPECT_LE(*r2(y, yh), 1.0);
  }
}

TEST(RmseMae, Examples) {
  const std::vector<double> y{0, 0}, yh{3, 4};
  EXPECT_NEAR(rmse(y, yh), std::sqrt(12.5), 1e-12);
  EXPECT_NEAR(mae(y, yh), 3.5, 1e-12);
  EXPECT_EQ(rmse(y, y), 0.0);
  EXPECT_EQ(mae(y, y), 0.0);
  EXPECT_THROW(rmse(y, std::vector<double>{1}), ShapeError);
  EXPECT_THROW(mae(std::vector<double>{}, std::vector<double>{}), ShapeError);
}

TEST(RmseMae, HomogeneousInResidualScale) {
  const std::vector<double> y{1, -2, 0.5}, yh{1.5, -1, 3};
  for (double c : {-3.0, 0.25, 7.0}) {
    std::vector<double> scaled(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) scaled[i] = y[i] + c * (yh[i] - y[i]);
    EXPECT_NEAR(rmse(y, scaled), std::abs(c) * rmse(y, yh), 1e-12);
    EXPECT_NEAR(mae(y, scaled), std::abs(c) * mae(y, yh), 1e-12);
  }
}

TEST(RmseMae, PowerMeanInequality) {
  Rng rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.below(20);
    const auto y = random_vec(rng, n), yh = random_vec(rng, n);
    EXPECT_GE(rmse(y, yh), mae(y, yh) - 1e-15);
    EXPECT_GE(mae(y, yh), 0.0);
  }
  // Equal absolute residuals give equality.
  EXPECT_NEAR(rmse(std::vector<double>{0, 0, 0}, std::vector<double>{2, -2, 2}), 2.0, 1e-15);
}

TEST(Metrics, PermutationInvariant) {
  Rng rng(3);
  auto y = random_vec(rng, 25), yh = random_vec(rng, 25);
  const double a = *r2(y, yh), b = rmse(y, yh), c = mae(y, yh);
  std::vector<std::size_t> perm(25);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(std::span<std::size_t>(perm));
  std::vector<double> py(25), pyh(25);
  for (std::size_t i = 0; i < 25; ++i) {
    py[i] = y[perm[i]];
    pyh[i] = yh[perm[i]];
  }
  EXPECT_NEAR(*r2(py, pyh), a, 1e-12);
  EXPECT_NEAR(rmse(py, pyh), b, 1e-12);
  EXPECT_NEAR(mae(py, pyh), c, 1e-12);
}

TEST(Aggregate, UnweightedMeans) {
  std::vector<TaskMetric> m{{"a", 0.2, 1.0, 0.5}, {"b", 0.4, 2.0, 1.0}, {"c", 0.6, 6.0, 3.0}};
  const TaskMetrics agg = aggregate(m);
  EXPECT_NEAR(*agg.avg_r2, 0.4, 1e-15);
  EXPECT_NEAR(agg.avg_rmse, 3.0, 1e-15);
  EXPECT_NEAR(agg.avg_mae, 1.5, 1e-15);
  EXPECT_EQ(agg.task("b").rmse, 2.0);
  EXPECT_THROW(agg.task("d"), LookupError);

  std::reverse(m.begin(), m.end());
  EXPECT_NEAR(*aggregate(m).avg_r2, 0.4, 1e-15);

  const TaskMetrics one = aggregate({{"x", 0.7, 1.5, 1.0}});
  EXPECT_EQ(*one.avg_r2, 0.7);
  EXPECT_EQ(one.avg_rmse, 1.5);
}

TEST(Aggregate, UndefinedR2Propagates) {
  const TaskMetrics agg = aggregate({{"a", 0.5, 1, 1}, {"b", std::nullopt, 1, 1}});
  EXPECT_FALSE(agg.avg_r2.has_value());
  EXPECT_THROW(aggregate({}), ArgumentError);
}

TEST(TaskMetric, ComputesAllThree) {
  const TaskMetric t = compute_task_metric("carbon", std::vector<double>{0, 1, 2, 3},
                                           std::vector<double>{0.5, 1.5, 1.5, 2.5});
  EXPECT_EQ(t.task, "carbon");
  EXPECT_NEAR(*t.r2, 0.8, 1e-12);
  EXPECT_NEAR(t.rmse, 0.5, 1e-12);
  EXPECT_NEAR(t.mae, 0.5, 1e-12);
}
