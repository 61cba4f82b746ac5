#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "sme/numcore/kernels.hpp"
#include "sme/numcore/rng.hpp"

using namespace sme;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

// Relative closeness for sums whose association order differs.
void expect_close(const std::vector<double>& a, const std::vector<double>& b, double tol = 1e-12) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i], b[i], tol * std::max(1.0, std::abs(a[i]))) << "at " << i;
  }
}

class KernelEquivalence : public ::testing::TestWithParam<std::size_t> {
 protected:
  void SetUp() override {
    avx2 = kernels::avx2_table();
    if (avx2 == nullptr) GTEST_SKIP() << "AVX2 kernels unavailable on this machine";
  }
  const kernels::KernelTable& scalar = kernels::scalar_table();
  const kernels::KernelTable* avx2 = nullptr;
};

}  // namespace

TEST_P(KernelEquivalence, Dot) {
  const std::size_t n = GetParam();
  Rng rng(n + 1);
  const auto a = random_vec(rng, n), b = random_vec(rng, n);
  const double s = scalar.dot(a.data(), b.data(), n);
  EXPECT_NEAR(avx2->dot(a.data(), b.data(), n), s, 1e-12 * std::max(1.0, std::abs(s)));
}

TEST_P(KernelEquivalence, Axpy) {
  const std::size_t n = GetParam();
  Rng rng(n + 2);
  const auto x = random_vec(rng, n);
  auto y1 = random_vec(rng, n);
  auto y2 = y1;
  scalar.axpy(0.37, x.data(), y1.data(), n);
  avx2->axpy(0.37, x.data(), y2.data(), n);
  expect_close(y1, y2);
}

TEST_P(KernelEquivalence, GemvWithAndWithoutBias) {
  const std::size_t cols = GetParam();
  const std::size_t rows = 7;
  Rng rng(cols + 3);
  const auto w = random_vec(rng, rows * cols), x = random_vec(rng, cols), b = random_vec(rng, rows);
  std::vector<double> y1(rows), y2(rows);
  scalar.gemv(w.data(), rows, cols, x.data(), b.data(), y1.data());
  avx2->gemv(w.data(), rows, cols, x.data(), b.data(), y2.data());
  expect_close(y1, y2);
  scalar.gemv(w.data(), rows, cols, x.data(), nullptr, y1.data());
  avx2->gemv(w.data(), rows, cols, x.data(), nullptr, y2.data());
  expect_close(y1, y2);
}

TEST_P(KernelEquivalence, TransposedGemvAndOuterProduct) {
  const std::size_t cols = GetParam();
  const std::size_t rows = 5;
  Rng rng(cols + 4);
  auto w1 = random_vec(rng, rows * cols);
  auto w2 = w1;
  auto g = random_vec(rng, rows);
  g[2] = 0.0;
  const auto x = random_vec(rng, cols);
  auto y1 = random_vec(rng, cols);
  auto y2 = y1;
  scalar.gemv_t_acc(w1.data(), rows, cols, g.data(), y1.data());
  avx2->gemv_t_acc(w2.data(), rows, cols, g.data(), y2.data());
  expect_close(y1, y2);
  scalar.ger_acc(g.data(), rows, x.data(), cols, w1.data());
  avx2->ger_acc(g.data(), rows, x.data(), cols, w2.data());
  expect_close(w1, w2);
}

INSTANTIATE_TEST_SUITE_P(Lengths, KernelEquivalence, ::testing::Values(0, 1, 3, 4, 5, 8, 15, 16, 17, 33, 64, 101));

TEST(Kernels, SelectByName) {
  EXPECT_TRUE(kernels::select("scalar"));
  EXPECT_STREQ(kernels::active().name, "scalar");
  if (kernels::avx2_table() != nullptr) {
    EXPECT_TRUE(kernels::select("avx2"));
    EXPECT_STREQ(kernels::active().name, "avx2");
  }
  EXPECT_FALSE(kernels::select("neon9000"));
}

TEST(Kernels, ScalarHandComputed) {
  const auto& k = kernels::scalar_table();
  const double w[] = {1, 2, 3, 4};
  const double x[] = {1, 1};
  const double b[] = {0.5, -0.5};
  double y[2];
  k.gemv(w, 2, 2, x, b, y);
  EXPECT_DOUBLE_EQ(y[0], 3.5);
  EXPECT_DOUBLE_EQ(y[1], 6.5);
}
