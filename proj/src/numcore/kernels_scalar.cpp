#include "sme/numcore/kernels.hpp"

namespace sme::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_scalar(const double* w, std::size_t rows, std::size_t cols, const double* x,
                 const double* b, double* y) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double s = dot_scalar(w + i * cols, x, cols);
    y[i] = b ? s + b[i] : s;
  }
}

void gemv_t_acc_scalar(const double* w, std::size_t rows, std::size_t cols, const double* g,
                       double* y) {
  for (std::size_t i = 0; i < rows; ++i) {
    if (g[i] == 0.0) continue;
    axpy_scalar(g[i], w + i * cols, y, cols);
  }
}

void ger_acc_scalar(const double* g, std::size_t rows, const double* x, std::size_t cols,
                    double* w) {
  for (std::size_t i = 0; i < rows; ++i) {
    if (g[i] == 0.0) continue;
    axpy_scalar(g[i], x, w + i * cols, cols);
  }
}

constexpr KernelTable kScalar{
    "scalar", dot_scalar, axpy_scalar, gemv_scalar, gemv_t_acc_scalar, ger_acc_scalar,
};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace sme::kernels
