// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include "sme/numcore/kernels.hpp"

namespace sme::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    i += 4;
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// Four rows share each load of x.
void gemv_avx2(const double* w, std::size_t rows, std::size_t cols, const double* x,
               const double* b, double* y) {
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    const double* w0 = w + r * cols;
    const double* w1 = w0 + cols;
    const double* w2 = w1 + cols;
    const double* w3 = w2 + cols;
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    __m256d a2 = _mm256_setzero_pd();
    __m256d a3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= cols; i += 4) {
      const __m256d vx = _mm256_loadu_pd(x + i);
      a0 = _mm256_fmadd_pd(_mm256_loadu_pd(w0 + i), vx, a0);
      a1 = _mm256_fmadd_pd(_mm256_loadu_pd(w1 + i), vx, a1);
      a2 = _mm256_fmadd_pd(_mm256_loadu_pd(w2 + i), vx, a2);
      a3 = _mm256_fmadd_pd(_mm256_loadu_pd(w3 + i), vx, a3);
    }
    double s0 = hsum(a0), s1 = hsum(a1), s2 = hsum(a2), s3 = hsum(a3);
    for (; i < cols; ++i) {
      s0 += w0[i] * x[i];
      s1 += w1[i] * x[i];
      s2 += w2[i] * x[i];
      s3 += w3[i] * x[i];
    }
    if (b) {
      s0 += b[r];
      s1 += b[r + 1];
      s2 += b[r + 2];
      s3 += b[r + 3];
    }
    y[r] = s0;
    y[r + 1] = s1;
    y[r + 2] = s2;
    y[r + 3] = s3;
  }
  for (; r < rows; ++r) {
    const double s = dot_avx2(w + r * cols, x, cols);
    y[r] = b ? s + b[r] : s;
  }
}

void gemv_t_acc_avx2(const double* w, std::size_t rows, std::size_t cols, const double* g,
                     double* y) {
  for (std::size_t i = 0; i < rows; ++i) {
    if (g[i] == 0.0) continue;
    axpy_avx2(g[i], w + i * cols, y, cols);
  }
}

void ger_acc_avx2(const double* g, std::size_t rows, const double* x, std::size_t cols,
                  double* w) {
  for (std::size_t i = 0; i < rows; ++i) {
    if (g[i] == 0.0) continue;
    axpy_avx2(g[i], x, w + i * cols, cols);
  }
}

}  // namespace

extern const KernelTable kAvx2Table;
const KernelTable kAvx2Table{
    "avx2", dot_avx2, axpy_avx2, gemv_avx2, gemv_t_acc_avx2, ger_acc_avx2,
};

}  // namespace sme::kernels
