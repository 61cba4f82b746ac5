#pragma once

// Dense float64 inner loops used by every forward/backward pass.
//
// Two implementations exist: a scalar reference and an AVX2/FMA variant.
// The active table is chosen once at first use from the CPU feature bits
// and can be forced with SPARSE_SME_KERNELS=scalar|avx2. The variants agree
// to rounding (summation order differs), and each is deterministic.

#include <cstddef>
#include <string_view>

namespace sme::kernels {

struct KernelTable {
  const char* name;

  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);

  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  // y = W x + b, W row-major rows x cols. b may be null.
  void (*gemv)(const double* w, std::size_t rows, std::size_t cols, const double* x,
               const double* b, double* y);

  // y += W^T g, W row-major rows x cols, g of length rows, y of length cols.
  void (*gemv_t_acc)(const double* w, std::size_t rows, std::size_t cols, const double* g,
                     double* y);

  // W += g x^T, g of length rows, x of length cols.
  void (*ger_acc)(const double* g, std::size_t rows, const double* x, std::size_t cols,
                  double* w);
};

const KernelTable& scalar_table();

// nullptr when the build or the CPU lacks AVX2+FMA.
const KernelTable* avx2_table();

// The table all numcore ops route through.
const KernelTable& active();

// Forces a table by name ("scalar" or "avx2"). Returns false if unavailable.
bool select(std::string_view name);

}  // namespace sme::kernels
