#include <atomic>
#include <cstdlib>
#include <string>

#include "sme/numcore/kernels.hpp"

namespace sme::kernels {

#if defined(SME_HAVE_AVX2_KERNELS)
extern const KernelTable kAvx2Table;
#endif

namespace {

bool cpu_has_avx2() {
#if defined(SME_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_table() {
  const KernelTable* best = avx2_table();
  if (const char* env = std::getenv("SPARSE_SME_KERNELS")) {
    const std::string want = env;
    if (want == "scalar") return &scalar_table();
    if (want == "avx2" && best) return best;
  }
  return best ? best : &scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable* avx2_table() {
#if defined(SME_HAVE_AVX2_KERNELS)
  static const bool supported = cpu_has_avx2();
  return supported ? &kAvx2Table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

bool select(std::string_view name) {
  if (name == "scalar") {
    current().store(&scalar_table());
    return true;
  }
  if (name == "avx2") {
    if (const KernelTable* t = avx2_table()) {
      current().store(t);
      return true;
    }
  }
  return false;
}

}  // namespace sme::kernels
