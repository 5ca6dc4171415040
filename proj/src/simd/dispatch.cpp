#include <cstdlib>
#include <string_view>

#include "tda/simd.hpp"

namespace tda::simd {

#if defined(TDA_HAVE_AVX2)
const KernelTable& avx2_kernel_table();
#endif

const KernelTable* avx2_kernels() {
#if defined(TDA_HAVE_AVX2)
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return supported ? &avx2_kernel_table() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

const KernelTable* select_default() {
  if (const char* env = std::getenv("TDA_SIMD"); env != nullptr && std::string_view(env) == "scalar") {
    return &scalar_kernels();
  }
  if (const KernelTable* wide = avx2_kernels()) return wide;
  return &scalar_kernels();
}

const KernelTable*& active_slot() {
  static const KernelTable* active = select_default();
  return active;
}

}  // namespace

const KernelTable& kernels() { return *active_slot(); }

void set_kernels(const KernelTable& table) { active_slot() = &table; }

}  // namespace tda::simd
