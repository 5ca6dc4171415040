#pragma once

// Kernel tables for the arithmetic inner loops. A scalar reference table is
// always present; wider tables are compiled per-ISA and picked at runtime.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace tda::simd {

struct KernelTable {
  std::string_view name;
  // sum_i a[i]*b[i]
  float (*dot)(const float* a, const float* b, std::size_t n);
  // sum_k a[idx[k]]*b[idx[k]]; with idx = 0..n-1 the result equals dot() bitwise.
  float (*dot_indexed)(const float* a, const float* b, const std::int32_t* idx, std::size_t n);
  // sum_i a[i]^2
  float (*sum_squares)(const float* a, std::size_t n);
  // y[i] += alpha*x[i]
  void (*axpy)(float alpha, const float* x, float* y, std::size_t n);
  // out[r] = dot(m + r*cols, v, cols) for r < rows
  void (*matvec)(const float* m, std::size_t rows, std::size_t cols, const float* v, float* out);
};

const KernelTable& scalar_kernels();

// nullptr when the binary was built without AVX2 or the CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();

// The table used by all library code. Defaults to the widest supported table;
// the environment variable TDA_SIMD=scalar forces the reference table.
const KernelTable& kernels();

// Overrides the active table (tests and benchmarks). Not thread-safe with
// concurrent kernel calls.
void set_kernels(const KernelTable& table);

}  // namespace tda::simd
