#include "tda/simd.hpp"

namespace tda::simd {
namespace {

float dot_scalar(const float* a, const float* b, std::size_t n) {
  float acc = 0.0f;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

float dot_indexed_scalar(const float* a, const float* b, const std::int32_t* idx, std::size_t n) {
  float acc = 0.0f;
  for (std::size_t k = 0; k < n; ++k) acc += a[idx[k]] * b[idx[k]];
  return acc;
}

float sum_squares_scalar(const float* a, std::size_t n) {
  float acc = 0.0f;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
  return acc;
}

void axpy_scalar(float alpha, const float* x, float* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void matvec_scalar(const float* m, std::size_t rows, std::size_t cols, const float* v, float* out) {
  for (std::size_t r = 0; r < rows; ++r) out[r] = dot_scalar(m + r * cols, v, cols);
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", dot_scalar, dot_indexed_scalar, sum_squares_scalar,
                                 axpy_scalar, matvec_scalar};
  return table;
}

}  // namespace tda::simd
