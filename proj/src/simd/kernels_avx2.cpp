// Compiled with -mavx2 -mfma; only reached after a runtime CPUID check.
#include <immintrin.h>

#include "tda/simd.hpp"

namespace tda::simd {
namespace {

constexpr std::size_t kLanes = 8;
constexpr std::size_t kBlock = 4 * kLanes;

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 shuf = _mm_movehdup_ps(lo);
  __m128 sums = _mm_add_ps(lo, shuf);
  shuf = _mm_movehl_ps(shuf, sums);
  sums = _mm_add_ss(sums, shuf);
  return _mm_cvtss_f32(sums);
}

// dot and dot_indexed share this skeleton so that an identity index list
// reproduces dot() bit for bit.
template <class LoadA, class LoadB, class Scalar>
inline float dot_skeleton(std::size_t n, LoadA load_a, LoadB load_b, Scalar scalar) {
  __m256 acc0 = _mm256_setzero_ps();
  __m256 acc1 = _mm256_setzero_ps();
  __m256 acc2 = _mm256_setzero_ps();
  __m256 acc3 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + kBlock <= n; i += kBlock) {
    acc0 = _mm256_fmadd_ps(load_a(i), load_b(i), acc0);
    acc1 = _mm256_fmadd_ps(load_a(i + kLanes), load_b(i + kLanes), acc1);
    acc2 = _mm256_fmadd_ps(load_a(i + 2 * kLanes), load_b(i + 2 * kLanes), acc2);
    acc3 = _mm256_fmadd_ps(load_a(i + 3 * kLanes), load_b(i + 3 * kLanes), acc3);
  }
  for (; i + kLanes <= n; i += kLanes) acc0 = _mm256_fmadd_ps(load_a(i), load_b(i), acc0);
  const __m256 acc = _mm256_add_ps(_mm256_add_ps(acc0, acc1), _mm256_add_ps(acc2, acc3));
  float total = hsum(acc);
  for (; i < n; ++i) total += scalar(i);
  return total;
}

float dot_avx2(const float* a, const float* b, std::size_t n) {
  return dot_skeleton(
      n, [a](std::size_t i) { return _mm256_loadu_ps(a + i); },
      [b](std::size_t i) { return _mm256_loadu_ps(b + i); },
      [a, b](std::size_t i) { return a[i] * b[i]; });
}

float dot_indexed_avx2(const float* a, const float* b, const std::int32_t* idx, std::size_t n) {
  auto gather = [idx](const float* base) {
    return [base, idx](std::size_t i) {
      const __m256i vi = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(idx + i));
      return _mm256_i32gather_ps(base, vi, 4);
    };
  };
  return dot_skeleton(n, gather(a), gather(b),
                      [a, b, idx](std::size_t i) { return a[idx[i]] * b[idx[i]]; });
}

float sum_squares_avx2(const float* a, std::size_t n) { return dot_avx2(a, a, n); }

void axpy_avx2(float alpha, const float* x, float* y, std::size_t n) {
  const __m256 va = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void matvec_avx2(const float* m, std::size_t rows, std::size_t cols, const float* v, float* out) {
  for (std::size_t r = 0; r < rows; ++r) out[r] = dot_avx2(m + r * cols, v, cols);
}

}  // namespace

const KernelTable& avx2_kernel_table() {
  static const KernelTable table{"avx2", dot_avx2, dot_indexed_avx2, sum_squares_avx2, axpy_avx2,
                                 matvec_avx2};
  return table;
}

}  // namespace tda::simd
