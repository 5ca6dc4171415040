#include <numeric>

#include <gtest/gtest.h>

#include "tda/simd.hpp"
#include "test_util.hpp"

using namespace tda;

namespace {

// Sizes straddling the 8- and 32-lane block boundaries.
const std::size_t kSizes[] = {0, 1, 3, 7, 8, 9, 15, 16, 31, 32, 33, 63, 64, 65, 100, 255, 256, 1000, 4096};

double ref_dot(const float* a, const float* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += double(a[i]) * b[i];
  return s;
}

double abs_dot(const float* a, const float* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::abs(double(a[i]) * b[i]);
  return s;
}

class SimdTables : public ::testing::Test {
 protected:
  void SetUp() override {
    if (simd::avx2_kernels() == nullptr) GTEST_SKIP() << "AVX2+FMA not available";
  }
  const simd::KernelTable& s = simd::scalar_kernels();
  const simd::KernelTable& v = *simd::avx2_kernels();
};

}  // namespace

TEST(Simd, ScalarTableMatchesDoubleReference) {
  const auto& s = simd::scalar_kernels();
  std::mt19937_64 rng(1);
  for (std::size_t n : kSizes) {
    const Vector a = test::random_vector(rng, n), b = test::random_vector(rng, n);
    EXPECT_NEAR(s.dot(a.data(), b.data(), n), ref_dot(a.data(), b.data(), n), 1e-5 * (1 + abs_dot(a.data(), b.data(), n)));
  }
}

TEST_F(SimdTables, DotAgreesWithScalar) {
  std::mt19937_64 rng(2);
  for (std::size_t n : kSizes) {
    const Vector a = test::random_vector(rng, n), b = test::random_vector(rng, n);
    const double tol = 1e-5 * (1 + abs_dot(a.data(), b.data(), n));
    EXPECT_NEAR(v.dot(a.data(), b.data(), n), s.dot(a.data(), b.data(), n), tol) << "n=" << n;
    EXPECT_NEAR(v.sum_squares(a.data(), n), s.sum_squares(a.data(), n), tol) << "n=" << n;
  }
}

TEST_F(SimdTables, IndexedDotWithIdentityIsBitwiseDot) {
  std::mt19937_64 rng(3);
  for (std::size_t n : kSizes) {
    const Vector a = test::random_vector(rng, n), b = test::random_vector(rng, n);
    std::vector<std::int32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    EXPECT_EQ(v.dot_indexed(a.data(), b.data(), idx.data(), n), v.dot(a.data(), b.data(), n)) << "n=" << n;
    EXPECT_EQ(s.dot_indexed(a.data(), b.data(), idx.data(), n), s.dot(a.data(), b.data(), n)) << "n=" << n;
  }
}

TEST_F(SimdTables, IndexedDotAgreesWithScalarOnSubsets) {
  std::mt19937_64 rng(4);
  std::bernoulli_distribution keep(0.4);
  for (std::size_t n : kSizes) {
    const Vector a = test::random_vector(rng, n), b = test::random_vector(rng, n);
    std::vector<std::int32_t> idx;
    double mag = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (keep(rng)) {
        idx.push_back(static_cast<std::int32_t>(i));
        mag += std::abs(double(a[i]) * b[i]);
      }
    }
    EXPECT_NEAR(v.dot_indexed(a.data(), b.data(), idx.data(), idx.size()),
                s.dot_indexed(a.data(), b.data(), idx.data(), idx.size()), 1e-5 * mag);
  }
}

TEST_F(SimdTables, AxpyIsExactPerElement) {
  std::mt19937_64 rng(5);
  for (std::size_t n : kSizes) {
    const Vector x = test::random_vector(rng, n);
    Vector y1 = test::random_vector(rng, n);
    Vector y2 = y1;
    s.axpy(0.37f, x.data(), y1.data(), n);
    v.axpy(0.37f, x.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y1[i], y2[i], 1e-6 * (1 + std::abs(y1[i])));
  }
}

TEST_F(SimdTables, MatvecRowsEqualDot) {
  std::mt19937_64 rng(6);
  for (std::size_t cols : {1, 17, 64, 257}) {
    const std::size_t rows = 13;
    const Vector m = test::random_vector(rng, rows * cols), x = test::random_vector(rng, cols);
    Vector out_v(rows), out_s(rows);
    v.matvec(m.data(), rows, cols, x.data(), out_v.data());
    s.matvec(m.data(), rows, cols, x.data(), out_s.data());
    for (std::size_t r = 0; r < rows; ++r) {
      EXPECT_EQ(out_v[r], v.dot(m.data() + r * cols, x.data(), cols));
      EXPECT_NEAR(out_v[r], out_s[r], 1e-5 * (1 + abs_dot(m.data() + r * cols, x.data(), cols)));
    }
  }
}

TEST(Simd, SetKernelsSwitchesActiveTable) {
  const simd::KernelTable& before = simd::kernels();
  simd::set_kernels(simd::scalar_kernels());
  EXPECT_EQ(simd::kernels().name, simd::scalar_kernels().name);
  simd::set_kernels(before);
  EXPECT_EQ(simd::kernels().name, before.name);
}
