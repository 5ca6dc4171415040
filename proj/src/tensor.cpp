#include "tda/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tda/error.hpp"
#include "tda/simd.hpp"

namespace tda {

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0f) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ContractError("Matrix: data length " + std::to_string(data_.size()) + " != " +
                        std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0f;
  return m;
}

std::string_view to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::relu: return "relu";
    case ActivationKind::silu: return "silu";
    case ActivationKind::relu_squared: return "relu_squared";
  }
  return "unknown";
}

ActivationKind parse_activation(std::string_view name) {
  if (name == "relu") return ActivationKind::relu;
  if (name == "silu" || name == "swiglu") return ActivationKind::silu;
  if (name == "relu_squared" || name == "relu2") return ActivationKind::relu_squared;
  throw ContractError("unknown activation kind '" + std::string(name) + "'");
}

void matvec_into(const Matrix& m, std::span<const float> v, std::span<float> out) {
  if (m.cols() != v.size() || m.rows() != out.size()) {
    throw ContractError("matvec: dimension mismatch (" + std::to_string(m.rows()) + "x" +
                        std::to_string(m.cols()) + " by " + std::to_string(v.size()) + ")");
  }
  simd::kernels().matvec(m.data().data(), m.rows(), m.cols(), v.data(), out.data());
}

Vector matvec(const Matrix& m, std::span<const float> v) {
  Vector out(m.rows());
  matvec_into(m, v, out);
  return out;
}

float dot(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw ContractError("dot: length mismatch");
  return simd::kernels().dot(a.data(), b.data(), a.size());
}

float l2_norm(std::span<const float> v) {
  if (v.empty()) throw ContractError("l2_norm: empty vector");
  return std::sqrt(simd::kernels().sum_squares(v.data(), v.size()));
}

float activate(ActivationKind kind, float x) noexcept {
  switch (kind) {
    case ActivationKind::relu: return x > 0.0f ? x : 0.0f;
    case ActivationKind::silu: return x / (1.0f + std::exp(-x));
    case ActivationKind::relu_squared: {
      const float r = x > 0.0f ? x : 0.0f;
      return r * r;
    }
  }
  return x;
}

Vector activation(ActivationKind kind, std::span<const float> v) {
  Vector out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [kind](float x) { return activate(kind, x); });
  return out;
}

void rms_norm_into(std::span<const float> v, std::span<const float> gain, float eps, std::span<float> out) {
  if (v.size() != gain.size() || v.size() != out.size() || v.empty()) {
    throw ContractError("rms_norm: length mismatch");
  }
  if (!(eps > 0.0f)) throw ContractError("rms_norm: eps must be positive");
  const float mean_sq = simd::kernels().sum_squares(v.data(), v.size()) / static_cast<float>(v.size());
  const float inv = 1.0f / std::sqrt(mean_sq + eps);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = gain[i] * v[i] * inv;
}

Vector rms_norm(std::span<const float> v, std::span<const float> gain, float eps) {
  Vector out(v.size());
  rms_norm_into(v, gain, eps, out);
  return out;
}

void softmax_inplace(std::span<float> v) {
  if (v.empty()) throw ContractError("softmax: empty vector");
  const float peak = *std::max_element(v.begin(), v.end());
  float total = 0.0f;
  for (float& x : v) {
    x = std::exp(x - peak);
    total += x;
  }
  const float inv = 1.0f / total;
  for (float& x : v) x *= inv;
}

Vector softmax(std::span<const float> v) {
  Vector out(v.begin(), v.end());
  softmax_inplace(out);
  return out;
}

}  // namespace tda
