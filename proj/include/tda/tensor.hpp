#pragma once

// Dense f32 kernels shared by the runtime, the sparsity engine and the
// analysis tools. Row-major storage only.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace tda {

using Vector = std::vector<float>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::size_t rows, std::size_t cols, std::vector<float> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  float& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  float operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<float> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const float> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  static Matrix identity(std::size_t n);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

enum class ActivationKind { relu, silu, relu_squared };

std::string_view to_string(ActivationKind kind);
ActivationKind parse_activation(std::string_view name);

inline constexpr float kDefaultRmsEps = 1e-5f;

Vector matvec(const Matrix& m, std::span<const float> v);
// Writes m*v into out; out.size() must equal m.rows().
void matvec_into(const Matrix& m, std::span<const float> v, std::span<float> out);

float dot(std::span<const float> a, std::span<const float> b);
float l2_norm(std::span<const float> v);

float activate(ActivationKind kind, float x) noexcept;
Vector activation(ActivationKind kind, std::span<const float> v);

Vector rms_norm(std::span<const float> v, std::span<const float> gain, float eps = kDefaultRmsEps);
void rms_norm_into(std::span<const float> v, std::span<const float> gain, float eps, std::span<float> out);

Vector softmax(std::span<const float> v);
void softmax_inplace(std::span<float> v);

}  // namespace tda
