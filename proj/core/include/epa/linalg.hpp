#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace epa {

using Vector = std::vector<double>;

/// Row-major dense matrix of 64-bit reals.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

enum class Norm { l1 = 0, l2 = 1, linf = 2 };

inline constexpr std::array<Norm, 3> kAllNorms{Norm::l1, Norm::l2, Norm::linf};

std::string_view norm_name(Norm norm) noexcept;
/// Accepts "l1", "l2", "linf" (also "inf" / "max" for the sup norm).
Norm parse_norm(std::string_view name);

double vector_norm(std::span<const double> v, Norm norm);
double dot(std::span<const double> u, std::span<const double> v);
/// Throws Degenerate when either input has zero l2 norm.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

/// Row-wise softmax with per-row max subtraction.
Matrix softmax_rows(const Matrix& m);
void softmax_rows_inplace(Matrix& m);

/// gamma * (v - mean) / sqrt(var + eps) + beta, population variance.
Vector layer_norm(std::span<const double> v, std::span<const double> gamma,
                  std::span<const double> beta, double eps = 1e-12);

Matrix matmul(const Matrix& a, const Matrix& b);
/// a * b^T without materializing the transpose.
Matrix matmul_transposed(const Matrix& a, const Matrix& b);
/// Adds `bias` to every row.
void add_bias(Matrix& m, std::span<const double> bias);
void add_inplace(Matrix& m, const Matrix& other);
Matrix subtract(const Matrix& a, const Matrix& b);

/// Exact GELU, x * Phi(x).
double gelu(double x);
void gelu_inplace(Matrix& m);

}  // namespace epa
