#include "epa/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "epa/error.hpp"

namespace epa {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    fail(ErrorCode::ShapeMismatch, "matrix value count " + std::to_string(values_.size()) +
                                       " does not match " + std::to_string(rows_) + "x" +
                                       std::to_string(cols_));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::string_view norm_name(Norm norm) noexcept {
  switch (norm) {
    case Norm::l1: return "l1";
    case Norm::l2: return "l2";
    case Norm::linf: return "linf";
  }
  return "?";
}

Norm parse_norm(std::string_view name) {
  if (name == "l1") return Norm::l1;
  if (name == "l2") return Norm::l2;
  if (name == "linf" || name == "inf" || name == "max") return Norm::linf;
  fail(ErrorCode::InvalidArgument, "unknown norm '" + std::string(name) + "'");
}

double vector_norm(std::span<const double> v, Norm norm) {
  if (v.empty()) fail(ErrorCode::InvalidArgument, "norm of an empty vector");
  double acc = 0.0;
  switch (norm) {
    case Norm::l1:
      for (double x : v) acc += std::abs(x);
      return acc;
    case Norm::l2:
      for (double x : v) acc += x * x;
      return std::sqrt(acc);
    case Norm::linf:
      for (double x : v) acc = std::max(acc, std::abs(x));
      return acc;
  }
  return acc;
}

double dot(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    fail(ErrorCode::ShapeMismatch, "dot of vectors with lengths " + std::to_string(u.size()) +
                                       " and " + std::to_string(v.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
  return acc;
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  const double d = dot(u, v);
  const double nu = vector_norm(u, Norm::l2);
  const double nv = vector_norm(v, Norm::l2);
  if (nu == 0.0 || nv == 0.0) fail(ErrorCode::Degenerate, "cosine similarity of a zero vector");
  return d / (nu * nv);
}

void softmax_rows_inplace(Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    if (row.empty()) continue;
    const double peak = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double& x : row) {
      x = std::exp(x - peak);
      total += x;
    }
    for (double& x : row) x /= total;
  }
}

Matrix softmax_rows(const Matrix& m) {
  if (m.empty()) fail(ErrorCode::InvalidArgument, "softmax of an empty matrix");
  Matrix out = m;
  softmax_rows_inplace(out);
  return out;
}

Vector layer_norm(std::span<const double> v, std::span<const double> gamma,
                  std::span<const double> beta, double eps) {
  if (v.empty() || gamma.size() != v.size() || beta.size() != v.size()) {
    fail(ErrorCode::ShapeMismatch, "layer_norm length mismatch (v=" + std::to_string(v.size()) +
                                       ", gamma=" + std::to_string(gamma.size()) +
                                       ", beta=" + std::to_string(beta.size()) + ")");
  }
  const auto n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= n;
  const double inv = 1.0 / std::sqrt(var + eps);
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = gamma[i] * ((v[i] - mean) * inv) + beta[i];
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    fail(ErrorCode::ShapeMismatch, "matmul " + std::to_string(a.rows()) + "x" +
                                       std::to_string(a.cols()) + " by " +
                                       std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  Matrix c(a.rows(), b.cols());
  // i-k-j order keeps each c(i,j) a sequential sum over k.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    fail(ErrorCode::ShapeMismatch, "matmul_transposed inner extents " +
                                       std::to_string(a.cols()) + " and " +
                                       std::to_string(b.cols()));
  }
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) c(i, j) = dot(a.row(i), b.row(j));
  return c;
}

void add_bias(Matrix& m, std::span<const double> bias) {
  if (bias.size() != m.cols()) {
    fail(ErrorCode::ShapeMismatch, "bias length " + std::to_string(bias.size()) +
                                       " for matrix with " + std::to_string(m.cols()) +
                                       " columns");
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias[c];
  }
}

void add_inplace(Matrix& m, const Matrix& other) {
  if (m.rows() != other.rows() || m.cols() != other.cols())
    fail(ErrorCode::ShapeMismatch, "elementwise add of differently shaped matrices");
  auto dst = m.values();
  auto src = other.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    fail(ErrorCode::ShapeMismatch, "elementwise subtract of differently shaped matrices");
  Matrix out(a.rows(), a.cols());
  auto dst = out.values();
  auto lhs = a.values();
  auto rhs = b.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = lhs[i] - rhs[i];
  return out;
}

double gelu(double x) { return x * 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2)); }

void gelu_inplace(Matrix& m) {
  for (double& x : m.values()) x = gelu(x);
}

}  // namespace epa
