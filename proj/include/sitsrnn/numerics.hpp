#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "sitsrnn/error.hpp"

namespace sitsrnn {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m;
    m.rows_ = rows.size();
    m.cols_ = rows.size() == 0 ? 0 : rows.begin()->size();
    m.values_.reserve(m.rows_ * m.cols_);
    for (const auto& r : rows) {
      if (r.size() != m.cols_) throw ShapeError("numerics: ragged matrix literal");
      m.values_.insert(m.values_.end(), r.begin(), r.end());
    }
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {values_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  void fill(double v) { std::fill(values_.begin(), values_.end(), v); }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

enum class Activation { sigmoid, tanh };

inline bool all_finite(std::span<const double> v) noexcept {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Eight independent partial sums so the loop vectorizes without
// -ffast-math. The summation order is fixed, which keeps results reproducible.
inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  const std::size_t n = a.size();
  const double* __restrict pa = a.data();
  const double* __restrict pb = b.data();
  double acc[8] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t j = 0; j < 8; ++j) acc[j] += pa[i + j] * pb[i + j];
  }
  for (std::size_t j = 0; i < n; ++i, ++j) acc[j] += pa[i] * pb[i];
  return ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
}

// y += alpha * x
// x and y must not overlap.
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept {
  const double* __restrict xs = x.data();
  double* __restrict ys = y.data();
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) ys[i] += alpha * xs[i];
}

inline double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace detail {

inline void check_affine_shapes(const Matrix& w, std::size_t x_len, std::size_t b_len) {
  if (w.cols() != x_len || w.rows() != b_len) {
    throw ShapeError("numerics: affine shape mismatch: W is " + shape_str(w.rows(), w.cols()) +
                     ", x has length " + std::to_string(x_len) + ", b has length " +
                     std::to_string(b_len));
  }
}

// out[r] += W.row(r) . x, no shape checks.
inline void gemv_accumulate(const Matrix& w, std::span<const double> x,
                            std::span<double> out) noexcept {
  for (std::size_t r = 0; r < w.rows(); ++r) out[r] += dot(w.row(r), x);
}

// out += W^T * v, no shape checks.
inline void gemv_transposed_accumulate(const Matrix& w, std::span<const double> v,
                                       std::span<double> out) noexcept {
  for (std::size_t r = 0; r < w.rows(); ++r) axpy(v[r], w.row(r), out);
}

// W += u * v^T, no shape checks.
inline void outer_accumulate(std::span<const double> u, std::span<const double> v,
                             Matrix& w) noexcept {
  for (std::size_t r = 0; r < w.rows(); ++r) axpy(u[r], v, w.row(r));
}

}  // namespace detail

// W x + b
inline Vector affine(const Matrix& w, std::span<const double> x, std::span<const double> b) {
  detail::check_affine_shapes(w, x.size(), b.size());
  Vector out(b.begin(), b.end());
  detail::gemv_accumulate(w, x, out);
  return out;
}

inline Vector elementwise(Activation kind, std::span<const double> v) {
  if (v.empty()) throw InvalidArgument("numerics: elementwise on empty vector");
  if (!all_finite(v)) throw InvalidArgument("numerics: elementwise on non-finite input");
  Vector out(v.size());
  if (kind == Activation::sigmoid) {
    std::transform(v.begin(), v.end(), out.begin(), [](double x) { return sigmoid(x); });
  } else {
    std::transform(v.begin(), v.end(), out.begin(), [](double x) { return std::tanh(x); });
  }
  return out;
}

// Softmax with max-subtraction; invariant to adding a constant to every logit.
inline Vector stable_softmax(std::span<const double> logits) {
  if (logits.empty()) throw InvalidArgument("numerics: softmax of empty vector");
  if (!all_finite(logits)) throw InvalidArgument("numerics: softmax of non-finite logits");
  const double m = *std::max_element(logits.begin(), logits.end());
  Vector out(logits.size());
  double total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - m);
    total += out[k];
  }
  for (double& p : out) p /= total;
  return out;
}

// Index of the largest entry; ties resolve to the lowest index.
inline std::size_t argmax(std::span<const double> v) noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace sitsrnn
