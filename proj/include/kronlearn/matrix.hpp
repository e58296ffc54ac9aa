#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "kronlearn/common.hpp"

namespace kronlearn {

// Dense row-major matrix of doubles. All routines in this library work at
// desk scale (dimensions in the hundreds), so no blocking or vectorized
// backend is attempted.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::size_t size() const { return rows * cols; }
  bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }
};

namespace detail {

// Hard cap on element counts; anything above this is a bug, not a workload.
inline constexpr std::size_t kMaxElements = std::size_t{1} << 31;

inline std::size_t checked_mul(std::size_t a, std::size_t b, const char* what) {
  std::size_t out = 0;
  if (__builtin_mul_overflow(a, b, &out) || out > kMaxElements)
    throw dimension_error(std::string(what) + ": dimension product overflows");
  return out;
}

inline void require(bool ok, const char* msg) {
  if (!ok) throw dimension_error(msg);
}

}  // namespace detail

inline DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require(a.same_shape(b), "operator+: shape mismatch");
  DenseMatrix out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
  return out;
}

inline DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require(a.same_shape(b), "operator-: shape mismatch");
  DenseMatrix out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
  return out;
}

inline DenseMatrix operator*(double alpha, const DenseMatrix& a) {
  DenseMatrix out = a;
  for (double& v : out.data) v *= alpha;
  return out;
}

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require(a.cols == b.rows, "matmul: inner dimension mismatch");
  DenseMatrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = &b.data[k * b.cols];
      double* orow = &out.data[i * out.cols];
      for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

inline DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix out(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
  return out;
}

// Frobenius inner product <A, B> = tr(A^T B).
inline double frobenius_inner(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require(a.same_shape(b), "frobenius_inner: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) acc += a.data[i] * b.data[i];
  return acc;
}

inline double frobenius_norm(const DenseMatrix& a) {
  double acc = 0.0;
  for (double v : a.data) acc += v * v;
  return std::sqrt(acc);
}

inline double frobenius_distance(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require(a.same_shape(b), "frobenius_distance: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

// Kronecker product, blocks x_ij * y.
inline DenseMatrix kron(const DenseMatrix& x, const DenseMatrix& y) {
  detail::require(x.size() > 0 && y.size() > 0, "kron: empty operand");
  const std::size_t r = detail::checked_mul(x.rows, y.rows, "kron");
  const std::size_t c = detail::checked_mul(x.cols, y.cols, "kron");
  detail::checked_mul(r, c, "kron");
  DenseMatrix out(r, c);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j) {
      const double xij = x(i, j);
      if (xij == 0.0) continue;
      for (std::size_t k = 0; k < y.rows; ++k) {
        const std::size_t oi = i * y.rows + k;
        for (std::size_t l = 0; l < y.cols; ++l)
          out(oi, j * y.cols + l) = xij * y(k, l);
      }
    }
  return out;
}

// Khatri-Rao product: column-wise Kronecker, needs matching column counts.
inline DenseMatrix khatri_rao(const DenseMatrix& x, const DenseMatrix& y) {
  detail::require(x.cols == y.cols, "khatri_rao: column count mismatch");
  detail::require(x.size() > 0 && y.size() > 0, "khatri_rao: empty operand");
  const std::size_t r = detail::checked_mul(x.rows, y.rows, "khatri_rao");
  DenseMatrix out(r, x.cols);
  for (std::size_t j = 0; j < x.cols; ++j)
    for (std::size_t i = 0; i < x.rows; ++i) {
      const double xij = x(i, j);
      for (std::size_t k = 0; k < y.rows; ++k)
        out(i * y.rows + k, j) = xij * y(k, j);
    }
  return out;
}

// Column-stacking vectorization.
inline std::vector<double> vec(const DenseMatrix& a) {
  std::vector<double> out(a.size());
  for (std::size_t j = 0; j < a.cols; ++j)
    for (std::size_t i = 0; i < a.rows; ++i) out[j * a.rows + i] = a(i, j);
  return out;
}

inline DenseMatrix unvec(const std::vector<double>& v, std::size_t rows,
                         std::size_t cols) {
  detail::require(v.size() == rows * cols, "unvec: length does not match shape");
  DenseMatrix out(rows, cols);
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) out(i, j) = v[j * rows + i];
  return out;
}

inline std::vector<double> column(const DenseMatrix& a, std::size_t j) {
  detail::require(j < a.cols, "column: index out of range");
  std::vector<double> out(a.rows);
  for (std::size_t i = 0; i < a.rows; ++i) out[i] = a(i, j);
  return out;
}

inline void set_column(DenseMatrix& a, std::size_t j, const std::vector<double>& v) {
  detail::require(j < a.cols && v.size() == a.rows, "set_column: shape mismatch");
  for (std::size_t i = 0; i < a.rows; ++i) a(i, j) = v[i];
}

inline double norm2(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

// Projection onto the closed Euclidean unit ball.
inline std::vector<double> project_unit_ball(std::vector<double> u) {
  const double n = norm2(u);
  if (n > 1.0)
    for (double& x : u) x /= n;
  return u;
}

inline void project_columns_unit_ball(DenseMatrix& a) {
  for (std::size_t j = 0; j < a.cols; ++j) {
    double n = 0.0;
    for (std::size_t i = 0; i < a.rows; ++i) n += a(i, j) * a(i, j);
    n = std::sqrt(n);
    if (n > 1.0)
      for (std::size_t i = 0; i < a.rows; ++i) a(i, j) /= n;
  }
}

// Largest singular value by power iteration on X^T X. Deterministic start
// (normalized all-ones); if an iterate lands exactly in the null space the
// start falls back to successive basis vectors. Raises convergence_error at
// the iteration cap rather than returning a stale estimate.
inline double spectral_norm(const DenseMatrix& x, double tol = 1e-12,
                            std::size_t max_iter = 10000) {
  detail::require(x.size() > 0, "spectral_norm: empty matrix");
  const std::size_t n = x.cols;
  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> w(x.rows), u(n);
  std::size_t fallback = 0;
  double lambda_old = -1.0;
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    // w = X v
    for (std::size_t i = 0; i < x.rows; ++i) {
      double acc = 0.0;
      const double* row = &x.data[i * x.cols];
      for (std::size_t j = 0; j < n; ++j) acc += row[j] * v[j];
      w[i] = acc;
    }
    double lambda = 0.0;
    for (double wi : w) lambda += wi * wi;
    if (lambda == 0.0) {
      // v is an exact null vector; restart from the next basis direction.
      if (fallback >= n) return 0.0;
      std::fill(v.begin(), v.end(), 0.0);
      v[fallback++] = 1.0;
      lambda_old = -1.0;
      continue;
    }
    if (lambda_old >= 0.0 &&
        std::abs(lambda - lambda_old) <= tol * std::max(lambda, 1e-300))
      return std::sqrt(lambda);
    lambda_old = lambda;
    // u = X^T w
    std::fill(u.begin(), u.end(), 0.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
      const double wi = w[i];
      if (wi == 0.0) continue;
      const double* row = &x.data[i * x.cols];
      for (std::size_t j = 0; j < n; ++j) u[j] += wi * row[j];
    }
    double un = norm2(u);
    for (std::size_t j = 0; j < n; ++j) v[j] = u[j] / un;
  }
  throw convergence_error("spectral_norm: power iteration did not converge");
}

}  // namespace kronlearn
