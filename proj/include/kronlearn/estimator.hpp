#pragma once

#include <cmath>
#include <cstddef>
#include <optional>

#include "kronlearn/common.hpp"
#include "kronlearn/matrix.hpp"

namespace kronlearn {

// Column layout of a two-factor Kronecker dictionary acting on vectorized
// observations: entry index j of a coefficient vector decomposes as
// j = p2 * j1 + j2 with j1 indexing the first (slow) factor and j2 the
// second (fast) factor. The estimator requires square factors (m_k = p_k),
// which is the regime where entrywise thresholding identifies coefficients.
struct FactorLayout {
  std::size_t p1 = 0;
  std::size_t p2 = 0;

  std::size_t p() const { return detail::checked_mul(p1, p2, "FactorLayout"); }

  void validate() const {
    detail::require(p1 >= 1 && p2 >= 1, "FactorLayout: factor sizes must be positive");
  }
};

// Entrywise ternary quantization at the +-1/2 thresholds (strict): values
// above 1/2 map to +1, below -1/2 to -1, everything else to 0.
inline DenseMatrix threshold_ternary(const DenseMatrix& y) {
  DenseMatrix out(y.rows, y.cols);
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    const double v = y.data[i];
    out.data[i] = v > 0.5 ? 1.0 : (v < -0.5 ? -1.0 : 0.0);
  }
  return out;
}

// Regroup length-p columns for first-factor regression: observation n
// contributes p2 columns, and column n*p2 + j collects the p1 entries
// y(p2*i + j, n) that share second-factor index j.
inline DenseMatrix split_for_a(const DenseMatrix& y, const FactorLayout& layout) {
  layout.validate();
  detail::require(y.rows == layout.p(), "split_for_a: rows must equal p1*p2");
  DenseMatrix out(layout.p1,
                  detail::checked_mul(y.cols, layout.p2, "split_for_a"));
  for (std::size_t n = 0; n < y.cols; ++n)
    for (std::size_t j = 0; j < layout.p2; ++j)
      for (std::size_t i = 0; i < layout.p1; ++i)
        out(i, n * layout.p2 + j) = y(layout.p2 * i + j, n);
  return out;
}

// Regroup length-p columns for second-factor regression: column n*p1 + j
// is the contiguous block y(p2*j .. p2*j + p2 - 1, n) sharing first-factor
// index j.
inline DenseMatrix split_for_b(const DenseMatrix& y, const FactorLayout& layout) {
  layout.validate();
  detail::require(y.rows == layout.p(), "split_for_b: rows must equal p1*p2");
  DenseMatrix out(layout.p2,
                  detail::checked_mul(y.cols, layout.p1, "split_for_b"));
  for (std::size_t n = 0; n < y.cols; ++n)
    for (std::size_t j = 0; j < layout.p1; ++j)
      for (std::size_t i = 0; i < layout.p2; ++i)
        out(i, n * layout.p1 + j) = y(layout.p2 * j + i, n);
  return out;
}

namespace detail {

inline DenseMatrix correlate_and_project(const DenseMatrix& yp,
                                         const DenseMatrix& xp, double scale) {
  require(yp.cols == xp.cols, "estimate factor: split widths disagree");
  DenseMatrix est = scale * matmul(yp, transpose(xp));
  project_columns_unit_ball(est);
  return est;
}

}  // namespace detail

// First-factor estimate: (p1 / (N s)) * split_a(Y) split_a(Xhat)^T, with
// columns projected onto the unit ball.
inline DenseMatrix estimate_a(const DenseMatrix& y, const DenseMatrix& x_hat,
                              const FactorLayout& layout, std::size_t s) {
  detail::require(s >= 1, "estimate_a: s must be positive");
  detail::require(y.cols >= 1 && y.cols == x_hat.cols,
                  "estimate_a: observation counts disagree");
  const double scale = static_cast<double>(layout.p1) /
                       (static_cast<double>(y.cols) * static_cast<double>(s));
  return detail::correlate_and_project(split_for_a(y, layout),
                                       split_for_a(x_hat, layout), scale);
}

// Second-factor estimate, symmetric to estimate_a.
inline DenseMatrix estimate_b(const DenseMatrix& y, const DenseMatrix& x_hat,
                              const FactorLayout& layout, std::size_t s) {
  detail::require(s >= 1, "estimate_b: s must be positive");
  detail::require(y.cols >= 1 && y.cols == x_hat.cols,
                  "estimate_b: observation counts disagree");
  const double scale = static_cast<double>(layout.p2) /
                       (static_cast<double>(y.cols) * static_cast<double>(s));
  return detail::correlate_and_project(split_for_b(y, layout),
                                       split_for_b(x_hat, layout), scale);
}

struct EstimatorOutput {
  DenseMatrix a_hat;
  DenseMatrix b_hat;
  DenseMatrix d_hat;
  DenseMatrix x_hat;
  std::optional<double> mse;  // ||d_hat - d_true||_F^2 when truth is supplied
};

// Full two-factor pipeline: threshold coefficients, regress each factor on
// its split, and assemble the Kronecker product. When the true dictionary is
// supplied, the squared Frobenius error is reported alongside.
inline EstimatorOutput ks_estimate(const DenseMatrix& y,
                                   const FactorLayout& layout, std::size_t s,
                                   const DenseMatrix* d_true = nullptr) {
  layout.validate();
  detail::require(y.rows == layout.p(), "ks_estimate: rows must equal p1*p2");
  detail::require(y.cols >= 1, "ks_estimate: need at least one observation");
  detail::require(s >= 1 && s <= layout.p(), "ks_estimate: need 1 <= s <= p");
  EstimatorOutput out;
  out.x_hat = threshold_ternary(y);
  out.a_hat = estimate_a(y, out.x_hat, layout, s);
  out.b_hat = estimate_b(y, out.x_hat, layout, s);
  out.d_hat = kron(out.a_hat, out.b_hat);
  if (d_true != nullptr) {
    detail::require(d_true->same_shape(out.d_hat),
                    "ks_estimate: truth shape mismatch");
    const double dist = frobenius_distance(out.d_hat, *d_true);
    out.mse = dist * dist;
  }
  return out;
}

// Structure-blind baseline: one dense regression of the observations on the
// thresholded coefficients, (p / (N s)) * Y Xhat^T, columns projected onto
// the unit ball.
inline DenseMatrix unstructured_estimate(const DenseMatrix& y, std::size_t s) {
  detail::require(y.cols >= 1, "unstructured_estimate: need observations");
  detail::require(s >= 1, "unstructured_estimate: s must be positive");
  const DenseMatrix x_hat = threshold_ternary(y);
  const double scale = static_cast<double>(y.rows) /
                       (static_cast<double>(y.cols) * static_cast<double>(s));
  DenseMatrix est = scale * matmul(y, transpose(x_hat));
  project_columns_unit_ball(est);
  return est;
}

}  // namespace kronlearn
