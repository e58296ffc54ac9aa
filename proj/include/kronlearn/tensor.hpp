#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

#include "kronlearn/common.hpp"
#include "kronlearn/matrix.hpp"

namespace kronlearn {

// Dense order-K tensor. Storage is generalized column-major: the first index
// varies fastest, so vec() of an order-2 tensor equals column stacking of the
// corresponding matrix.
struct DenseTensor {
  std::vector<std::size_t> dims;
  std::vector<double> data;

  DenseTensor() = default;
  explicit DenseTensor(std::vector<std::size_t> d, double fill = 0.0)
      : dims(std::move(d)) {
    std::size_t n = 1;
    for (std::size_t p : dims) n = detail::checked_mul(n, p, "DenseTensor");
    detail::require(!dims.empty(), "DenseTensor: order must be at least 1");
    for (std::size_t p : dims)
      detail::require(p > 0, "DenseTensor: zero dimension");
    data.assign(n, fill);
  }

  std::size_t order() const { return dims.size(); }
  std::size_t size() const { return data.size(); }

  std::size_t offset(const std::vector<std::size_t>& idx) const {
    detail::require(idx.size() == dims.size(), "DenseTensor: index arity");
    std::size_t off = 0, stride = 1;
    for (std::size_t k = 0; k < dims.size(); ++k) {
      detail::require(idx[k] < dims[k], "DenseTensor: index out of range");
      off += idx[k] * stride;
      stride *= dims[k];
    }
    return off;
  }

  double& at(const std::vector<std::size_t>& idx) { return data[offset(idx)]; }
  double at(const std::vector<std::size_t>& idx) const { return data[offset(idx)]; }
};

inline DenseTensor tensor_from_vec(std::vector<double> v,
                                   std::vector<std::size_t> dims) {
  DenseTensor t(std::move(dims));
  detail::require(v.size() == t.size(), "tensor_from_vec: length mismatch");
  t.data = std::move(v);
  return t;
}

inline std::vector<double> vec(const DenseTensor& t) { return t.data; }

// Mode-k unfolding (k is 1-based): rows run over index k, columns over the
// remaining indices with lower modes varying fastest. For order 2 this gives
// the matrix itself at k=1 and its transpose at k=2.
inline DenseMatrix mode_k_unfold(const DenseTensor& t, std::size_t k) {
  detail::require(k >= 1 && k <= t.order(), "mode_k_unfold: mode out of range");
  const std::size_t ki = k - 1;
  const std::size_t pk = t.dims[ki];
  const std::size_t ncols = t.size() / pk;
  DenseMatrix out(pk, ncols);
  std::vector<std::size_t> idx(t.order(), 0);
  for (std::size_t off = 0; off < t.size(); ++off) {
    std::size_t col = 0, stride = 1;
    for (std::size_t m = 0; m < t.order(); ++m) {
      if (m == ki) continue;
      col += idx[m] * stride;
      stride *= t.dims[m];
    }
    out(idx[ki], col) = t.data[off];
    for (std::size_t m = 0; m < t.order(); ++m) {
      if (++idx[m] < t.dims[m]) break;
      idx[m] = 0;
    }
  }
  return out;
}

// Inverse of mode_k_unfold for a tensor of the given dims.
inline DenseTensor mode_k_fold(const DenseMatrix& m,
                               const std::vector<std::size_t>& dims,
                               std::size_t k) {
  DenseTensor t(dims);
  detail::require(k >= 1 && k <= t.order(), "mode_k_fold: mode out of range");
  const std::size_t ki = k - 1;
  detail::require(m.rows == dims[ki] && m.size() == t.size(),
                  "mode_k_fold: shape mismatch");
  std::vector<std::size_t> idx(t.order(), 0);
  for (std::size_t off = 0; off < t.size(); ++off) {
    std::size_t col = 0, stride = 1;
    for (std::size_t mm = 0; mm < t.order(); ++mm) {
      if (mm == ki) continue;
      col += idx[mm] * stride;
      stride *= t.dims[mm];
    }
    t.data[off] = m(idx[ki], col);
    for (std::size_t mm = 0; mm < t.order(); ++mm) {
      if (++idx[mm] < t.dims[mm]) break;
      idx[mm] = 0;
    }
  }
  return t;
}

// Mode-k product T x_k A: contracts index k of the tensor against the columns
// of A, replacing dimension p_k by A.rows. Equivalent to A * unfold_k(T).
inline DenseTensor mode_k_product(const DenseTensor& t, const DenseMatrix& a,
                                  std::size_t k) {
  detail::require(k >= 1 && k <= t.order(), "mode_k_product: mode out of range");
  detail::require(a.cols == t.dims[k - 1],
                  "mode_k_product: factor columns must match mode dimension");
  DenseMatrix unfolded = mode_k_unfold(t, k);
  DenseMatrix prod = matmul(a, unfolded);
  std::vector<std::size_t> dims = t.dims;
  dims[k - 1] = a.rows;
  return mode_k_fold(prod, dims, k);
}

// Applies one factor per mode: core x_1 F_1 x_2 ... x_K F_K. vec() of the
// result equals kron(F_K, ..., F_1) * vec(core).
inline DenseTensor tucker_reconstruct(const DenseTensor& core,
                                      const std::vector<DenseMatrix>& factors) {
  detail::require(factors.size() == core.order(),
                  "tucker_reconstruct: need one factor per mode");
  DenseTensor out = core;
  for (std::size_t k = 0; k < factors.size(); ++k)
    out = mode_k_product(out, factors[k], k + 1);
  return out;
}

}  // namespace kronlearn
