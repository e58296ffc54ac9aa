#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "kronlearn/common.hpp"
#include "kronlearn/matrix.hpp"

namespace kronlearn {

// Coefficient distributions for synthetic observations. Sparse models place
// s nonzeros uniformly; the separable model draws one subset per mode and
// activates their grid; ternary values are +/-1, Gaussian values N(0, sigma_a^2).
enum class CoefficientModel {
  general_dense,
  random_sparse,
  separable_sparse,
  ternary_sparse,
};

struct CoefficientSpec {
  CoefficientModel model = CoefficientModel::random_sparse;
  std::vector<std::size_t> dims;    // per-mode coefficient dimensions p_k
  std::size_t s = 0;                // total sparsity (random / ternary models)
  std::vector<std::size_t> mode_s;  // per-mode sparsity (separable model)
  double sigma_a = 1.0;             // nonzero value scale (Gaussian models)

  std::size_t p() const {
    std::size_t n = 1;
    for (std::size_t d : dims) n = detail::checked_mul(n, d, "CoefficientSpec");
    return n;
  }

  // Number of nonzeros a sample will carry.
  std::size_t effective_s() const {
    switch (model) {
      case CoefficientModel::general_dense:
        return p();
      case CoefficientModel::separable_sparse: {
        std::size_t n = 1;
        for (std::size_t sk : mode_s) n *= sk;
        return n;
      }
      default:
        return s;
    }
  }

  void validate() const {
    detail::require(!dims.empty(), "CoefficientSpec: dims must be nonempty");
    for (std::size_t d : dims)
      detail::require(d >= 1, "CoefficientSpec: zero dimension");
    detail::require(sigma_a > 0.0, "CoefficientSpec: sigma_a must be positive");
    const std::size_t total = p();
    switch (model) {
      case CoefficientModel::general_dense:
        break;
      case CoefficientModel::random_sparse:
      case CoefficientModel::ternary_sparse:
        detail::require(s >= 1 && s <= total,
                        "CoefficientSpec: need 1 <= s <= p");
        if (model == CoefficientModel::ternary_sparse)
          detail::require(sigma_a == 1.0,
                          "CoefficientSpec: ternary values are fixed at +/-1");
        break;
      case CoefficientModel::separable_sparse:
        detail::require(mode_s.size() == dims.size(),
                        "CoefficientSpec: one mode sparsity per mode");
        for (std::size_t k = 0; k < dims.size(); ++k)
          detail::require(mode_s[k] >= 1 && mode_s[k] <= dims[k],
                          "CoefficientSpec: need 1 <= s_k <= p_k");
        break;
    }
  }
};

struct CoefficientSample {
  std::size_t p = 0;
  std::vector<std::size_t> support;  // sorted, 0-based flat indices
  std::vector<double> values;        // aligned with support

  std::vector<double> dense() const {
    std::vector<double> x(p, 0.0);
    for (std::size_t i = 0; i < support.size(); ++i) x[support[i]] = values[i];
    return x;
  }
};

// Uniform s-subset of {0, ..., p-1} by partial Fisher-Yates, returned sorted.
inline std::vector<std::size_t> sample_support_random(std::size_t p,
                                                      std::size_t s, Rng& rng) {
  detail::require(s >= 1 && s <= p, "sample_support_random: need 1 <= s <= p");
  std::vector<std::size_t> arr(p);
  std::iota(arr.begin(), arr.end(), std::size_t{0});
  for (std::size_t i = 0; i < s; ++i)
    std::swap(arr[i], arr[i + rng.index(p - i)]);
  arr.resize(s);
  std::sort(arr.begin(), arr.end());
  return arr;
}

// Separable support: one uniform subset per mode, activated as a grid. Flat
// indices follow the Kronecker column order of the stored factor sequence:
// the first mode varies slowest.
inline std::vector<std::size_t> sample_support_separable(
    const std::vector<std::size_t>& dims, const std::vector<std::size_t>& mode_s,
    Rng& rng) {
  detail::require(dims.size() == mode_s.size() && !dims.empty(),
                  "sample_support_separable: arity mismatch");
  std::vector<std::vector<std::size_t>> subsets(dims.size());
  for (std::size_t k = 0; k < dims.size(); ++k)
    subsets[k] = sample_support_random(dims[k], mode_s[k], rng);
  std::vector<std::size_t> out;
  std::vector<std::size_t> pick(dims.size(), 0);
  while (true) {
    std::size_t flat = 0;
    for (std::size_t k = 0; k < dims.size(); ++k)
      flat = flat * dims[k] + subsets[k][pick[k]];
    out.push_back(flat);
    std::size_t k = dims.size();
    bool done = true;
    while (k > 0) {
      --k;
      if (++pick[k] < subsets[k].size()) {
        done = false;
        break;
      }
      pick[k] = 0;
    }
    if (done) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<double> sample_values_gaussian(std::size_t s, double sigma_a,
                                                  Rng& rng) {
  detail::require(sigma_a > 0.0, "sample_values_gaussian: sigma_a > 0");
  std::vector<double> v(s);
  for (double& x : v) x = rng.normal(sigma_a);
  return v;
}

inline std::vector<double> sample_values_ternary(std::size_t s, Rng& rng) {
  std::vector<double> v(s);
  for (double& x : v) x = rng.sign();
  return v;
}

inline CoefficientSample sample_coefficients(const CoefficientSpec& spec,
                                             Rng& rng) {
  spec.validate();
  CoefficientSample out;
  out.p = spec.p();
  switch (spec.model) {
    case CoefficientModel::general_dense:
      out.support.resize(out.p);
      std::iota(out.support.begin(), out.support.end(), std::size_t{0});
      out.values = sample_values_gaussian(out.p, spec.sigma_a, rng);
      break;
    case CoefficientModel::random_sparse:
      out.support = sample_support_random(out.p, spec.s, rng);
      out.values = sample_values_gaussian(spec.s, spec.sigma_a, rng);
      break;
    case CoefficientModel::separable_sparse:
      out.support = sample_support_separable(spec.dims, spec.mode_s, rng);
      out.values = sample_values_gaussian(out.support.size(), spec.sigma_a, rng);
      break;
    case CoefficientModel::ternary_sparse:
      out.support = sample_support_random(out.p, spec.s, rng);
      out.values = sample_values_ternary(spec.s, rng);
      break;
  }
  return out;
}

// Spectral norm of the coefficient covariance. Sparse models with isotropic
// values give Sigma_x = (s_eff / p) sigma_a^2 I. The dense model has no
// canonical sparsity, so the caller must supply the norm explicitly.
inline double covariance_of(const CoefficientSpec& spec) {
  spec.validate();
  if (spec.model == CoefficientModel::general_dense)
    throw config_error(
        "covariance_of: general dense model needs an explicit norm");
  return static_cast<double>(spec.effective_s()) /
         static_cast<double>(spec.p()) * spec.sigma_a * spec.sigma_a;
}

// Signal-to-noise ratio tr(Sigma_x) / (m sigma^2) = s_eff sigma_a^2 / (m sigma^2).
inline double snr(const CoefficientSpec& spec, std::size_t m, double sigma) {
  spec.validate();
  detail::require(m >= 1, "snr: m must be positive");
  if (!(sigma > 0.0)) throw dimension_error("snr: sigma must be positive");
  return static_cast<double>(spec.effective_s()) * spec.sigma_a * spec.sigma_a /
         (static_cast<double>(m) * sigma * sigma);
}

struct Observations {
  DenseMatrix y;  // m x n
  DenseMatrix x;  // p x n, the true coefficients
};

// Draws n observation columns y = D x + noise with iid N(0, sigma^2) noise.
// Column c uses its own RNG stream derived from (seed, c), so results do not
// depend on generation order and any prefix of columns is stable as n grows.
inline Observations generate_observations(const DenseMatrix& d,
                                          const CoefficientSpec& spec,
                                          std::size_t n, double sigma,
                                          std::uint64_t seed) {
  spec.validate();
  detail::require(n >= 1, "generate_observations: n must be positive");
  detail::require(sigma >= 0.0, "generate_observations: sigma must be >= 0");
  detail::require(d.cols == spec.p(),
                  "generate_observations: dictionary columns != coefficient p");
  Observations obs;
  obs.y = DenseMatrix(d.rows, n);
  obs.x = DenseMatrix(d.cols, n);
  for (std::size_t c = 0; c < n; ++c) {
    Rng rng(derive_seed(seed, {0x636f6cULL, c}));
    const CoefficientSample sample = sample_coefficients(spec, rng);
    for (std::size_t i = 0; i < sample.support.size(); ++i)
      obs.x(sample.support[i], c) = sample.values[i];
    for (std::size_t row = 0; row < d.rows; ++row) {
      double acc = 0.0;
      for (std::size_t i = 0; i < sample.support.size(); ++i)
        acc += d(row, sample.support[i]) * sample.values[i];
      if (sigma > 0.0) acc += rng.normal(sigma);
      obs.y(row, c) = acc;
    }
  }
  return obs;
}

}  // namespace kronlearn
