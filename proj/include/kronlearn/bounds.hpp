#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "kronlearn/common.hpp"
#include "kronlearn/dictionary.hpp"
#include "kronlearn/matrix.hpp"

namespace kronlearn {

// Inputs shared by the minimax lower-bound evaluators. sigma_x_norm is the
// spectral norm of the coefficient covariance; the sparse evaluators derive it
// from (s, sigma_a, p) instead and ignore the explicit field.
struct BoundInputs {
  std::size_t N = 0;
  std::vector<std::size_t> m_dims;
  std::vector<std::size_t> p_dims;
  std::size_t s = 0;
  double sigma = 0.0;
  double sigma_a = 1.0;
  double r = 0.0;
  double t = 0.0;
  double c1 = 0.0;
  double sigma_x_norm = 0.0;

  std::size_t K() const { return m_dims.size(); }

  std::size_t m() const {
    std::size_t out = 1;
    for (std::size_t v : m_dims) out = detail::checked_mul(out, v, "BoundInputs");
    return out;
  }

  std::size_t p() const {
    std::size_t out = 1;
    for (std::size_t v : p_dims) out = detail::checked_mul(out, v, "BoundInputs");
    return out;
  }

  // Packing degrees of freedom sum_k (m_k - 1) p_k.
  double dof() const {
    double out = 0.0;
    for (std::size_t k = 0; k < m_dims.size(); ++k)
      out += static_cast<double>(m_dims[k] - 1) * static_cast<double>(p_dims[k]);
    return out;
  }

  void validate(bool needs_s) const {
    detail::require(!m_dims.empty() && m_dims.size() == p_dims.size(),
                    "BoundInputs: m_dims and p_dims must be nonempty and match");
    for (std::size_t v : m_dims)
      detail::require(v >= 1, "BoundInputs: zero mode dimension");
    for (std::size_t v : p_dims)
      detail::require(v >= 1, "BoundInputs: zero mode dimension");
    detail::require(N >= 1, "BoundInputs: N must be positive");
    if (!(sigma > 0.0)) throw dimension_error("BoundInputs: sigma must be positive");
    if (!(r > 0.0)) throw dimension_error("BoundInputs: r must be positive");
    if (needs_s) {
      detail::require(s >= 1, "BoundInputs: s must be positive");
      detail::require(s <= p(), "BoundInputs: s must not exceed p");
      if (!(sigma_a > 0.0))
        throw dimension_error("BoundInputs: sigma_a must be positive");
    }
  }
};

// One evaluated lower (or upper) bound: the scaled minimand terms, which term
// was active, and any validity caveats (parameter-range violations or a
// non-positive information term). value == min(terms) always; an empty
// validity list means the number is usable as stated.
struct BoundReport {
  double value = 0.0;
  std::array<double, 3> terms = {0.0, 0.0, 0.0};
  int active = 0;
  double dof = 0.0;
  std::vector<std::string> validity;
};

namespace detail {

inline void common_range_notes(const BoundInputs& in, BoundReport& rep) {
  if (!(in.t > 0.0 && in.t < 1.0))
    rep.validity.push_back("t outside (0, 1)");
  const double c1_cap = (1.0 - in.t) / (8.0 * std::log(2.0));
  if (!(in.c1 > 0.0 && in.c1 < c1_cap))
    rep.validity.push_back("c1 outside (0, (1 - t)/(8 ln 2))");
}

inline BoundReport assemble_report(const BoundInputs& in, double cand1,
                                   double cand2, double cand3) {
  BoundReport rep;
  rep.dof = in.dof();
  common_range_notes(in, rep);
  if (!(cand3 > 0.0))
    rep.validity.push_back("information term non-positive: bound vacuous");
  const double scale = in.t / 4.0;
  rep.terms = {scale * cand1, scale * cand2, scale * cand3};
  rep.active = 0;
  for (int i = 1; i < 3; ++i)
    if (rep.terms[i] < rep.terms[rep.active]) rep.active = i;
  rep.value = rep.terms[rep.active];
  return rep;
}

}  // namespace detail

// Neighborhood-limited minimax lower bound for general coefficients:
// (t/4) min{ p, r^2/(2K), sigma^2 (c1 sum (m_k-1)p_k - (K/2)log2 2K - 2)
//                          / (4 N K ||Sigma_x||) }.
inline BoundReport lower_bound_general(const BoundInputs& in) {
  in.validate(false);
  if (!(in.sigma_x_norm > 0.0))
    throw dimension_error("lower_bound_general: sigma_x_norm must be positive");
  const double K = static_cast<double>(in.K());
  const double p = static_cast<double>(in.p());
  const double info = in.c1 * in.dof() - (K / 2.0) * std::log2(2.0 * K) - 2.0;
  const double cand3 = in.sigma * in.sigma /
                       (4.0 * static_cast<double>(in.N) * K * in.sigma_x_norm) *
                       info;
  return detail::assemble_report(in, p, in.r * in.r / (2.0 * K), cand3);
}

// Specialization to sparse coefficients with isotropic nonzero values:
// ||Sigma_x|| = s sigma_a^2 / p. Delegates to the general form after the
// covariance substitution so the two evaluators agree exactly, bit for bit.
inline BoundReport lower_bound_sparse(const BoundInputs& in) {
  in.validate(true);
  BoundInputs g = in;
  g.sigma_x_norm = static_cast<double>(in.s) * in.sigma_a * in.sigma_a /
                   static_cast<double>(in.p());
  return lower_bound_general(g);
}

// Conditional-information variant for sparse Gaussian coefficients. The
// `separable` flag switches the first minimand from p/s (random supports) to
// p (separable supports). The information deficit is (1/2) log2 2K by
// default; conservative_log_term grows it to (K/2) log2 2K, trading
// tightness for a larger worst-case margin.
inline BoundReport lower_bound_sparse_gaussian(const BoundInputs& in,
                                               bool separable,
                                               bool conservative_log_term = false) {
  in.validate(true);
  const double K = static_cast<double>(in.K());
  const double p = static_cast<double>(in.p());
  const double s = static_cast<double>(in.s);
  const double log_coeff = conservative_log_term ? K / 2.0 : 0.5;
  const double info = in.c1 * in.dof() - log_coeff * std::log2(2.0 * K) - 2.0;
  const double sig2 = in.sigma * in.sigma;
  const double sa2 = in.sigma_a * in.sigma_a;
  const double cand3 = sig2 * sig2 * p /
                       (36.0 * std::pow(3.0, 4.0 * K) *
                        static_cast<double>(in.N) * s * s * sa2 * sa2) *
                       info;
  const double cand1 = separable ? p : p / s;
  return detail::assemble_report(in, cand1, in.r * in.r / (2.0 * K), cand3);
}

// Mean-square-error upper bound for the two-factor estimator:
// (8p/N)((p1 m1 + p2 m2)/(m SNR) + 3(p1 + p2)) + 8p exp(-0.08 p N / sigma^2).
inline double mse_upper_bound_k2(std::size_t p1, std::size_t p2, std::size_t m1,
                                 std::size_t m2, std::size_t N, double snr,
                                 double sigma) {
  detail::require(p1 >= 1 && p2 >= 1 && m1 >= 1 && m2 >= 1 && N >= 1,
                  "mse_upper_bound_k2: sizes must be positive");
  if (!(snr > 0.0) || sigma < 0.0)
    throw dimension_error(
        "mse_upper_bound_k2: snr must be positive and sigma non-negative");
  const double p = static_cast<double>(p1) * static_cast<double>(p2);
  const double m = static_cast<double>(m1) * static_cast<double>(m2);
  const double noise_term = std::isinf(snr)
                                ? 0.0
                                : (static_cast<double>(p1 * m1) +
                                   static_cast<double>(p2 * m2)) /
                                      (m * snr);
  const double main_term =
      (8.0 * p / static_cast<double>(N)) *
      (noise_term +
       3.0 * (static_cast<double>(p1) + static_cast<double>(p2)));
  // Noiseless observations: the concentration tail vanishes.
  const double tail = sigma == 0.0
                          ? 0.0
                          : 8.0 * p *
                                std::exp(-0.08 * p * static_cast<double>(N) /
                                         (sigma * sigma));
  return main_term + tail;
}

// Admissibility conditions under which the two-factor estimator's error
// analysis holds. Each condition carries its left/right hand sides so a
// harness can report how much slack remains.
struct EstimatorGuaranteeConditions {
  double radius_lhs = 0.0, radius_rhs = 0.0;      // r1 sqrt(p2) + r2 sqrt(p1) + r1 r2 <= r
  double threshold_lhs = 0.0, threshold_rhs = 0.1;  // (r1 + r2 + r1 r2) sqrt(s) <= 0.1
  double alignment_lhs = 0.0, alignment_rhs = 0.0;  // max{r1^2/p2, r2^2/p1} <= 1/(3N)
  double noise_lhs = 0.0, noise_rhs = 0.4;          // sigma <= 0.4
  bool radius_ok = false, threshold_ok = false, alignment_ok = false,
       noise_ok = false;

  bool all() const {
    return radius_ok && threshold_ok && alignment_ok && noise_ok;
  }
};

inline EstimatorGuaranteeConditions check_estimator_guarantee(double r1, double r2,
                                                    std::size_t p1,
                                                    std::size_t p2,
                                                    std::size_t s, std::size_t N,
                                                    double sigma, double r) {
  detail::require(p1 >= 1 && p2 >= 1 && s >= 1 && N >= 1,
                  "check_estimator_guarantee: sizes must be positive");
  detail::require(r1 >= 0.0 && r2 >= 0.0,
                  "check_estimator_guarantee: radii must be nonnegative");
  EstimatorGuaranteeConditions c;
  const double sp1 = std::sqrt(static_cast<double>(p1));
  const double sp2 = std::sqrt(static_cast<double>(p2));
  c.radius_lhs = r1 * sp2 + r2 * sp1 + r1 * r2;
  c.radius_rhs = r;
  c.radius_ok = c.radius_lhs <= r;
  c.threshold_lhs = (r1 + r2 + r1 * r2) * std::sqrt(static_cast<double>(s));
  c.threshold_ok = c.threshold_lhs <= c.threshold_rhs;
  c.alignment_lhs = std::max(r1 * r1 / static_cast<double>(p2),
                             r2 * r2 / static_cast<double>(p1));
  c.alignment_rhs = 1.0 / (3.0 * static_cast<double>(N));
  c.alignment_ok = c.alignment_lhs <= c.alignment_rhs;
  c.noise_lhs = sigma;
  c.noise_ok = sigma <= c.noise_rhs;
  return c;
}

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations. Off-diagonal
// mass below 1e-12 of the Frobenius norm counts as converged.
inline std::vector<double> symmetric_eigenvalues(DenseMatrix a,
                                                 double tol = 1e-12,
                                                 std::size_t max_sweeps = 100) {
  detail::require(a.rows == a.cols && a.rows >= 1,
                  "symmetric_eigenvalues: matrix must be square");
  const std::size_t n = a.rows;
  const double scale = frobenius_norm(a);
  if (scale == 0.0) return std::vector<double>(n, 0.0);
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += 2.0 * a(i, j) * a(i, j);
    if (std::sqrt(off) <= tol * scale) {
      std::vector<double> eig(n);
      for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
      std::sort(eig.begin(), eig.end());
      return eig;
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double apq = a(i, j);
        if (apq == 0.0) continue;
        const double app = a(i, i), aqq = a(j, j);
        const double theta = (aqq - app) / (2.0 * apq);
        const double sign_t = theta >= 0.0 ? 1.0 : -1.0;
        const double tau =
            sign_t / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + tau * tau);
        const double sn = tau * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double aki = a(k, i), akj = a(k, j);
          a(k, i) = c * aki - sn * akj;
          a(k, j) = sn * aki + c * akj;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double aik = a(i, k), ajk = a(j, k);
          a(i, k) = c * aik - sn * ajk;
          a(j, k) = sn * aik + c * ajk;
        }
      }
  }
  throw convergence_error("symmetric_eigenvalues: Jacobi did not converge");
}

// Restricted isometry constant of order s by exhaustive support enumeration:
// delta_s = max over |S| = s of max(lambda_max - 1, 1 - lambda_min) of the
// Gram matrix of D_S. Requires unit-norm columns and a support count small
// enough to enumerate.
inline double rip_constant(const DenseMatrix& d, std::size_t s) {
  detail::require(s >= 1 && s <= d.cols, "rip_constant: need 1 <= s <= p");
  for (std::size_t j = 0; j < d.cols; ++j)
    if (std::abs(norm2(column(d, j)) - 1.0) > 1e-8)
      throw dimension_error("rip_constant: columns must be unit norm");
  // Support count guard: C(p, s) capped to keep enumeration tractable.
  double combos = 1.0;
  for (std::size_t i = 0; i < s; ++i)
    combos *= static_cast<double>(d.cols - i) / static_cast<double>(i + 1);
  if (combos > 2e5)
    throw dimension_error("rip_constant: too many supports to enumerate");

  std::vector<std::size_t> sup(s);
  for (std::size_t i = 0; i < s; ++i) sup[i] = i;
  double delta = 0.0;
  while (true) {
    DenseMatrix gram(s, s);
    for (std::size_t a = 0; a < s; ++a)
      for (std::size_t b = a; b < s; ++b) {
        double acc = 0.0;
        for (std::size_t row = 0; row < d.rows; ++row)
          acc += d(row, sup[a]) * d(row, sup[b]);
        gram(a, b) = acc;
        gram(b, a) = acc;
      }
    const std::vector<double> eig = symmetric_eigenvalues(gram);
    delta = std::max(delta, std::max(eig.back() - 1.0, 1.0 - eig.front()));
    // Next combination in lexicographic order.
    std::size_t i = s;
    while (i > 0) {
      --i;
      if (sup[i] != i + d.cols - s) {
        ++sup[i];
        for (std::size_t j = i + 1; j < s; ++j) sup[j] = sup[j - 1] + 1;
        break;
      }
      if (i == 0) return delta;
    }
  }
}

// Covariance of one observation given its support: sigma_a^2 D_S D_S^T +
// sigma^2 I_m.
inline DenseMatrix observation_covariance(const DenseMatrix& d,
                                          const std::vector<std::size_t>& support,
                                          double sigma_a, double sigma) {
  detail::require(sigma_a >= 0.0 && sigma >= 0.0,
                  "observation_covariance: negative scale");
  for (std::size_t j : support)
    detail::require(j < d.cols, "observation_covariance: support out of range");
  DenseMatrix out(d.rows, d.rows);
  const double sa2 = sigma_a * sigma_a;
  for (std::size_t a = 0; a < d.rows; ++a)
    for (std::size_t b = a; b < d.rows; ++b) {
      double acc = 0.0;
      for (std::size_t j : support) acc += d(a, j) * d(b, j);
      out(a, b) = sa2 * acc;
      out(b, a) = out(a, b);
    }
  for (std::size_t a = 0; a < d.rows; ++a) out(a, a) += sigma * sigma;
  return out;
}

struct CovarianceDiffReport {
  double max_norm = 0.0;
  double bound = 0.0;     // sigma_a^2 3^{2K+1} sqrt(s eps' / r^2)
  double max_ratio = 0.0;
  std::size_t pairs = 0;
  bool pass = false;      // every pairwise norm within the bound
};

// Spectral norm of pairwise observation-covariance differences across packing
// members, on a fixed support, against the construction's closed-form cap.
inline CovarianceDiffReport covariance_diff_check(
    const PackingClass& cls, const std::vector<std::size_t>& support,
    double sigma_a, double sigma) {
  detail::require(cls.members.size() >= 2,
                  "covariance_diff_check: need at least two members");
  const double r2 = cls.params.r * cls.params.r;
  const double s = static_cast<double>(support.size());
  detail::require(s >= 1.0, "covariance_diff_check: empty support");
  if (s * cls.params.eps_prime > r2)
    throw dimension_error("covariance_diff_check: requires s eps' <= r^2");
  const double K = static_cast<double>(cls.order());
  CovarianceDiffReport rep;
  rep.bound = sigma_a * sigma_a * std::pow(3.0, 2.0 * K + 1.0) *
              std::sqrt(s * cls.params.eps_prime / r2);
  std::vector<DenseMatrix> covs;
  covs.reserve(cls.members.size());
  for (const KsDictionary& m : cls.members)
    covs.push_back(observation_covariance(m.assemble(), support, sigma_a, sigma));
  for (std::size_t i = 0; i < covs.size(); ++i)
    for (std::size_t j = i + 1; j < covs.size(); ++j) {
      const double nrm = spectral_norm(covs[i] - covs[j]);
      rep.max_norm = std::max(rep.max_norm, nrm);
      ++rep.pairs;
    }
  rep.max_ratio = rep.max_norm / rep.bound;
  rep.pass = rep.max_norm <= rep.bound;
  return rep;
}

// Kullback-Leibler divergence between the observation laws of two dictionaries
// under fixed coefficients and isotropic Gaussian noise:
// sum_n ||(D1 - D2) x_n||^2 / (2 sigma^2).
inline double kl_fixed_coefficients(const DenseMatrix& d1, const DenseMatrix& d2,
                                    const DenseMatrix& x, double sigma) {
  detail::require(d1.same_shape(d2), "kl_fixed_coefficients: shape mismatch");
  detail::require(d1.cols == x.rows, "kl_fixed_coefficients: x rows != p");
  if (!(sigma > 0.0))
    throw dimension_error("kl_fixed_coefficients: sigma must be positive");
  const DenseMatrix diff = d1 - d2;
  const DenseMatrix dx = matmul(diff, x);
  double acc = 0.0;
  for (double v : dx.data) acc += v * v;
  return acc / (2.0 * sigma * sigma);
}

}  // namespace kronlearn
