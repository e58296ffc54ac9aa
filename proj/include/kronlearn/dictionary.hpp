#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "kronlearn/common.hpp"
#include "kronlearn/matrix.hpp"

namespace kronlearn {

// A dictionary held in Kronecker-factored form: the full matrix is the
// Kronecker product of the stored factors, in storage order.
struct KsDictionary {
  std::vector<DenseMatrix> factors;

  KsDictionary() = default;
  explicit KsDictionary(std::vector<DenseMatrix> f) : factors(std::move(f)) {}

  std::size_t order() const { return factors.size(); }

  std::size_t rows() const {
    std::size_t n = 1;
    for (const DenseMatrix& f : factors)
      n = detail::checked_mul(n, f.rows, "KsDictionary::rows");
    return n;
  }

  std::size_t cols() const {
    std::size_t n = 1;
    for (const DenseMatrix& f : factors)
      n = detail::checked_mul(n, f.cols, "KsDictionary::cols");
    return n;
  }

  DenseMatrix assemble() const {
    detail::require(!factors.empty(), "KsDictionary::assemble: no factors");
    DenseMatrix out = factors[0];
    for (std::size_t k = 1; k < factors.size(); ++k) out = kron(out, factors[k]);
    return out;
  }

  // Worst deviation of an assembled column norm from 1. Column norms multiply
  // across factors, so this is computed without assembling.
  double max_unit_norm_deviation() const {
    detail::require(!factors.empty(), "KsDictionary: no factors");
    std::vector<std::vector<double>> norms(factors.size());
    for (std::size_t k = 0; k < factors.size(); ++k) {
      norms[k].resize(factors[k].cols);
      for (std::size_t j = 0; j < factors[k].cols; ++j)
        norms[k][j] = norm2(column(factors[k], j));
    }
    double worst = 0.0;
    std::vector<std::size_t> idx(factors.size(), 0);
    while (true) {
      double prod = 1.0;
      for (std::size_t k = 0; k < factors.size(); ++k) prod *= norms[k][idx[k]];
      worst = std::max(worst, std::abs(prod - 1.0));
      std::size_t k = factors.size();
      while (k > 0) {
        --k;
        if (++idx[k] < factors[k].cols) break;
        idx[k] = 0;
        if (k == 0) return worst;
      }
    }
  }
};

// Frobenius distance of an assembled dictionary from a reference.
inline double membership_radius(const KsDictionary& d, const KsDictionary& d0) {
  return frobenius_distance(d.assemble(), d0.assemble());
}

// Orthogonal matrix U with U e_1 = col, via the Householder reflection along
// col - e_1. col must be unit norm. Returns the identity when col is already
// (numerically) e_1.
inline DenseMatrix householder_from_e1(const std::vector<double>& col) {
  const std::size_t n = col.size();
  detail::require(n > 0, "householder_from_e1: empty vector");
  if (std::abs(norm2(col) - 1.0) > 1e-9)
    throw dimension_error("householder_from_e1: column must be unit norm");
  std::vector<double> w = col;
  w[0] -= 1.0;
  const double wn = norm2(w);
  DenseMatrix u = DenseMatrix::identity(n);
  if (wn < 1e-12) return u;
  for (double& x : w) x /= wn;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) u(i, j) -= 2.0 * w[i] * w[j];
  return u;
}

// Sign matrix of shape (m_k - 1) x p_k with entries +/- alpha, where
// alpha = 1 / (r^{1/K} sqrt(m_k - 1)); every column then has norm r^{-1/K}.
inline DenseMatrix build_generating_matrix(std::size_t mk, std::size_t pk,
                                           double r, std::size_t K, Rng& rng) {
  detail::require(mk >= 2, "build_generating_matrix: need m_k >= 2");
  detail::require(pk >= 1 && K >= 1 && r > 0.0,
                  "build_generating_matrix: bad parameters");
  const double alpha =
      1.0 / (std::pow(r, 1.0 / static_cast<double>(K)) *
             std::sqrt(static_cast<double>(mk - 1)));
  DenseMatrix g(mk - 1, pk);
  for (double& v : g.data) v = alpha * rng.sign();
  return g;
}

// Coherence admission test for a candidate pair of generating matrices:
// |<G1, G2>| <= p_k t / r^{2/K}. A matrix is never coherent with itself
// (its self inner product is p_k / r^{2/K} > threshold for t < 1).
inline bool coherence_ok(const DenseMatrix& g1, const DenseMatrix& g2, double t,
                         double r, std::size_t K) {
  detail::require(g1.same_shape(g2), "coherence_ok: shape mismatch");
  const double threshold = static_cast<double>(g1.cols) * t /
                           std::pow(r, 2.0 / static_cast<double>(K));
  return std::abs(frobenius_inner(g1, g2)) <= threshold;
}

struct PackingParams {
  double r = 0.0;          // neighborhood radius around the reference
  double t = 0.0;          // separation parameter in (0, 1)
  double c1 = 0.0;         // capacity rate, in (0, t^2 / (8 ln 2))
  double eps_prime = 0.0;  // perturbation energy, in (0, min{r^2, r^4/(2Kp)})
  std::size_t count = 0;   // members to construct
  std::uint64_t seed = 0;
  std::size_t retry_factor = 100;  // rejection draws allowed per requested member
};

struct PackingClass {
  KsDictionary reference;
  std::vector<KsDictionary> members;        // mixed factors eta D0 + nu D1
  std::vector<KsDictionary> perturbations;  // the lifted D1 factors per member
  double eta = 0.0;
  double nu = 0.0;
  PackingParams params;
  std::vector<double> capacity_exponent;  // c1 (m_k-1) p_k - log2(2K)/2 per mode
  std::vector<double> capacity;           // 2^floor(exponent) per mode

  std::size_t order() const { return reference.order(); }
};

namespace detail {

inline void validate_packing_inputs(const KsDictionary& d0,
                                    const PackingParams& prm) {
  require(!d0.factors.empty(), "build_packing_class: reference has no factors");
  const std::size_t K = d0.order();
  for (const DenseMatrix& f : d0.factors) {
    require(f.rows >= 2, "build_packing_class: every mode needs m_k >= 2");
    require(f.cols >= 1, "build_packing_class: empty factor");
  }
  if (d0.max_unit_norm_deviation() > 1e-9)
    throw dimension_error(
        "build_packing_class: reference factors must have unit-norm columns");
  const double p = static_cast<double>(d0.cols());
  if (!(prm.r > 0.0)) throw dimension_error("build_packing_class: r must be positive");
  if (!(prm.t > 0.0 && prm.t < 1.0))
    throw dimension_error("build_packing_class: t must lie in (0, 1)");
  const double c1_cap = prm.t * prm.t / (8.0 * std::log(2.0));
  if (!(prm.c1 > 0.0 && prm.c1 < c1_cap))
    throw dimension_error(
        "build_packing_class: c1 must lie in (0, t^2 / (8 ln 2))");
  const double wall =
      std::min(prm.r * prm.r,
               std::pow(prm.r, 4.0) / (2.0 * static_cast<double>(K) * p));
  if (!(prm.eps_prime > 0.0 && prm.eps_prime < wall))
    throw dimension_error(
        "build_packing_class: eps_prime must lie in (0, min{r^2, r^4/(2Kp)})");
  if (prm.count < 1)
    throw dimension_error("build_packing_class: count must be at least 1");
  // Each mode only has 2^((m_k-1) p_k) distinct sign matrices; asking for more
  // members than that can never terminate.
  for (const DenseMatrix& f : d0.factors) {
    const std::size_t bits = (f.rows - 1) * f.cols;
    if (bits < 64 && prm.count > (std::size_t{1} << bits))
      throw construction_error(
          "build_packing_class: parameters too small for requested count");
  }
}

}  // namespace detail

// Constructs a coherent family of Kronecker-structured dictionaries around the
// reference. Per mode, sign matrices are rejection-sampled until `count` of
// them are pairwise coherent, each is lifted into the orthogonal complement of
// the corresponding reference column (zero first coordinate, then a rotation
// taking e_1 to that column), and member i mixes the reference with its i-th
// lifted perturbation in every mode.
inline PackingClass build_packing_class(const KsDictionary& d0,
                                        const PackingParams& prm) {
  detail::validate_packing_inputs(d0, prm);
  const std::size_t K = d0.order();
  const double r2 = prm.r * prm.r;
  const double r_2K = std::pow(prm.r, 2.0 / static_cast<double>(K));

  PackingClass cls;
  cls.reference = d0;
  cls.params = prm;
  cls.eta = std::sqrt(1.0 - prm.eps_prime / r2);
  cls.nu = std::sqrt(r_2K * prm.eps_prime / r2);

  // Rotations taking e_1 to each reference column, per mode.
  std::vector<std::vector<DenseMatrix>> lifts(K);
  for (std::size_t k = 0; k < K; ++k) {
    const DenseMatrix& f = d0.factors[k];
    lifts[k].reserve(f.cols);
    for (std::size_t j = 0; j < f.cols; ++j)
      lifts[k].push_back(householder_from_e1(column(f, j)));
  }

  // Per-mode coherent generating matrices.
  std::vector<std::vector<DenseMatrix>> gens(K);
  for (std::size_t k = 0; k < K; ++k) {
    const DenseMatrix& f = d0.factors[k];
    Rng rng(derive_seed(prm.seed, {0x70616b6bULL, k}));
    const std::size_t cap = prm.retry_factor * prm.count;
    std::size_t draws = 0;
    while (gens[k].size() < prm.count) {
      if (draws >= cap)
        throw construction_error(
            "build_packing_class: rejection retry cap exceeded in mode " +
            std::to_string(k + 1));
      DenseMatrix g = build_generating_matrix(f.rows, f.cols, prm.r, K, rng);
      ++draws;
      bool ok = true;
      for (const DenseMatrix& other : gens[k])
        if (!coherence_ok(g, other, prm.t, prm.r, K)) {
          ok = false;
          break;
        }
      if (ok) gens[k].push_back(std::move(g));
    }
  }

  // Lift each generating matrix: column j becomes U_{(k,j)} (0; g_j).
  cls.members.reserve(prm.count);
  cls.perturbations.reserve(prm.count);
  for (std::size_t i = 0; i < prm.count; ++i) {
    std::vector<DenseMatrix> pert(K);
    std::vector<DenseMatrix> mixed(K);
    for (std::size_t k = 0; k < K; ++k) {
      const DenseMatrix& f = d0.factors[k];
      DenseMatrix d1(f.rows, f.cols);
      for (std::size_t j = 0; j < f.cols; ++j) {
        std::vector<double> lifted(f.rows, 0.0);
        for (std::size_t row = 1; row < f.rows; ++row)
          lifted[row] = gens[k][i](row - 1, j);
        const DenseMatrix& u = lifts[k][j];
        std::vector<double> rotated(f.rows, 0.0);
        for (std::size_t a = 0; a < f.rows; ++a) {
          double acc = 0.0;
          for (std::size_t b = 1; b < f.rows; ++b) acc += u(a, b) * lifted[b];
          rotated[a] = acc;
        }
        set_column(d1, j, rotated);
      }
      mixed[k] = cls.eta * f + cls.nu * d1;
      pert[k] = std::move(d1);
    }
    cls.members.emplace_back(std::move(mixed));
    cls.perturbations.emplace_back(std::move(pert));
  }

  // Theoretical per-mode capacity; reported, never enforced (sampled members
  // witness the separation properties directly).
  for (std::size_t k = 0; k < K; ++k) {
    const DenseMatrix& f = d0.factors[k];
    const double expo =
        prm.c1 * static_cast<double>((f.rows - 1) * f.cols) -
        0.5 * std::log2(2.0 * static_cast<double>(K));
    cls.capacity_exponent.push_back(expo);
    cls.capacity.push_back(std::exp2(std::floor(expo)));
  }
  return cls;
}

struct PackingVerifyReport {
  double max_unit_norm_dev = 0.0;   // vs 1e-9
  double max_factor_orth = 0.0;     // |<D_(k,0), D_(k,1,l)>|, vs 1e-9
  double eta_nu_identity_dev = 0.0; // |eta^2 + nu^2 / r^{2/K} - 1|
  double min_pair_dist_sq = 0.0;
  double max_pair_dist_sq = 0.0;
  double pair_lower = 0.0;          // (2p/r^2)(1-t) eps'
  double pair_upper = 0.0;          // (4Kp/r^2) eps'
  double max_ref_dist_sq = 0.0;
  double ref_upper = 0.0;           // 2Kp eps' / r^2
  double r_sq = 0.0;
  std::size_t pair_count = 0;
  bool pass_unit_norm = false;
  bool pass_orth = false;
  bool pass_pairs = false;
  bool pass_ref = false;

  bool pass() const {
    return pass_unit_norm && pass_orth && pass_pairs && pass_ref;
  }
};

// Checks every property the construction promises: unit member columns,
// orthogonality of each lifted perturbation to the reference factor, the
// eta/nu mixing identity, pairwise separation window, and the distance cap
// to the reference.
inline PackingVerifyReport verify_packing(const PackingClass& cls) {
  detail::require(!cls.members.empty(), "verify_packing: empty class");
  PackingVerifyReport rep;
  const std::size_t K = cls.order();
  const double p = static_cast<double>(cls.reference.cols());
  const double r2 = cls.params.r * cls.params.r;
  const double eps = cls.params.eps_prime;
  const double r_2K = std::pow(cls.params.r, 2.0 / static_cast<double>(K));

  rep.r_sq = r2;
  rep.pair_lower = (2.0 * p / r2) * (1.0 - cls.params.t) * eps;
  rep.pair_upper = (4.0 * static_cast<double>(K) * p / r2) * eps;
  rep.ref_upper = 2.0 * static_cast<double>(K) * p * eps / r2;
  rep.eta_nu_identity_dev =
      std::abs(cls.eta * cls.eta + cls.nu * cls.nu / r_2K - 1.0);

  for (const KsDictionary& m : cls.members)
    rep.max_unit_norm_dev =
        std::max(rep.max_unit_norm_dev, m.max_unit_norm_deviation());

  for (std::size_t i = 0; i < cls.members.size(); ++i)
    for (std::size_t k = 0; k < K; ++k)
      rep.max_factor_orth = std::max(
          rep.max_factor_orth,
          std::abs(frobenius_inner(cls.reference.factors[k],
                                   cls.perturbations[i].factors[k])));

  std::vector<DenseMatrix> assembled;
  assembled.reserve(cls.members.size());
  for (const KsDictionary& m : cls.members) assembled.push_back(m.assemble());
  const DenseMatrix ref = cls.reference.assemble();

  rep.min_pair_dist_sq = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < assembled.size(); ++i) {
    const double dref = frobenius_distance(assembled[i], ref);
    rep.max_ref_dist_sq = std::max(rep.max_ref_dist_sq, dref * dref);
    for (std::size_t j = i + 1; j < assembled.size(); ++j) {
      const double d = frobenius_distance(assembled[i], assembled[j]);
      rep.min_pair_dist_sq = std::min(rep.min_pair_dist_sq, d * d);
      rep.max_pair_dist_sq = std::max(rep.max_pair_dist_sq, d * d);
      ++rep.pair_count;
    }
  }
  if (cls.members.size() < 2) rep.min_pair_dist_sq = 0.0;

  rep.pass_unit_norm = rep.max_unit_norm_dev <= 1e-9;
  rep.pass_orth = rep.max_factor_orth <= 1e-9;
  const double slack = 1e-9;
  rep.pass_pairs = cls.members.size() < 2 ||
                   (rep.min_pair_dist_sq >= rep.pair_lower - slack &&
                    rep.max_pair_dist_sq <= rep.pair_upper + slack);
  rep.pass_ref = rep.max_ref_dist_sq <= rep.ref_upper + slack &&
                 rep.max_ref_dist_sq <= r2 + slack;
  return rep;
}

struct McDiarmidReport {
  std::size_t pairs = 0;
  std::size_t violations = 0;
  double frequency = 0.0;
  double bound = 0.0;   // 2 L^2 exp(-beta^2 / (4 alpha^4 m p)), L = 2 per pair
  double alpha = 0.0;
  double beta = 0.0;
  bool applicable = false;  // bound < 1
  bool pass = false;        // frequency <= bound whenever applicable
};

// Empirical concentration check for inner products of independent sign
// matrices: draws `pairs` pairs of m x p matrices with entries +/- alpha and
// compares the frequency of |<A, B>| >= beta against the McDiarmid tail bound
// with L = 2 (one pair per draw).
inline McDiarmidReport mcdiarmid_check(std::size_t m, std::size_t p, double alpha,
                                       double beta, std::size_t pairs,
                                       std::uint64_t seed) {
  detail::require(m >= 1 && p >= 1 && pairs >= 1, "mcdiarmid_check: bad sizes");
  detail::require(alpha > 0.0 && beta > 0.0, "mcdiarmid_check: bad parameters");
  McDiarmidReport rep;
  rep.pairs = pairs;
  rep.alpha = alpha;
  rep.beta = beta;
  rep.bound = 2.0 * 4.0 *
              std::exp(-(beta * beta) /
                       (4.0 * std::pow(alpha, 4.0) * static_cast<double>(m) *
                        static_cast<double>(p)));
  rep.applicable = rep.bound < 1.0;
  Rng rng(derive_seed(seed, {0x6d636431ULL}));
  for (std::size_t i = 0; i < pairs; ++i) {
    double inner = 0.0;
    for (std::size_t e = 0; e < m * p; ++e) {
      const double a = alpha * rng.sign();
      const double b = alpha * rng.sign();
      inner += a * b;
    }
    if (std::abs(inner) >= beta) ++rep.violations;
  }
  rep.frequency =
      static_cast<double>(rep.violations) / static_cast<double>(pairs);
  rep.pass = !rep.applicable || rep.frequency <= rep.bound;
  return rep;
}

// Nearest member to dhat in Frobenius distance; ties resolve to the lowest
// index.
inline std::size_t min_distance_detect(const DenseMatrix& dhat,
                                       const PackingClass& cls) {
  detail::require(!cls.members.empty(), "min_distance_detect: empty class");
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cls.members.size(); ++i) {
    const double d = frobenius_distance(dhat, cls.members[i].assemble());
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  return best;
}

}  // namespace kronlearn
