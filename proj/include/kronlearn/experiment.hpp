#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "kronlearn/bounds.hpp"
#include "kronlearn/coefficients.hpp"
#include "kronlearn/common.hpp"
#include "kronlearn/config.hpp"
#include "kronlearn/csv.hpp"
#include "kronlearn/dictionary.hpp"
#include "kronlearn/estimator.hpp"
#include "kronlearn/matrix.hpp"

namespace kronlearn {

struct RunResult {
  CsvWriter csv;
  bool pass = true;     // false when a verification-style run failed a check
  std::string message;  // one-line human summary
};

namespace detail {

constexpr std::uint64_t kTagFigure = 0x66696731ULL;    // factor/data streams
constexpr std::uint64_t kTagDetector = 0x64657463ULL;  // detector trials

struct SampleStats {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean (ddof = 1)
  double median = 0.0;
};

inline SampleStats summarize(std::vector<double> v) {
  require(!v.empty(), "summarize: empty sample");
  SampleStats st;
  const double n = static_cast<double>(v.size());
  for (double x : v) st.mean += x;
  st.mean /= n;
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - st.mean) * (x - st.mean);
    st.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  st.median = v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
  return st;
}

// Largest common radius rho = r1 = r2 admissible for the two-factor error
// guarantee at the given sample count; 0 when even the degenerate case fails
// (then the caller warns and runs unperturbed).
inline double admissible_radius(std::size_t p1, std::size_t p2, std::size_t s,
                                std::size_t n, double sigma, double r) {
  if (!check_estimator_guarantee(0.0, 0.0, p1, p2, s, n, sigma, r).all())
    return 0.0;
  double lo = 0.0, hi = 1.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (check_estimator_guarantee(mid, mid, p1, p2, s, n, sigma, r).all())
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

inline void normalize_columns(DenseMatrix& a) {
  for (std::size_t j = 0; j < a.cols; ++j) {
    double n = 0.0;
    for (std::size_t i = 0; i < a.rows; ++i) n += a(i, j) * a(i, j);
    n = std::sqrt(n);
    require(n > 0.0, "normalize_columns: zero column");
    for (std::size_t i = 0; i < a.rows; ++i) a(i, j) /= n;
  }
}

// Identity perturbed by a fixed random direction at Frobenius radius rho,
// then column-normalized. Returns the factor and its realized distance
// from the identity (normalization shifts it slightly).
inline std::pair<DenseMatrix, double> perturbed_identity(std::size_t p,
                                                         double rho,
                                                         Rng& rng) {
  DenseMatrix g(p, p);
  for (double& v : g.data) v = rng.normal();
  const double gn = frobenius_norm(g);
  require(gn > 0.0, "perturbed_identity: degenerate direction");
  DenseMatrix a = DenseMatrix::identity(p) + (rho / gn) * g;
  normalize_columns(a);
  return {a, frobenius_distance(a, DenseMatrix::identity(p))};
}

// Draws both factors at the largest admissible radius, shrinking until the
// realized (post-normalization) radii satisfy every condition at n_max.
inline std::pair<DenseMatrix, DenseMatrix> draw_admissible_factors(
    std::size_t p1, std::size_t p2, std::size_t s, std::size_t n_max,
    double sigma, double r, double rho, Rng& rng) {
  if (rho == 0.0)
    return {DenseMatrix::identity(p1), DenseMatrix::identity(p2)};
  DenseMatrix g1(p1, p1), g2(p2, p2);
  for (double& v : g1.data) v = rng.normal();
  for (double& v : g2.data) v = rng.normal();
  const double n1 = frobenius_norm(g1), n2 = frobenius_norm(g2);
  require(n1 > 0.0 && n2 > 0.0, "draw_admissible_factors: degenerate direction");
  double scale = rho;
  for (int attempt = 0; attempt < 200; ++attempt) {
    DenseMatrix a = DenseMatrix::identity(p1) + (scale / n1) * g1;
    DenseMatrix b = DenseMatrix::identity(p2) + (scale / n2) * g2;
    normalize_columns(a);
    normalize_columns(b);
    const double r1 = frobenius_distance(a, DenseMatrix::identity(p1));
    const double r2 = frobenius_distance(b, DenseMatrix::identity(p2));
    if (check_estimator_guarantee(r1, r2, p1, p2, s, n_max, sigma, r).all())
      return {a, b};
    scale *= 0.9;
  }
  throw construction_error(
      "draw_admissible_factors: no admissible radius found");
}

}  // namespace detail

// Monte-Carlo recovery sweep: for each total size p, draw one perturbed
// Kronecker dictionary at the largest admissible radius, then sweep the
// sample grid with `trials` independent ternary data sets per point. The
// flat (structure-blind) baseline runs on the same data when requested.
inline RunResult run_figure(const RunConfig& cfg, bool with_unstructured) {
  const FigureConfig& fig = cfg.figure;
  const std::uint64_t hash = config_hash(cfg);

  std::vector<std::string> header = {
      "p",       "p1",      "p2",         "N",          "trials",
      "s",       "sigma",   "rho",        "mse_mean",   "mse_se",
      "mse_median", "upper_bound", "ratio_mean"};
  if (with_unstructured) {
    header.push_back("flat_mean");
    header.push_back("flat_se");
    header.push_back("flat_median");
  }
  header.push_back("config_hash");
  RunResult result{CsvWriter(header)};

  std::size_t n_max = 0;
  for (std::size_t n : fig.n_grid) n_max = std::max(n_max, n);

  for (std::size_t pi = 0; pi < fig.p_list.size(); ++pi) {
    const std::size_t p = fig.p_list[pi];
    const std::size_t s = fig.s_list[pi];
    const auto [p1, p2] = balanced_factor_pair(p);

    const double rho = detail::admissible_radius(p1, p2, s, n_max, fig.sigma,
                                                 fig.r);
    if (rho == 0.0 && fig.sigma > 0.4)
      std::cerr << "warning: noise level " << fig.sigma
                << " violates the error-guarantee conditions; running "
                   "unperturbed\n";
    Rng factor_rng(derive_seed(cfg.seed, {detail::kTagFigure, 0x666163ULL, p}));
    const auto [a, b] = detail::draw_admissible_factors(
        p1, p2, s, n_max, fig.sigma, fig.r, rho, factor_rng);
    const DenseMatrix truth = kron(a, b);

    CoefficientSpec spec;
    spec.model = CoefficientModel::ternary_sparse;
    spec.dims = {p1, p2};
    spec.s = s;
    const FactorLayout layout{p1, p2};
    const double snr_value =
        fig.sigma > 0.0
            ? snr(spec, truth.rows, fig.sigma)
            : std::numeric_limits<double>::infinity();

    for (std::size_t n : fig.n_grid) {
      std::vector<double> mse(fig.trials), flat(fig.trials);
      for (std::size_t trial = 0; trial < fig.trials; ++trial) {
        const std::uint64_t seed =
            derive_seed(cfg.seed, {detail::kTagFigure, p, n, trial});
        const Observations obs =
            generate_observations(truth, spec, n, fig.sigma, seed);
        const EstimatorOutput est = ks_estimate(obs.y, layout, s, &truth);
        mse[trial] = est.mse.value();
        if (with_unstructured) {
          const DenseMatrix d_flat = unstructured_estimate(obs.y, s);
          const double dist = frobenius_distance(d_flat, truth);
          flat[trial] = dist * dist;
        }
      }
      const detail::SampleStats mst = detail::summarize(mse);
      const double ub =
          mse_upper_bound_k2(p1, p2, p1, p2, n, snr_value, fig.sigma);
      std::vector<std::string> row = {
          csv_cell(p),          csv_cell(p1),
          csv_cell(p2),         csv_cell(n),
          csv_cell(fig.trials), csv_cell(s),
          csv_cell(fig.sigma),  csv_cell(rho),
          csv_cell(mst.mean),   csv_cell(mst.se),
          csv_cell(mst.median), csv_cell(ub),
          csv_cell(mst.mean / ub)};
      if (with_unstructured) {
        const detail::SampleStats fst = detail::summarize(flat);
        row.push_back(csv_cell(fst.mean));
        row.push_back(csv_cell(fst.se));
        row.push_back(csv_cell(fst.median));
      }
      row.push_back(csv_cell_hex(hash));
      result.csv.add_row(row);
    }
  }
  result.message = "recovery sweep complete";
  return result;
}

// Evaluates every closed-form bound over the sample grid: one row per
// (bound, N). The general form is evaluated at the sparse-model covariance
// so its row is directly comparable.
inline RunResult run_bounds_sweep(const RunConfig& cfg) {
  const BoundsConfig& bc = cfg.bounds;
  const std::uint64_t hash = config_hash(cfg);
  RunResult result{CsvWriter({"bound", "N", "value", "term1", "term2", "term3",
                              "active", "validity_count", "config_hash"})};

  BoundInputs in;
  in.m_dims = bc.m_dims;
  in.p_dims = bc.p_dims;
  in.s = bc.s;
  in.sigma = bc.sigma;
  in.sigma_a = bc.sigma_a;
  in.r = bc.r;
  in.t = bc.t;
  in.c1 = bc.c1;
  in.sigma_x_norm = static_cast<double>(bc.s) * bc.sigma_a * bc.sigma_a /
                    static_cast<double>(in.p());

  auto add_report = [&](const std::string& name, std::size_t n,
                        const BoundReport& rep) {
    result.csv.add_row({name, csv_cell(n), csv_cell(rep.value),
                        csv_cell(rep.terms[0]), csv_cell(rep.terms[1]),
                        csv_cell(rep.terms[2]), csv_cell(rep.active),
                        csv_cell(rep.validity.size()), csv_cell_hex(hash)});
  };

  const bool two_factor = bc.m_dims.size() == 2;
  for (std::size_t n : bc.n_grid) {
    in.N = n;
    add_report("lb_general", n, lower_bound_general(in));
    add_report("lb_sparse", n, lower_bound_sparse(in));
    add_report("lb_sparse_gaussian_random", n,
               lower_bound_sparse_gaussian(in, false));
    add_report("lb_sparse_gaussian_separable", n,
               lower_bound_sparse_gaussian(in, true));
    if (two_factor) {
      const double m = static_cast<double>(in.m());
      const double snr_value = static_cast<double>(bc.s) * bc.sigma_a *
                               bc.sigma_a / (m * bc.sigma * bc.sigma);
      const double ub =
          mse_upper_bound_k2(bc.p_dims[0], bc.p_dims[1], bc.m_dims[0],
                             bc.m_dims[1], n, snr_value, bc.sigma);
      result.csv.add_row({"ub_k2", csv_cell(n), csv_cell(ub), csv_cell(0.0),
                          csv_cell(0.0), csv_cell(0.0), csv_cell(-1),
                          csv_cell(std::size_t{0}), csv_cell_hex(hash)});
    }
  }
  result.message = "bound sweep complete";
  return result;
}

namespace detail {

inline PackingClass build_from_config(const PackingConfig& pack,
                                      std::uint64_t seed) {
  KsDictionary reference;
  for (std::size_t d : pack.dims)
    reference.factors.push_back(DenseMatrix::identity(d));
  const double p = static_cast<double>(reference.cols());
  const double k = static_cast<double>(pack.dims.size());
  const double wall = std::min(pack.r * pack.r,
                               std::pow(pack.r, 4.0) / (2.0 * k * p));
  PackingParams prm;
  prm.r = pack.r;
  prm.t = pack.t;
  prm.c1 = pack.c1;
  prm.eps_prime = pack.eps_fraction * wall;
  prm.count = pack.count;
  prm.seed = seed;
  return build_packing_class(reference, prm);
}

}  // namespace detail

// Builds the packing class, optionally corrupts one member as a negative
// control, and reports every verification metric as (metric, value) rows.
// result.pass reflects the combined verdict.
inline RunResult run_packing(const RunConfig& cfg) {
  const PackingConfig& pack = cfg.packing;
  const std::uint64_t hash = config_hash(cfg);
  RunResult result{CsvWriter({"metric", "value", "config_hash"})};

  PackingClass cls = detail::build_from_config(pack, cfg.seed);
  if (pack.corrupt_member) cls.members[0].factors[0](0, 0) += 0.5;

  const PackingVerifyReport rep = verify_packing(cls);
  auto add = [&](const std::string& name, double value) {
    result.csv.add_row({name, csv_cell(value), csv_cell_hex(hash)});
  };
  add("eta", cls.eta);
  add("nu", cls.nu);
  add("eta_nu_identity_dev", rep.eta_nu_identity_dev);
  add("max_unit_norm_dev", rep.max_unit_norm_dev);
  add("max_factor_orth", rep.max_factor_orth);
  add("min_pair_dist_sq", rep.min_pair_dist_sq);
  add("pair_lower", rep.pair_lower);
  add("max_pair_dist_sq", rep.max_pair_dist_sq);
  add("pair_upper", rep.pair_upper);
  add("max_ref_dist_sq", rep.max_ref_dist_sq);
  add("ref_upper", rep.ref_upper);
  add("r_sq", rep.r_sq);
  add("pair_count", static_cast<double>(rep.pair_count));
  add("verify_pass", rep.pass() ? 1.0 : 0.0);

  bool mcdiarmid_pass = true;
  const double r_1k =
      std::pow(pack.r, 1.0 / static_cast<double>(pack.dims.size()));
  const double r_2k =
      std::pow(pack.r, 2.0 / static_cast<double>(pack.dims.size()));
  for (std::size_t k = 0; k < pack.dims.size(); ++k) {
    const std::size_t mk = pack.dims[k];
    const std::string tag = "mode" + std::to_string(k + 1) + "_";
    add(tag + "capacity_exponent", cls.capacity_exponent[k]);
    add(tag + "capacity", cls.capacity[k]);
    const double alpha =
        1.0 / (r_1k * std::sqrt(static_cast<double>(mk - 1)));
    const double beta = static_cast<double>(mk) * pack.t / r_2k;
    const McDiarmidReport mc =
        mcdiarmid_check(mk - 1, mk, alpha, beta, pack.mcdiarmid_pairs,
                        derive_seed(cfg.seed, {0x6d63ULL, k}));
    add(tag + "mcdiarmid_bound", mc.bound);
    add(tag + "mcdiarmid_frequency", mc.frequency);
    add(tag + "mcdiarmid_violations", static_cast<double>(mc.violations));
    add(tag + "mcdiarmid_applicable", mc.applicable ? 1.0 : 0.0);
    add(tag + "mcdiarmid_pass", mc.pass ? 1.0 : 0.0);
    mcdiarmid_pass = mcdiarmid_pass && mc.pass;
  }

  const CovarianceDiffReport cov = covariance_diff_check(cls, {0}, 1.0, 0.0);
  add("cov_pairs", static_cast<double>(cov.pairs));
  add("cov_max_norm", cov.max_norm);
  add("cov_bound", cov.bound);
  add("cov_max_ratio", cov.max_ratio);
  add("cov_pass", cov.pass ? 1.0 : 0.0);

  result.pass = rep.pass() && mcdiarmid_pass && cov.pass;
  result.message = result.pass ? "packing verification passed"
                               : "packing verification FAILED";
  return result;
}

// Identification sweep: draw a member uniformly, observe data generated from
// it, estimate the dictionary, and detect by minimum distance. Reports the
// empirical error probability and the mean margin between the two nearest
// members per noise level.
inline RunResult run_detector(const RunConfig& cfg) {
  const DetectorConfig& det = cfg.detector;
  const std::uint64_t hash = config_hash(cfg);
  RunResult result{CsvWriter({"sigma", "trials", "n", "s", "errors",
                              "error_rate", "mean_gap", "config_hash"})};

  const PackingClass cls = detail::build_from_config(det.packing, cfg.seed);
  std::vector<DenseMatrix> assembled;
  assembled.reserve(cls.members.size());
  for (const KsDictionary& m : cls.members) assembled.push_back(m.assemble());

  const FactorLayout layout{det.packing.dims[0], det.packing.dims[1]};
  CoefficientSpec spec;
  spec.model = CoefficientModel::ternary_sparse;
  spec.dims = det.packing.dims;
  spec.s = det.s;

  for (std::size_t si = 0; si < det.sigma_grid.size(); ++si) {
    const double sigma = det.sigma_grid[si];
    std::size_t errors = 0;
    double gap_sum = 0.0;
    for (std::size_t trial = 0; trial < det.trials; ++trial) {
      const std::uint64_t seed =
          derive_seed(cfg.seed, {detail::kTagDetector, si, trial});
      Rng pick(derive_seed(seed, {0x696478ULL}));
      const std::size_t truth = pick.index(cls.members.size());
      const Observations obs = generate_observations(
          assembled[truth], spec, det.n, sigma, derive_seed(seed, {0x6f6273ULL}));
      const EstimatorOutput est = ks_estimate(obs.y, layout, det.s);
      const std::size_t detected = min_distance_detect(est.d_hat, cls);
      if (detected != truth) ++errors;

      double best = std::numeric_limits<double>::infinity();
      double second = std::numeric_limits<double>::infinity();
      for (const DenseMatrix& m : assembled) {
        const double d = frobenius_distance(est.d_hat, m);
        if (d < best) {
          second = best;
          best = d;
        } else if (d < second) {
          second = d;
        }
      }
      gap_sum += second - best;
    }
    result.csv.add_row(
        {csv_cell(sigma), csv_cell(det.trials), csv_cell(det.n),
         csv_cell(det.s), csv_cell(errors),
         csv_cell(static_cast<double>(errors) /
                  static_cast<double>(det.trials)),
         csv_cell(gap_sum / static_cast<double>(det.trials)),
         csv_cell_hex(hash)});
  }
  result.message = "detector sweep complete";
  return result;
}

inline RunResult run_experiment(const RunConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::figure1a: return run_figure(cfg, false);
    case ExperimentKind::figure1b: return run_figure(cfg, true);
    case ExperimentKind::bounds: return run_bounds_sweep(cfg);
    case ExperimentKind::packing: return run_packing(cfg);
    case ExperimentKind::detector: return run_detector(cfg);
  }
  throw config_error("run_experiment: unreachable");
}

}  // namespace kronlearn
