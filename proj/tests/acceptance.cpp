// End-to-end acceptance gate. Each numbered criterion prints exactly one
// PASS/FAIL line with its runtime; the process exit code is the number of
// failed criteria. The reproducibility criterion drives the installed CLI,
// located through the KRONLEARN_BIN environment variable.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "kronlearn/bounds.hpp"
#include "kronlearn/coefficients.hpp"
#include "kronlearn/common.hpp"
#include "kronlearn/config.hpp"
#include "kronlearn/dictionary.hpp"
#include "kronlearn/estimator.hpp"
#include "kronlearn/experiment.hpp"
#include "kronlearn/matrix.hpp"
#include "kronlearn/tensor.hpp"

using namespace kronlearn;

namespace {

int g_failures = 0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

void criterion(int id, const char* name, double budget_s,
               const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail = std::string("exception: ") + e.what();
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  const bool in_budget = elapsed < budget_s;
  const bool pass = out.pass && in_budget;
  std::printf("criterion %2d [%s]: %s — %s (%.2fs%s budget %.0fs)\n", id, name,
              pass ? "PASS" : "FAIL", out.detail.c_str(), elapsed,
              in_budget ? "," : ", OVER", budget_s);
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

DenseMatrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  DenseMatrix m(rows, cols);
  for (double& v : m.data) v = rng.normal();
  return m;
}

std::size_t dim(Rng& rng) { return 2 + rng.index(3); }  // 2..4

// --- criterion 1: algebraic identities ------------------------------------

Outcome algebraic_identities() {
  Rng rng(derive_seed(20240816, {0x616c67ULL}));
  double worst = 0.0;

  for (int i = 0; i < 100; ++i) {  // mixed product
    const DenseMatrix a = random_matrix(dim(rng), dim(rng), rng);
    const DenseMatrix b = random_matrix(dim(rng), dim(rng), rng);
    const DenseMatrix c = random_matrix(a.cols, dim(rng), rng);
    const DenseMatrix d = random_matrix(b.cols, dim(rng), rng);
    worst = std::max(worst, max_abs_diff(matmul(kron(a, b), kron(c, d)),
                                         kron(matmul(a, c), matmul(b, d))));
  }

  for (int i = 0; i < 100; ++i) {  // Frobenius factorization
    const DenseMatrix x = random_matrix(dim(rng), dim(rng), rng);
    const DenseMatrix y = random_matrix(dim(rng), dim(rng), rng);
    worst = std::max(worst, std::abs(frobenius_norm(kron(x, y)) -
                                     frobenius_norm(x) * frobenius_norm(y)));
  }

  for (std::size_t order : {std::size_t{2}, std::size_t{3}}) {  // Tucker vec
    for (int i = 0; i < 100; ++i) {
      std::vector<std::size_t> dims;
      std::vector<DenseMatrix> factors;
      for (std::size_t k = 0; k < order; ++k) dims.push_back(dim(rng));
      DenseTensor core(dims);
      for (double& v : core.data) v = rng.normal();
      for (std::size_t k = 0; k < order; ++k)
        factors.push_back(random_matrix(dim(rng), dims[k], rng));
      const DenseTensor rec = tucker_reconstruct(core, factors);

      DenseMatrix big = factors[order - 1];
      for (std::size_t k = order - 1; k-- > 0;) big = kron(big, factors[k]);
      DenseMatrix v(core.size(), 1);
      v.data = vec(core);
      const DenseMatrix lhs = matmul(big, v);
      DenseMatrix rhs(rec.size(), 1);
      rhs.data = vec(rec);
      worst = std::max(worst, max_abs_diff(lhs, rhs));
    }
  }

  for (int i = 0; i < 100; ++i) {  // mode-k product vs unfolding
    std::vector<std::size_t> dims = {dim(rng), dim(rng), dim(rng)};
    DenseTensor t(dims);
    for (double& v : t.data) v = rng.normal();
    for (std::size_t k = 1; k <= 3; ++k) {
      const DenseMatrix a = random_matrix(dim(rng), dims[k - 1], rng);
      worst = std::max(worst,
                       max_abs_diff(mode_k_unfold(mode_k_product(t, a, k), k),
                                    matmul(a, mode_k_unfold(t, k))));
    }
  }

  std::ostringstream os;
  os << "max abs error " << worst;
  return {worst <= 1e-12, os.str()};
}

// --- criteria 2-4: packing class, concentration, covariance ---------------

PackingClass reference_class() {
  KsDictionary reference;
  reference.factors = {DenseMatrix::identity(4), DenseMatrix::identity(4)};
  PackingParams prm;
  prm.r = 0.5;
  prm.t = 0.5;
  prm.c1 = 0.04;
  const double p = 16.0, k = 2.0;
  prm.eps_prime =
      0.5 * std::min(prm.r * prm.r, std::pow(prm.r, 4.0) / (2.0 * k * p));
  prm.count = 8;
  prm.seed = 20240816;
  return build_packing_class(reference, prm);
}

Outcome packing_construction() {
  const PackingClass cls = reference_class();
  const PackingVerifyReport rep = verify_packing(cls);
  std::ostringstream os;
  os << "unit-norm dev " << rep.max_unit_norm_dev << ", orth "
     << rep.max_factor_orth << ", " << rep.pair_count << " pairs in ["
     << rep.pair_lower << ", " << rep.pair_upper << "], ref dist^2 "
     << rep.max_ref_dist_sq << " <= " << rep.r_sq;
  const bool pass = rep.pass() && rep.pair_count == 28 &&
                    rep.max_unit_norm_dev <= 1e-9 &&
                    rep.max_factor_orth <= 1e-9 &&
                    rep.min_pair_dist_sq >= rep.pair_lower - 1e-12 &&
                    rep.max_pair_dist_sq <= rep.pair_upper + 1e-12 &&
                    rep.max_ref_dist_sq <= rep.r_sq + 1e-12;
  return {pass, os.str()};
}

Outcome concentration() {
  // Construction-scale parameters where the tail bound is informative:
  // 16 x 16 factors, sign matrices 15 x 16, alpha = 1/(r^{1/K} sqrt(m_k - 1)),
  // beta = p_k t / r^{2/K}.
  const double r = 0.5, t = 0.5;
  const double alpha16 = 1.0 / (std::sqrt(r) * std::sqrt(15.0));
  const double beta16 = 16.0 * t / r;
  const McDiarmidReport big = mcdiarmid_check(
      15, 16, alpha16, beta16, 10000, derive_seed(20240816, {0x6d6336ULL}));

  // Suite-scale parameters (4 x 4): the bound exceeds 1, so the check is
  // vacuous but must still report pass.
  const double alpha4 = 1.0 / (std::sqrt(r) * std::sqrt(3.0));
  const double beta4 = 4.0 * t / r;
  const McDiarmidReport small = mcdiarmid_check(
      3, 4, alpha4, beta4, 10000, derive_seed(20240816, {0x6d6337ULL}));

  std::ostringstream os;
  os << "16x16: freq " << big.frequency << " <= bound " << big.bound
     << "; 4x4 bound " << small.bound << " (vacuous)";
  const bool pass = big.applicable && big.pass &&
                    std::abs(big.bound - 8.0 * std::exp(-15.0)) <=
                        1e-12 * big.bound &&
                    !small.applicable && small.pass;
  return {pass, os.str()};
}

Outcome covariance_bound() {
  const PackingClass cls = reference_class();
  const CovarianceDiffReport rep = covariance_diff_check(cls, {0}, 1.0, 0.0);
  std::ostringstream os;
  os << rep.pairs << " pairs, max norm " << rep.max_norm << " <= bound "
     << rep.bound << ", max ratio " << rep.max_ratio;
  return {rep.pass && rep.max_ratio < 1.0, os.str()};
}

// --- criterion 5: bound evaluators -----------------------------------------

Outcome bound_evaluators() {
  // (a) the sparse bound must equal the general bound under the coefficient
  // covariance substitution, bit for bit.
  std::size_t checked = 0;
  for (std::size_t n : {100, 1000, 77, 123456}) {
    for (double sigma : {0.1, 1.0, 4.0}) {
      for (std::size_t s : {std::size_t{1}, std::size_t{5}}) {
        BoundInputs in;
        in.N = n;
        in.m_dims = {4, 4};
        in.p_dims = {8, 8};
        in.s = s;
        in.sigma = sigma;
        in.sigma_a = 1.25;
        in.r = 0.5;
        in.t = 0.5;
        in.c1 = 0.04;
        BoundInputs g = in;
        g.sigma_x_norm = static_cast<double>(s) * in.sigma_a * in.sigma_a /
                         static_cast<double>(in.p());
        const BoundReport bs = lower_bound_sparse(in);
        const BoundReport bg = lower_bound_general(g);
        if (bs.value != bg.value || bs.terms != bg.terms ||
            bs.active != bg.active)
          return {false, "sparse/general mismatch at N=" + std::to_string(n)};
        ++checked;

        // (b) exact halving of the information-limited term when N doubles.
        BoundInputs twice = in;
        twice.N = 2 * n;
        if (lower_bound_sparse(twice).terms[2] * 2.0 != bs.terms[2])
          return {false, "sparse term did not halve at N=" + std::to_string(n)};
        BoundInputs gtwice = g;
        gtwice.N = 2 * n;
        if (lower_bound_general(gtwice).terms[2] * 2.0 != bg.terms[2])
          return {false,
                  "general term did not halve at N=" + std::to_string(n)};
        for (bool separable : {false, true}) {
          const double base = lower_bound_sparse_gaussian(in, separable).terms[2];
          const double dbl =
              lower_bound_sparse_gaussian(twice, separable).terms[2];
          if (dbl * 2.0 != base)
            return {false,
                    "gaussian term did not halve at N=" + std::to_string(n)};
        }
      }
    }
  }

  // (c) the two-factor upper bound against independently computed values.
  struct Point {
    std::size_t p1, p2, m1, m2, n;
    double snr, sigma, expect;
  };
  const Point points[] = {
      {8, 8, 8, 8, 1000, 5.0 / (64.0 * 0.01), 0.1, 24.707072},
      {4, 4, 4, 4, 500, 2.0 / (16.0 * 0.04), 0.2, 6.307840000000001},
      {2, 8, 2, 8, 2000, 3.0 / (16.0 * 0.16), 0.4, 2.1521066666666666},
  };
  for (const Point& pt : points) {
    const double got =
        mse_upper_bound_k2(pt.p1, pt.p2, pt.m1, pt.m2, pt.n, pt.snr, pt.sigma);
    if (std::abs(got - pt.expect) > 1e-12 * std::abs(pt.expect))
      return {false, "upper bound off at N=" + std::to_string(pt.n)};
  }

  std::ostringstream os;
  os << checked << " exact equalities, halving exact, 3 reference points";
  return {true, os.str()};
}

// --- criterion 6: noiseless estimator oracle -------------------------------

Outcome estimator_oracle() {
  const DenseMatrix truth = DenseMatrix::identity(16);
  const FactorLayout layout{4, 4};
  CoefficientSpec spec;
  spec.model = CoefficientModel::ternary_sparse;
  spec.dims = {4, 4};
  spec.s = 2;

  const std::vector<std::size_t> n_grid = {500, 1000, 2000, 4000};
  std::vector<double> log_n, log_mse;
  for (std::size_t n : n_grid) {
    double total = 0.0;
    for (std::size_t trial = 0; trial < 25; ++trial) {
      const Observations obs = generate_observations(
          truth, spec, n, 0.0,
          derive_seed(20240816, {0x6f7261ULL, n, trial}));
      const EstimatorOutput est = ks_estimate(obs.y, layout, 2, &truth);
      if (est.x_hat.data != obs.x.data)
        return {false, "coefficients not recovered exactly at N=" +
                           std::to_string(n)};
      total += est.mse.value();
    }
    log_n.push_back(std::log(static_cast<double>(n)));
    log_mse.push_back(std::log(total / 25.0));
  }

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < log_n.size(); ++i) {
    mx += log_n[i];
    my += log_mse[i];
  }
  mx /= static_cast<double>(log_n.size());
  my /= static_cast<double>(log_n.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < log_n.size(); ++i) {
    num += (log_n[i] - mx) * (log_mse[i] - my);
    den += (log_n[i] - mx) * (log_n[i] - mx);
  }
  const double slope = num / den;
  std::ostringstream os;
  os << "exact coefficient recovery, error slope " << slope;
  return {slope >= -1.25 && slope <= -0.75, os.str()};
}

// --- criteria 7-9: desk-scale experiments ----------------------------------

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw std::runtime_error("missing column " + name);
  }

  double num(std::size_t row, const std::string& name) const {
    return std::stod(rows.at(row).at(col(name)));
  }
};

Table parse_csv(const std::string& text) {
  Table t;
  std::vector<std::string> line;
  std::string cell;
  bool first = true;
  for (char c : text) {
    if (c == ',') {
      line.push_back(cell);
      cell.clear();
    } else if (c == '\n') {
      line.push_back(cell);
      cell.clear();
      if (first) {
        t.header = line;
        first = false;
      } else {
        t.rows.push_back(line);
      }
      line.clear();
    } else {
      cell += c;
    }
  }
  return t;
}

Outcome figure_1a() {
  const RunConfig cfg = preset(ExperimentKind::figure1a, false);
  const FigureConfig& fig = cfg.figure;
  std::size_t n_max = 0;
  for (std::size_t n : fig.n_grid) n_max = std::max(n_max, n);

  std::size_t points = 0;
  double worst_fraction = 1.0;
  double worst_spread = 0.0;
  for (std::size_t pi = 0; pi < fig.p_list.size(); ++pi) {
    const std::size_t p = fig.p_list[pi];
    const std::size_t s = fig.s_list[pi];
    const auto [p1, p2] = balanced_factor_pair(p);
    const double rho =
        detail::admissible_radius(p1, p2, s, n_max, fig.sigma, fig.r);
    Rng factor_rng(
        derive_seed(cfg.seed, {detail::kTagFigure, 0x666163ULL, p}));
    const auto [a, b] = detail::draw_admissible_factors(
        p1, p2, s, n_max, fig.sigma, fig.r, rho, factor_rng);
    const DenseMatrix truth = kron(a, b);

    CoefficientSpec spec;
    spec.model = CoefficientModel::ternary_sparse;
    spec.dims = {p1, p2};
    spec.s = s;
    const FactorLayout layout{p1, p2};
    const double snr_value = snr(spec, truth.rows, fig.sigma);

    double ratio_min = std::numeric_limits<double>::infinity();
    double ratio_max = 0.0;
    for (std::size_t n : fig.n_grid) {
      const double ub =
          mse_upper_bound_k2(p1, p2, p1, p2, n, snr_value, fig.sigma);
      double mean = 0.0;
      std::size_t within = 0;
      for (std::size_t trial = 0; trial < fig.trials; ++trial) {
        const Observations obs = generate_observations(
            truth, spec, n, fig.sigma,
            derive_seed(cfg.seed, {detail::kTagFigure, p, n, trial}));
        const double mse =
            ks_estimate(obs.y, layout, s, &truth).mse.value();
        mean += mse;
        if (mse <= ub) ++within;
      }
      mean /= static_cast<double>(fig.trials);
      const double fraction =
          static_cast<double>(within) / static_cast<double>(fig.trials);
      worst_fraction = std::min(worst_fraction, fraction);
      if (mean > ub)
        return {false, "mean error above the guarantee at p=" +
                           std::to_string(p) + ", N=" + std::to_string(n)};
      ratio_min = std::min(ratio_min, mean / ub);
      ratio_max = std::max(ratio_max, mean / ub);
      ++points;
    }
    worst_spread = std::max(worst_spread, ratio_max / ratio_min);
  }
  std::ostringstream os;
  os << points << " grid points, worst within-bound fraction "
     << worst_fraction << ", ratio spread " << worst_spread << "x";
  return {worst_fraction >= 0.95 && worst_spread < 10.0, os.str()};
}

Outcome figure_1b() {
  const RunConfig cfg = preset(ExperimentKind::figure1b, false);
  const Table t = parse_csv(run_figure(cfg, true).csv.str());
  double worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t row = 0; row < t.rows.size(); ++row) {
    const double ks = t.num(row, "mse_median");
    const double flat = t.num(row, "flat_median");
    if (!(ks < flat))
      return {false, "structured median not below baseline in row " +
                         std::to_string(row)};
    worst_margin = std::min(worst_margin, flat / ks);
  }
  std::ostringstream os;
  os << t.rows.size() << " grid points, baseline/structured median ratio >= "
     << worst_margin;
  return {t.rows.size() == 8, os.str()};
}

Outcome detector() {
  const RunConfig cfg = preset(ExperimentKind::detector, false);
  const Table t = parse_csv(run_detector(cfg).csv.str());
  if (t.rows.size() != 2) return {false, "expected two noise levels"};
  const double low_errors = t.num(0, "errors");
  const double high_rate = t.num(1, "error_rate");
  const double chance = 7.0 / 8.0;
  std::ostringstream os;
  os << "sigma=0.01: " << low_errors << " errors; sigma=10: rate " << high_rate
     << " vs chance " << chance;
  return {low_errors == 0.0 && std::abs(high_rate - chance) <= 0.1, os.str()};
}

// --- criterion 10: byte-identical reruns through the CLI -------------------

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

Outcome reproducibility() {
  const char* bin = std::getenv("KRONLEARN_BIN");
  if (bin == nullptr || *bin == '\0')
    return {false, "KRONLEARN_BIN is not set"};

  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "kronlearn_acceptance";
  fs::create_directories(dir);

  const fs::path tiny_fig = dir / "tiny_fig.json";
  std::ofstream(tiny_fig) << "{\"p\": [16], \"s\": [2], \"N\": [500], "
                             "\"trials\": 5}";
  const fs::path tiny_det = dir / "tiny_det.json";
  std::ofstream(tiny_det) << "{\"trials\": 20, \"sigma_grid\": [0.01]}";

  struct Cmd {
    std::string name;
    std::string args;
  };
  const Cmd cmds[] = {
      {"bounds", "bounds --desk"},
      {"packing", "packing --desk"},
      {"figure1a", "figure1a --desk --config " + tiny_fig.string()},
      {"figure1b", "figure1b --desk --config " + tiny_fig.string()},
      {"detector", "detector --desk --config " + tiny_det.string()},
  };

  std::size_t compared = 0;
  for (const Cmd& cmd : cmds) {
    const fs::path out1 = dir / (cmd.name + "_1.csv");
    const fs::path out2 = dir / (cmd.name + "_2.csv");
    for (const fs::path& out : {out1, out2}) {
      const std::string line = std::string("\"") + bin + "\" " + cmd.args +
                               " --seed 20240816 --out " + out.string() +
                               " > /dev/null";
      if (std::system(line.c_str()) != 0)
        return {false, cmd.name + " run failed"};
    }
    const std::string body1 = read_file(out1);
    if (body1.empty() || body1 != read_file(out2))
      return {false, cmd.name + " reruns differ"};
    ++compared;
  }
  fs::remove_all(dir);
  std::ostringstream os;
  os << compared << " subcommands byte-identical across reruns";
  return {compared == 5, os.str()};
}

}  // namespace

int main() {
  criterion(1, "algebraic identities", 5.0, algebraic_identities);
  criterion(2, "packing construction", 10.0, packing_construction);
  criterion(3, "sign-matrix concentration", 30.0, concentration);
  criterion(4, "covariance spectral bound", 10.0, covariance_bound);
  criterion(5, "bound evaluators", 1.0, bound_evaluators);
  criterion(6, "noiseless estimator oracle", 60.0, estimator_oracle);
  criterion(7, "recovery error vs guarantee", 300.0, figure_1a);
  criterion(8, "structured vs baseline", 600.0, figure_1b);
  criterion(9, "dictionary identification", 120.0, detector);
  criterion(10, "byte-identical reruns", 120.0, reproducibility);

  if (g_failures == 0)
    std::printf("all criteria passed\n");
  else
    std::printf("%d criteria failed\n", g_failures);
  return g_failures;
}
