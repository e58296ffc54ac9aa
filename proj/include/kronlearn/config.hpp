#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kronlearn/common.hpp"

namespace kronlearn {

enum class ExperimentKind { figure1a, figure1b, bounds, packing, detector };

inline std::string kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::figure1a: return "figure1a";
    case ExperimentKind::figure1b: return "figure1b";
    case ExperimentKind::bounds: return "bounds";
    case ExperimentKind::packing: return "packing";
    case ExperimentKind::detector: return "detector";
  }
  throw config_error("kind_name: unreachable");
}

inline ExperimentKind parse_kind(const std::string& name) {
  for (ExperimentKind k :
       {ExperimentKind::figure1a, ExperimentKind::figure1b,
        ExperimentKind::bounds, ExperimentKind::packing,
        ExperimentKind::detector})
    if (kind_name(k) == name) return k;
  throw config_error("unknown experiment '" + name + "'");
}

// Most balanced factor pair p = p1 * p2 with p1 >= p2: p2 is the largest
// divisor not exceeding sqrt(p).
inline std::pair<std::size_t, std::size_t> balanced_factor_pair(std::size_t p) {
  if (p < 1) throw config_error("balanced_factor_pair: p must be positive");
  std::size_t best = 1;
  for (std::size_t d = 1; d * d <= p; ++d)
    if (p % d == 0) best = d;
  return {p / best, best};
}

// Monte-Carlo dictionary-recovery sweep (the two figure experiments).
struct FigureConfig {
  std::vector<std::size_t> p_list;  // total dictionary sizes to sweep
  std::vector<std::size_t> s_list;  // sparsity per p entry (aligned)
  std::vector<std::size_t> n_grid;  // sample counts
  std::size_t trials = 0;
  double sigma = 0.0;
  double r = 0.0;  // neighborhood radius budget for the perturbation
};

// Closed-form bound evaluation over a sample-count grid.
struct BoundsConfig {
  std::vector<std::size_t> m_dims;
  std::vector<std::size_t> p_dims;
  std::size_t s = 0;
  double sigma = 0.0;
  double sigma_a = 1.0;
  double r = 0.0;
  double t = 0.0;
  double c1 = 0.0;
  std::vector<std::size_t> n_grid;
};

// Packing construction + verification around an identity reference.
struct PackingConfig {
  std::vector<std::size_t> dims;  // per-mode size (reference is I, m_k = p_k)
  double r = 0.0;
  double t = 0.0;
  double c1 = 0.0;
  double eps_fraction = 0.0;  // of the wall min{r^2, r^4/(2Kp)}
  std::size_t count = 0;
  std::size_t mcdiarmid_pairs = 0;
  bool corrupt_member = false;  // negative control: break a member on purpose
};

// Identification experiment: who generated the data, by nearest estimate.
struct DetectorConfig {
  PackingConfig packing;
  std::size_t s = 0;
  std::size_t n = 0;
  std::size_t trials = 0;
  std::vector<double> sigma_grid;
};

struct RunConfig {
  ExperimentKind kind = ExperimentKind::figure1a;
  std::uint64_t seed = 0;
  std::string out;
  FigureConfig figure;
  BoundsConfig bounds;
  PackingConfig packing;
  DetectorConfig detector;
};

inline RunConfig preset(ExperimentKind kind, bool full) {
  RunConfig cfg;
  cfg.kind = kind;
  cfg.seed = 20240816;
  cfg.out = kind_name(kind) + ".csv";

  PackingConfig pack;
  pack.dims = {4, 4};
  pack.r = 0.5;
  pack.t = 0.5;
  pack.c1 = 0.04;
  pack.eps_fraction = 0.5;
  pack.count = 8;
  pack.mcdiarmid_pairs = 10000;

  switch (kind) {
    case ExperimentKind::figure1a:
    case ExperimentKind::figure1b:
      if (full) {
        cfg.figure.p_list = {128, 256, 512};
        cfg.figure.s_list = {5, 5, 5};
        cfg.figure.n_grid = {1000, 2000, 4000, 8000};
        cfg.figure.trials = 50;
      } else {
        cfg.figure.p_list = {16, 64};
        cfg.figure.s_list = {2, 5};
        cfg.figure.n_grid = {500, 1000, 2000, 4000};
        cfg.figure.trials = 25;
      }
      cfg.figure.sigma = 0.1;
      cfg.figure.r = 0.1;
      break;
    case ExperimentKind::bounds:
      cfg.bounds.m_dims = {16, 8};
      cfg.bounds.p_dims = {16, 8};
      cfg.bounds.s = 5;
      cfg.bounds.sigma = 0.1;
      cfg.bounds.sigma_a = 1.0;
      cfg.bounds.r = 0.1;
      cfg.bounds.t = 0.5;
      cfg.bounds.c1 = 0.05;
      cfg.bounds.n_grid = full ? std::vector<std::size_t>{500, 1000, 2000,
                                                          4000, 8000, 16000,
                                                          32000, 64000}
                               : std::vector<std::size_t>{500, 1000, 2000,
                                                          4000};
      break;
    case ExperimentKind::packing:
      if (full) {
        pack.dims = {8, 8};
        pack.count = 32;
      }
      cfg.packing = pack;
      break;
    case ExperimentKind::detector:
      cfg.detector.packing = pack;
      cfg.detector.s = 2;
      cfg.detector.n = 500;
      cfg.detector.trials = full ? 1000 : 200;
      cfg.detector.sigma_grid =
          full ? std::vector<double>{0.01, 0.1, 1.0, 10.0}
               : std::vector<double>{0.01, 10.0};
      break;
  }
  return cfg;
}

namespace detail {

using json = nlohmann::json;

inline std::uint64_t get_u64(const json& j, const std::string& key) {
  const json& v = j.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw config_error("config field '" + key +
                     "' must be a nonnegative integer");
}

inline std::size_t get_usize(const json& j, const std::string& key) {
  return static_cast<std::size_t>(get_u64(j, key));
}

inline double get_double(const json& j, const std::string& key) {
  const json& v = j.at(key);
  if (!v.is_number())
    throw config_error("config field '" + key + "' must be a number");
  return v.get<double>();
}

inline bool get_bool(const json& j, const std::string& key) {
  const json& v = j.at(key);
  if (!v.is_boolean())
    throw config_error("config field '" + key + "' must be a boolean");
  return v.get<bool>();
}

inline std::vector<std::size_t> get_usize_list(const json& j,
                                               const std::string& key) {
  const json& v = j.at(key);
  if (!v.is_array())
    throw config_error("config field '" + key + "' must be an array");
  std::vector<std::size_t> out;
  for (const json& e : v) {
    if (e.is_number_unsigned())
      out.push_back(e.get<std::size_t>());
    else if (e.is_number_integer() && e.get<std::int64_t>() >= 0)
      out.push_back(static_cast<std::size_t>(e.get<std::int64_t>()));
    else
      throw config_error("config field '" + key +
                         "' must hold nonnegative integers");
  }
  return out;
}

inline std::vector<double> get_double_list(const json& j,
                                           const std::string& key) {
  const json& v = j.at(key);
  if (!v.is_array())
    throw config_error("config field '" + key + "' must be an array");
  std::vector<double> out;
  for (const json& e : v) {
    if (!e.is_number())
      throw config_error("config field '" + key + "' must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

inline void check_allowlist(const json& j,
                            const std::vector<std::string>& allowed) {
  if (!j.is_object()) throw config_error("config root must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const std::string& a : allowed)
      if (it.key() == a) {
        ok = true;
        break;
      }
    if (!ok) throw config_error("unknown config key '" + it.key() + "'");
  }
}

inline void overlay_packing(PackingConfig& pack, const json& j) {
  if (j.contains("dims")) pack.dims = get_usize_list(j, "dims");
  if (j.contains("r")) pack.r = get_double(j, "r");
  if (j.contains("t")) pack.t = get_double(j, "t");
  if (j.contains("c1")) pack.c1 = get_double(j, "c1");
  if (j.contains("eps_fraction"))
    pack.eps_fraction = get_double(j, "eps_fraction");
  if (j.contains("count")) pack.count = get_usize(j, "count");
  if (j.contains("mcdiarmid_pairs"))
    pack.mcdiarmid_pairs = get_usize(j, "mcdiarmid_pairs");
  if (j.contains("corrupt_member"))
    pack.corrupt_member = get_bool(j, "corrupt_member");
}

}  // namespace detail

// Overlays a JSON object onto the preset. Keys outside the experiment's
// allowlist are rejected so a config written for one subcommand cannot be
// silently consumed by another.
inline void overlay_json(RunConfig& cfg, const nlohmann::json& j) {
  using detail::check_allowlist;
  const std::vector<std::string> common = {"seed", "out"};
  auto with_common = [&](std::vector<std::string> keys) {
    keys.insert(keys.end(), common.begin(), common.end());
    return keys;
  };

  switch (cfg.kind) {
    case ExperimentKind::figure1a:
    case ExperimentKind::figure1b: {
      check_allowlist(j, with_common({"p", "s", "N", "trials", "sigma", "r"}));
      if (j.contains("p")) cfg.figure.p_list = detail::get_usize_list(j, "p");
      if (j.contains("s")) cfg.figure.s_list = detail::get_usize_list(j, "s");
      if (j.contains("N")) cfg.figure.n_grid = detail::get_usize_list(j, "N");
      if (j.contains("trials"))
        cfg.figure.trials = detail::get_usize(j, "trials");
      if (j.contains("sigma")) cfg.figure.sigma = detail::get_double(j, "sigma");
      if (j.contains("r")) cfg.figure.r = detail::get_double(j, "r");
      break;
    }
    case ExperimentKind::bounds: {
      check_allowlist(j, with_common({"m_dims", "p_dims", "s", "N", "sigma",
                                      "sigma_a", "r", "t", "c1"}));
      if (j.contains("m_dims"))
        cfg.bounds.m_dims = detail::get_usize_list(j, "m_dims");
      if (j.contains("p_dims"))
        cfg.bounds.p_dims = detail::get_usize_list(j, "p_dims");
      if (j.contains("s")) cfg.bounds.s = detail::get_usize(j, "s");
      if (j.contains("N")) cfg.bounds.n_grid = detail::get_usize_list(j, "N");
      if (j.contains("sigma")) cfg.bounds.sigma = detail::get_double(j, "sigma");
      if (j.contains("sigma_a"))
        cfg.bounds.sigma_a = detail::get_double(j, "sigma_a");
      if (j.contains("r")) cfg.bounds.r = detail::get_double(j, "r");
      if (j.contains("t")) cfg.bounds.t = detail::get_double(j, "t");
      if (j.contains("c1")) cfg.bounds.c1 = detail::get_double(j, "c1");
      break;
    }
    case ExperimentKind::packing: {
      check_allowlist(j, with_common({"dims", "r", "t", "c1", "eps_fraction",
                                      "count", "mcdiarmid_pairs",
                                      "corrupt_member"}));
      detail::overlay_packing(cfg.packing, j);
      break;
    }
    case ExperimentKind::detector: {
      check_allowlist(j, with_common({"dims", "r", "t", "c1", "eps_fraction",
                                      "count", "mcdiarmid_pairs",
                                      "corrupt_member", "s", "n", "trials",
                                      "sigma_grid"}));
      detail::overlay_packing(cfg.detector.packing, j);
      if (j.contains("s")) cfg.detector.s = detail::get_usize(j, "s");
      if (j.contains("n")) cfg.detector.n = detail::get_usize(j, "n");
      if (j.contains("trials"))
        cfg.detector.trials = detail::get_usize(j, "trials");
      if (j.contains("sigma_grid"))
        cfg.detector.sigma_grid = detail::get_double_list(j, "sigma_grid");
      break;
    }
  }
  if (j.contains("seed")) cfg.seed = detail::get_u64(j, "seed");
  if (j.contains("out")) {
    const nlohmann::json& v = j.at("out");
    if (!v.is_string()) throw config_error("config field 'out' must be a string");
    cfg.out = v.get<std::string>();
  }
}

namespace detail {

inline void validate_packing_config(const PackingConfig& pack,
                                    const char* prefix) {
  const std::string who(prefix);
  if (pack.dims.empty())
    throw config_error(who + "dims must be a nonempty array");
  for (std::size_t d : pack.dims)
    if (d < 2) throw config_error(who + "dims entries must be >= 2");
  if (!(pack.r > 0.0)) throw config_error(who + "r must be positive");
  if (!(pack.t > 0.0 && pack.t < 1.0))
    throw config_error(who + "t must lie in (0, 1)");
  const double c1_cap = pack.t * pack.t / (8.0 * std::log(2.0));
  if (!(pack.c1 > 0.0 && pack.c1 < c1_cap))
    throw config_error(who + "c1 must lie in (0, t^2/(8 ln 2))");
  if (!(pack.eps_fraction > 0.0 && pack.eps_fraction < 1.0))
    throw config_error(who + "eps_fraction must lie in (0, 1)");
  if (pack.count < 1) throw config_error(who + "count must be >= 1");
  if (pack.mcdiarmid_pairs < 1)
    throw config_error(who + "mcdiarmid_pairs must be >= 1");
}

}  // namespace detail

inline void validate(const RunConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::figure1a:
    case ExperimentKind::figure1b: {
      const FigureConfig& f = cfg.figure;
      if (f.p_list.empty()) throw config_error("figure: p must be nonempty");
      if (f.s_list.size() != f.p_list.size())
        throw config_error("figure: s must align with p (one entry each)");
      if (f.n_grid.empty()) throw config_error("figure: N must be nonempty");
      if (f.trials < 1) throw config_error("figure: trials must be >= 1");
      if (!(f.sigma >= 0.0)) throw config_error("figure: sigma must be >= 0");
      if (!(f.r > 0.0)) throw config_error("figure: r must be positive");
      std::size_t n_min = f.n_grid[0];
      for (std::size_t n : f.n_grid) {
        if (n < 1) throw config_error("figure: N entries must be >= 1");
        n_min = std::min(n_min, n);
      }
      for (std::size_t i = 0; i < f.p_list.size(); ++i) {
        const std::size_t p = f.p_list[i];
        const auto [p1, p2] = balanced_factor_pair(p);
        if (p2 < 2)
          throw config_error(
              "figure: p entries must admit a nontrivial factor pair");
        if (f.s_list[i] < 1 || f.s_list[i] > p)
          throw config_error("figure: s entries must lie in [1, p]");
        if (std::max(p1, p2) > n_min)
          throw config_error(
              "figure: max{p1, p2} must not exceed the smallest N");
      }
      break;
    }
    case ExperimentKind::bounds: {
      const BoundsConfig& b = cfg.bounds;
      if (b.m_dims.empty() || b.m_dims.size() != b.p_dims.size())
        throw config_error("bounds: m_dims and p_dims must align");
      std::size_t p = 1;
      for (std::size_t d : b.m_dims)
        if (d < 1) throw config_error("bounds: m_dims entries must be >= 1");
      for (std::size_t d : b.p_dims) {
        if (d < 1) throw config_error("bounds: p_dims entries must be >= 1");
        p *= d;
      }
      if (b.s < 1 || b.s > p)
        throw config_error("bounds: s must lie in [1, p]");
      if (!(b.sigma > 0.0)) throw config_error("bounds: sigma must be positive");
      if (!(b.sigma_a > 0.0))
        throw config_error("bounds: sigma_a must be positive");
      if (!(b.r > 0.0)) throw config_error("bounds: r must be positive");
      if (b.n_grid.empty()) throw config_error("bounds: N must be nonempty");
      for (std::size_t n : b.n_grid)
        if (n < 1) throw config_error("bounds: N entries must be >= 1");
      break;
    }
    case ExperimentKind::packing:
      detail::validate_packing_config(cfg.packing, "packing: ");
      break;
    case ExperimentKind::detector: {
      const DetectorConfig& d = cfg.detector;
      detail::validate_packing_config(d.packing, "detector: ");
      if (d.packing.dims.size() != 2)
        throw config_error(
            "detector: dims must have exactly two modes (two-factor "
            "estimator)");
      const std::size_t p = d.packing.dims[0] * d.packing.dims[1];
      if (d.s < 1 || d.s > p)
        throw config_error("detector: s must lie in [1, p]");
      if (d.trials < 1) throw config_error("detector: trials must be >= 1");
      if (d.n < std::max(d.packing.dims[0], d.packing.dims[1]))
        throw config_error("detector: n must be >= max{p1, p2}");
      if (d.sigma_grid.empty())
        throw config_error("detector: sigma_grid must be nonempty");
      for (double s : d.sigma_grid)
        if (!(s >= 0.0))
          throw config_error("detector: sigma_grid entries must be >= 0");
      break;
    }
  }
}

// Canonical semantic dump: every field that affects the computation, sorted
// keys, output path excluded. Used for the per-row config hash.
inline nlohmann::json semantic_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["kind"] = kind_name(cfg.kind);
  j["seed"] = cfg.seed;
  auto packing_json = [](const PackingConfig& pack) {
    nlohmann::json p;
    p["dims"] = pack.dims;
    p["r"] = pack.r;
    p["t"] = pack.t;
    p["c1"] = pack.c1;
    p["eps_fraction"] = pack.eps_fraction;
    p["count"] = pack.count;
    p["mcdiarmid_pairs"] = pack.mcdiarmid_pairs;
    p["corrupt_member"] = pack.corrupt_member;
    return p;
  };
  switch (cfg.kind) {
    case ExperimentKind::figure1a:
    case ExperimentKind::figure1b:
      j["p"] = cfg.figure.p_list;
      j["s"] = cfg.figure.s_list;
      j["N"] = cfg.figure.n_grid;
      j["trials"] = cfg.figure.trials;
      j["sigma"] = cfg.figure.sigma;
      j["r"] = cfg.figure.r;
      break;
    case ExperimentKind::bounds:
      j["m_dims"] = cfg.bounds.m_dims;
      j["p_dims"] = cfg.bounds.p_dims;
      j["s"] = cfg.bounds.s;
      j["N"] = cfg.bounds.n_grid;
      j["sigma"] = cfg.bounds.sigma;
      j["sigma_a"] = cfg.bounds.sigma_a;
      j["r"] = cfg.bounds.r;
      j["t"] = cfg.bounds.t;
      j["c1"] = cfg.bounds.c1;
      break;
    case ExperimentKind::packing:
      j["packing"] = packing_json(cfg.packing);
      break;
    case ExperimentKind::detector:
      j["packing"] = packing_json(cfg.detector.packing);
      j["s"] = cfg.detector.s;
      j["n"] = cfg.detector.n;
      j["trials"] = cfg.detector.trials;
      j["sigma_grid"] = cfg.detector.sigma_grid;
      break;
  }
  return j;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t config_hash(const RunConfig& cfg) {
  return fnv1a64(semantic_json(cfg).dump());
}

// Preset -> optional JSON file -> optional CLI overrides, then validation.
inline RunConfig load_config(ExperimentKind kind, bool full,
                             const std::string& config_path,
                             const std::uint64_t* seed_override,
                             const std::string& out_override) {
  RunConfig cfg = preset(kind, full);
  if (!config_path.empty()) {
    std::ifstream f(config_path);
    if (!f) throw config_error("cannot open config file " + config_path);
    nlohmann::json j;
    try {
      f >> j;
    } catch (const nlohmann::json::exception& e) {
      throw config_error("config parse error: " + std::string(e.what()));
    }
    overlay_json(cfg, j);
  }
  if (seed_override != nullptr) cfg.seed = *seed_override;
  if (!out_override.empty()) cfg.out = out_override;
  validate(cfg);
  return cfg;
}

}  // namespace kronlearn
