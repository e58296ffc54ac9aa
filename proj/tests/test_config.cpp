// Tests for experiment configuration: presets, JSON overlays with strict key
// allowlists, validation, and the semantic config hash.

#include <catch2/catch_amalgamated.hpp>

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "kronlearn/common.hpp"
#include "kronlearn/config.hpp"

using namespace kronlearn;
using nlohmann::json;

TEST_CASE("experiment names round-trip") {
  for (ExperimentKind k :
       {ExperimentKind::figure1a, ExperimentKind::figure1b,
        ExperimentKind::bounds, ExperimentKind::packing,
        ExperimentKind::detector})
    CHECK(parse_kind(kind_name(k)) == k);
  REQUIRE_THROWS_AS(parse_kind("figure1c"), config_error);
}

TEST_CASE("balanced factor pairs split as evenly as possible") {
  CHECK(balanced_factor_pair(16) == std::pair<std::size_t, std::size_t>{4, 4});
  CHECK(balanced_factor_pair(64) == std::pair<std::size_t, std::size_t>{8, 8});
  CHECK(balanced_factor_pair(128) ==
        std::pair<std::size_t, std::size_t>{16, 8});
  CHECK(balanced_factor_pair(12) == std::pair<std::size_t, std::size_t>{4, 3});
  CHECK(balanced_factor_pair(7) == std::pair<std::size_t, std::size_t>{7, 1});
  CHECK(balanced_factor_pair(1) == std::pair<std::size_t, std::size_t>{1, 1});
  REQUIRE_THROWS_AS(balanced_factor_pair(0), config_error);
}

TEST_CASE("presets validate and differ between desk and full scale") {
  for (ExperimentKind k :
       {ExperimentKind::figure1a, ExperimentKind::figure1b,
        ExperimentKind::bounds, ExperimentKind::packing,
        ExperimentKind::detector}) {
    const RunConfig desk = preset(k, false);
    const RunConfig full = preset(k, true);
    REQUIRE_NOTHROW(validate(desk));
    REQUIRE_NOTHROW(validate(full));
    CHECK(desk.seed == 20240816);
    CHECK(desk.out == kind_name(k) + ".csv");
    CHECK(config_hash(desk) != config_hash(full));
  }
  const RunConfig fig = preset(ExperimentKind::figure1a, false);
  CHECK(fig.figure.p_list == std::vector<std::size_t>{16, 64});
  CHECK(fig.figure.trials == 25);
  const RunConfig det = preset(ExperimentKind::detector, false);
  CHECK(det.detector.trials == 200);
  CHECK(det.detector.sigma_grid == std::vector<double>{0.01, 10.0});
}

TEST_CASE("json overlay replaces only the provided fields") {
  RunConfig cfg = preset(ExperimentKind::figure1a, false);
  overlay_json(cfg, json{{"trials", 7}, {"sigma", 0.25}});
  CHECK(cfg.figure.trials == 7);
  CHECK(cfg.figure.sigma == 0.25);
  CHECK(cfg.figure.p_list == std::vector<std::size_t>{16, 64});  // untouched

  RunConfig b = preset(ExperimentKind::bounds, false);
  overlay_json(b, json{{"N", {100, 200}}, {"c1", 0.01}});
  CHECK(b.bounds.n_grid == std::vector<std::size_t>{100, 200});
  CHECK(b.bounds.c1 == 0.01);

  RunConfig d = preset(ExperimentKind::detector, false);
  overlay_json(d, json{{"sigma_grid", {0.5}}, {"count", 4}});
  CHECK(d.detector.sigma_grid == std::vector<double>{0.5});
  CHECK(d.detector.packing.count == 4);
}

TEST_CASE("common keys overlay seed and output path for every experiment") {
  RunConfig cfg = preset(ExperimentKind::packing, false);
  overlay_json(cfg, json{{"seed", 99}, {"out", "custom.csv"}});
  CHECK(cfg.seed == 99);
  CHECK(cfg.out == "custom.csv");
}

TEST_CASE("unknown or ill-typed config keys are rejected") {
  RunConfig cfg = preset(ExperimentKind::figure1a, false);
  REQUIRE_THROWS_AS(overlay_json(cfg, json{{"bogus", 1}}), config_error);
  // A packing-only key must not leak into the figure allowlist.
  REQUIRE_THROWS_AS(overlay_json(cfg, json{{"eps_fraction", 0.5}}),
                    config_error);
  REQUIRE_THROWS_AS(overlay_json(cfg, json{{"trials", "many"}}),
                    config_error);
  REQUIRE_THROWS_AS(overlay_json(cfg, json{{"trials", -3}}), config_error);
  REQUIRE_THROWS_AS(overlay_json(cfg, json{{"sigma", "loud"}}), config_error);
  REQUIRE_THROWS_AS(overlay_json(cfg, json{{"p", {16, -1}}}), config_error);
  REQUIRE_THROWS_AS(overlay_json(cfg, json{{"out", 5}}), config_error);
  REQUIRE_THROWS_AS(overlay_json(cfg, json::array({1, 2})), config_error);

  RunConfig pack = preset(ExperimentKind::packing, false);
  REQUIRE_THROWS_AS(overlay_json(pack, json{{"corrupt_member", "yes"}}),
                    config_error);
}

TEST_CASE("validation rejects inconsistent experiment parameters") {
  RunConfig fig = preset(ExperimentKind::figure1a, false);
  fig.figure.s_list = {2};  // misaligned with p_list
  REQUIRE_THROWS_AS(validate(fig), config_error);

  fig = preset(ExperimentKind::figure1a, false);
  fig.figure.n_grid = {4, 500};  // 4 < max{p1, p2} = 8 for p = 64
  REQUIRE_THROWS_AS(validate(fig), config_error);

  fig = preset(ExperimentKind::figure1a, false);
  fig.figure.p_list = {7, 16};  // 7 is prime: no nontrivial factor pair
  fig.figure.s_list = {2, 2};
  REQUIRE_THROWS_AS(validate(fig), config_error);

  RunConfig b = preset(ExperimentKind::bounds, false);
  b.bounds.s = 0;
  REQUIRE_THROWS_AS(validate(b), config_error);
  b = preset(ExperimentKind::bounds, false);
  b.bounds.m_dims = {16};  // no longer aligned with p_dims
  REQUIRE_THROWS_AS(validate(b), config_error);

  RunConfig pack = preset(ExperimentKind::packing, false);
  pack.packing.t = 1.5;
  REQUIRE_THROWS_AS(validate(pack), config_error);
  pack = preset(ExperimentKind::packing, false);
  pack.packing.c1 = 1.0;  // above t^2 / (8 ln 2)
  REQUIRE_THROWS_AS(validate(pack), config_error);
  pack = preset(ExperimentKind::packing, false);
  pack.packing.dims = {4, 1};
  REQUIRE_THROWS_AS(validate(pack), config_error);

  RunConfig det = preset(ExperimentKind::detector, false);
  det.detector.packing.dims = {4, 4, 4};  // estimator needs two modes
  REQUIRE_THROWS_AS(validate(det), config_error);
  det = preset(ExperimentKind::detector, false);
  det.detector.n = 2;
  REQUIRE_THROWS_AS(validate(det), config_error);
}

TEST_CASE("config hash is stable, seed-sensitive, and path-insensitive") {
  const RunConfig a = preset(ExperimentKind::bounds, false);
  RunConfig b = preset(ExperimentKind::bounds, false);
  CHECK(config_hash(a) == config_hash(b));

  b.out = "elsewhere.csv";  // output location must not perturb the hash
  CHECK(config_hash(a) == config_hash(b));

  b = preset(ExperimentKind::bounds, false);
  b.seed = 1;
  CHECK(config_hash(a) != config_hash(b));

  b = preset(ExperimentKind::bounds, false);
  b.bounds.sigma = 0.2;
  CHECK(config_hash(a) != config_hash(b));

  // Same parameters under a different experiment kind hash differently.
  CHECK(config_hash(preset(ExperimentKind::figure1a, false)) !=
        config_hash(preset(ExperimentKind::figure1b, false)));
}

TEST_CASE("fnv1a64 matches published reference digests") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}
