#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

#include "cookiewalk/config_io.hpp"
#include "cookiewalk/exact_oracle.hpp"

// Config and artifact plumbing: the hash uses the standard 64-bit FNV-1a
// test vectors, doubles serialize via shortest round-trip formatting, and
// the shipped config files are parsed and tied to the frozen exact values
// they describe.

using namespace cookiewalk;

#ifndef COOKIEWALK_CONFIG_DIR
#define COOKIEWALK_CONFIG_DIR "configs"
#endif

namespace {

std::string config_path(const std::string& name) {
  return std::string(COOKIEWALK_CONFIG_DIR) + "/" + name;
}

}  // namespace

TEST_CASE("fnv1a64: standard test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("hex64: fixed-width lowercase") {
  CHECK(hex64(0xcbf29ce484222325ULL) == "cbf29ce484222325");
  CHECK(hex64(0) == "0000000000000000");
  CHECK(hex64(0xfULL) == "000000000000000f");
}

TEST_CASE("format_double: shortest round-trip forms") {
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-2.25) == "-2.25");
  CHECK(format_double(0.0) == "0");
}

TEST_CASE("csv_quote: RFC-4180 style quoting") {
  CHECK(csv_quote("plain") == "plain");
  CHECK(csv_quote("a,b") == "\"a,b\"");
  CHECK(csv_quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_quote("two\nlines") == "\"two\nlines\"");
  CHECK(csv_quote("") == "");
}

TEST_CASE("distribution JSON round-trip") {
  const auto d = JumpDistribution::make({{-2, 0.125}, {1, 0.5}, {3, 0.375}});
  CHECK(distribution_from_json(distribution_to_json(d), "rt") == d);
}

TEST_CASE("distribution JSON: malformed input names the offending path") {
  try {
    distribution_from_json(nlohmann::json::parse("[[1]]"), "env.background");
    FAIL("expected a parse failure");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("env.background") != std::string::npos);
  }
  CHECK_THROWS_AS(distribution_from_json(nlohmann::json::parse("{}"), "x"),
                  std::invalid_argument);
}

TEST_CASE("parse_config: inline theta-family config") {
  const std::string text = R"({
    "name": "inline",
    "seed": 9,
    "environment": {
      "M": 1,
      "background": [[-1, 0.5], [1, 0.5]],
      "generator": {"type": "theta_family", "theta": 0.75}
    }
  })";
  const ExperimentConfig cfg = parse_config(text, "inline.json");
  CHECK(cfg.name == "inline");
  CHECK(cfg.seed == 9);
  CHECK(cfg.classify.seed == 9);
  REQUIRE(cfg.law.has_value());
  CHECK(cfg.law->delta() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(cfg.config_hash == fnv1a64(text));
  CHECK(cfg.has_environment());
}

TEST_CASE("parse_config: environment-level seed overrides the top level") {
  const std::string text = R"({
    "seed": 1,
    "environment": {
      "seed": 123,
      "M": 1,
      "background": [[-1, 0.5], [1, 0.5]],
      "generator": {"type": "theta_family", "theta": 0.5}
    }
  })";
  const ExperimentConfig cfg = parse_config(text, "o");
  CHECK(cfg.seed == 123);
  CHECK(cfg.classify.seed == 123);
}

TEST_CASE("parse_config: missing fields name their path") {
  const std::string text = R"({
    "environment": {
      "background": [[-1, 0.5], [1, 0.5]],
      "generator": {"type": "theta_family", "theta": 0.5}
    }
  })";
  try {
    parse_config(text, "cfg");
    FAIL("expected a parse failure");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("environment") != std::string::npos);
    CHECK(msg.find("'M'") != std::string::npos);
  }
}

TEST_CASE("parse_config: broken JSON reports the position") {
  CHECK_THROWS_AS(parse_config("{oops", "bad.json"), std::invalid_argument);
}

TEST_CASE("parse_config: truncation metadata and its bias bound") {
  const std::string text = R"({
    "environment": {
      "M": 2,
      "background": [[-1, 0.5], [1, 0.5]],
      "generator": {
        "type": "deterministic",
        "stacks": [[[[1, 1.0]], [[-1, 0.5], [2, 0.5]]]]
      },
      "truncation": {"point": 6, "discarded_mass": 1e-9,
                     "max_offset_bound": 50}
    }
  })";
  const ExperimentConfig cfg = parse_config(text, "t");
  REQUIRE(cfg.truncation.has_value());
  CHECK(cfg.truncation->point == 6);
  CHECK(cfg.truncation->delta_bias_bound(cfg.law->M()) ==
        doctest::Approx(1e-7).epsilon(1e-12));

  const std::string bad = R"({
    "environment": {
      "M": 1,
      "background": [[-1, 0.5], [1, 0.5]],
      "generator": {"type": "deterministic", "stacks": [[[[1, 1.0]]]]},
      "truncation": {"point": -1}
    }
  })";
  CHECK_THROWS_AS(parse_config(bad, "t"), std::invalid_argument);
}

TEST_CASE("parse_config: stack depth must match M") {
  const std::string text = R"({
    "environment": {
      "M": 2,
      "background": [[-1, 0.5], [1, 0.5]],
      "generator": {"type": "deterministic", "stacks": [[[[1, 1.0]]]]}
    }
  })";
  CHECK_THROWS_AS(parse_config(text, "d"), std::invalid_argument);
}

TEST_CASE("shipped config: theta_family_075") {
  const ExperimentConfig cfg = load_config(config_path("theta_family_075.json"));
  CHECK(cfg.seed == 20260814);
  REQUIRE(cfg.law.has_value());
  CHECK(cfg.law->delta() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(cfg.classify.horizons == std::vector<int64_t>{1'000, 10'000, 100'000});
  CHECK(cfg.classify.replicas == 10'000);
  CHECK(cfg.simulate_horizon == 1'000);
  CHECK(cfg.simulate_replicas == 2'000);
  CHECK(cfg.cep_frontier == 10'000);
  CHECK(cfg.cep_lag == 20);
  CHECK(cfg.cep_replicas == 400);
  CHECK(cfg.config_hash == fnv1a64(cfg.source_text));

  const nlohmann::json stamp = artifact_stamp(cfg);
  CHECK(stamp["tool_version"] == kToolVersion);
  CHECK(stamp["config_hash"] == hex64(cfg.config_hash));
  CHECK(stamp["seed"] == 20260814);
}

TEST_CASE("shipped config: oracle_small ties to the frozen exact values") {
  const ExperimentConfig cfg = load_config(config_path("oracle_small.json"));
  REQUIRE(cfg.instance.has_value());
  CHECK(cfg.instance->lo == -2);
  CHECK(cfg.instance->hi == 2);
  CHECK(cfg.instance->start == 0);
  CHECK(cfg.instance->M == 1);
  const ExitAnalysis res = solve_exit(*cfg.instance);
  CHECK(std::abs(res.p_up - 11.0 / 16.0) <= 1e-12);
  CHECK(std::abs(res.expected_consumed_drift - 7.0 / 8.0) <= 1e-12);
  CHECK(std::abs(res.expected_exit_time - 9.0 / 4.0) <= 1e-12);
}

TEST_CASE("shipped config: invalid_span2 parses but fails validation") {
  const ExperimentConfig cfg = load_config(config_path("invalid_span2.json"));
  REQUIRE(cfg.law.has_value());
  const AssumptionReport rep = cfg.law->validate();
  CHECK_FALSE(rep.all_pass());
  CHECK_FALSE(rep.background_ok);
}

TEST_CASE("shipped config: theta_sweep grid and family") {
  const ExperimentConfig cfg = load_config(config_path("theta_sweep.json"));
  REQUIRE(cfg.sweep.has_value());
  CHECK(cfg.sweep->parameter == "theta");
  CHECK(cfg.sweep->grid == std::vector<double>{0.2, 0.3, 0.5, 0.75, 0.9});
  const auto family = cfg.sweep_family();
  REQUIRE(family.size() == 5);
  for (const auto& [theta, law] : family)
    CHECK(law.delta() == doctest::Approx(4.0 * theta - 1.0).epsilon(1e-12));
}

TEST_CASE("shipped config: diagonal environment realizes") {
  const ExperimentConfig cfg =
      load_config(config_path("diagonal_escape_1000.json"));
  CHECK(cfg.diagonal_depth == 1'000);
  CHECK(cfg.has_environment());
  RealizedEnvironment env = cfg.realize_environment();
  CHECK(std::abs(diagonal_escape_reference(env, 1'000) - 1000.0 / 7992.0) <=
        1e-12);
}

TEST_CASE("realize_environment without an environment block throws") {
  const ExperimentConfig cfg = parse_config("{}", "empty");
  CHECK_FALSE(cfg.has_environment());
  CHECK_THROWS_AS(cfg.realize_environment(), std::invalid_argument);
}

TEST_CASE("sweep_family without a sweep block throws") {
  const ExperimentConfig cfg = parse_config("{}", "empty");
  CHECK_THROWS_AS(cfg.sweep_family(), std::invalid_argument);
}

TEST_CASE("CsvWriter: stamped comment line and quoted rows") {
  const std::string text = R"({"name": "w", "seed": 5})";
  const ExperimentConfig cfg = parse_config(text, "w");
  std::ostringstream os;
  CsvWriter writer(os, cfg);
  writer.row({"alpha", "with,comma", "1.5"});
  const std::string out = os.str();
  const std::string expected_header = std::string("# cookiewalk ") +
                                      kToolVersion +
                                      " config=" + hex64(fnv1a64(text)) +
                                      " seed=5\n";
  CHECK(out.substr(0, expected_header.size()) == expected_header);
  CHECK(out.find("alpha,\"with,comma\",1.5\n") != std::string::npos);
}

TEST_CASE("fnv1a64 test vector sanity against a second source") {
  // 64-bit FNV-1a of "hello" (independent published vector).
  CHECK(fnv1a64("hello") == 0xa430d84680aabd0bULL);
}
