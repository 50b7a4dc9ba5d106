#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cookiewalk/classifier.hpp"
#include "cookiewalk/cookie_env.hpp"
#include "cookiewalk/exact_oracle.hpp"

// JSON experiment configs, artifact stamping, and CSV/JSON serialization.
// Every artifact embeds the tool version and a hash of the config text so
// results stay traceable to the exact inputs that produced them.

namespace cookiewalk {

inline constexpr const char* kToolVersion = "0.1.0";

// FNV-1a over the raw config bytes; stable across platforms.
uint64_t fnv1a64(std::string_view bytes);
std::string hex64(uint64_t v);

// Shortest round-trip decimal form; identical output on every thread
// count and platform with the same libc++ (needed for byte-identical
// artifacts).
std::string format_double(double v);

// Metadata for laws the user truncated to finite support before writing
// the config. `point` is the truncation radius; `discarded_mass` bounds
// the probability removed from any single per-visit law and
// `max_offset_bound` bounds |offset| over removed atoms. Both bounds
// default to zero (exact law). The induced bias on the total drift
// parameter is at most M * discarded_mass * max_offset_bound, reported in
// all outputs alongside the point.
struct TruncationInfo {
  int64_t point = 0;
  double discarded_mass = 0.0;
  double max_offset_bound = 0.0;

  double delta_bias_bound(int64_t M) const {
    return static_cast<double>(M) * discarded_mass * max_offset_bound;
  }
};

struct SweepSpec {
  std::string parameter = "theta";  // only theta_family is parameterized
  std::vector<double> grid;
};

// One parsed config file. Blocks are optional; each subcommand validates
// that the blocks it needs are present.
struct ExperimentConfig {
  std::string name;
  std::string source_text;  // raw file bytes
  uint64_t config_hash = 0;
  uint64_t seed = 1;

  // environment block
  std::optional<EnvironmentLaw> law;
  std::optional<TruncationInfo> truncation;
  int64_t diagonal_depth = 0;  // >0 selects the diagonal-escape environment

  // oracle block
  std::optional<OracleInstance> instance;

  // sweep block
  std::optional<SweepSpec> sweep;

  // classify / sweep statistics
  ClassifyConfig classify;

  // simulate block
  int64_t simulate_horizon = 1'000;
  int64_t simulate_replicas = 1'000;

  // cep block
  int64_t cep_frontier = 1'000;
  int64_t cep_lag = 20;
  int64_t cep_replicas = 200;
  int64_t cep_max_steps = 0;  // 0 = module default budget

  bool has_environment() const { return law.has_value() || diagonal_depth > 0; }

  // Realizes the environment block (law seeded with `seed`, or the
  // diagonal-escape construction). Throws if no environment block.
  RealizedEnvironment realize_environment() const;

  // Builds the (parameter, law) family for the sweep grid. Throws if no
  // sweep block or the parameter is not recognized.
  std::vector<std::pair<double, EnvironmentLaw>> sweep_family() const;
};

// Parse errors carry the config path and the offending field.
ExperimentConfig parse_config(const std::string& text,
                              const std::string& origin);
ExperimentConfig load_config(const std::string& path);

// Distribution <-> JSON array of [offset, prob] pairs.
JumpDistribution distribution_from_json(const nlohmann::json& pairs,
                                        const std::string& where);
nlohmann::json distribution_to_json(const JumpDistribution& d);

// {tool_version, config_hash, config_name, seed} for embedding in JSON
// artifacts.
nlohmann::json artifact_stamp(const ExperimentConfig& cfg);

// Result serialization shared by the CLI and the python bindings.
nlohmann::json assumption_report_to_json(const AssumptionReport& rep);
nlohmann::json exit_analysis_to_json(const ExitAnalysis& res);
nlohmann::json classification_to_json(const ClassificationResult& res);

// CSV with RFC-4180-style quoting and a leading `#` comment line carrying
// the artifact stamp.
class CsvWriter {
 public:
  CsvWriter(std::ostream& os, const ExperimentConfig& cfg);
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& os_;
};

std::string csv_quote(const std::string& field);

}  // namespace cookiewalk
