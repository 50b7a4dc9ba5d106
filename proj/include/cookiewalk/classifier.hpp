#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cookiewalk/cookie_env.hpp"

// Statistical recurrence/transience diagnostics. The verdict is a
// diagnostic at finite horizon, never a proof: the exact drift parameter
// and its theoretical prediction (recurrent iff delta <= 1) are always
// reported next to the empirical call, and near-critical laws are flagged
// rather than force-classified.

namespace cookiewalk {

enum class Verdict { Recurrent, TransientRight, Undecided };

std::string verdict_name(Verdict v);
// Adds a "[boundary]" suffix when the law sits near the critical drift.
std::string verdict_label(Verdict v, bool boundary_flag);

struct EscapePoint {
  int64_t horizon = 0;
  double beta_hat = 0.0;  // fraction never strictly below start by horizon
  double ci_lo = 0.0;     // Wilson interval
  double ci_hi = 0.0;
};

struct ClassifyConfig {
  std::vector<int64_t> horizons = {1'000, 10'000, 100'000};  // increasing
  int64_t replicas = 10'000;
  uint64_t seed = 1;
  int threads = 1;
  double wilson_z = 4.0;
  // Recurrent: return fraction at the top horizon >= this and the escape
  // estimate's upper CI below recurrent_beta_ci_max.
  double recurrent_return_threshold = 0.999;
  double recurrent_beta_ci_max = 0.01;
  // TransientRight: escape lower CI > 0 at the top two horizons and a
  // relative drop between them of at most this.
  double stability_rel_drop = 0.02;
  // |delta - 1| <= band flags the verdict as a boundary case.
  double boundary_band = 0.05;
};

struct ClassificationResult {
  Verdict verdict = Verdict::Undecided;
  bool boundary_flag = false;
  double delta = 0.0;
  Verdict theorem_prediction = Verdict::Undecided;  // from delta alone
  std::vector<EscapePoint> escape;                  // one per horizon
  std::vector<std::pair<int64_t, double>> return_fraction;
  // Distribution over replicas of how many fresh-maximum attempts failed
  // (walk later dropped below the maximum the attempt started from).
  std::map<int64_t, int64_t> ladder_histogram;
  // Replicas whose return status is still open at the top horizon.
  int64_t censored = 0;
  int64_t replicas = 0;
};

// Escape-probability estimates over a doubling sequence of horizons
// ending at `horizon` (event nesting makes the sequence non-increasing;
// the decrease across horizons exposes the finite-horizon bias).
std::vector<EscapePoint> estimate_escape_probability(
    const EnvironmentLaw& law, int64_t horizon, int64_t replicas,
    uint64_t seed, int threads = 1, int doubling_levels = 3,
    double wilson_z = 4.0);

// The decision rule applied to the escape curve: TransientRight when the
// escape lower CI is positive at the top two horizons and stable between
// them, Recurrent when the top return fraction and escape upper CI clear
// the configured thresholds, Undecided otherwise.
Verdict decide_verdict(const std::vector<EscapePoint>& escape,
                       double return_top, const ClassifyConfig& cfg);

ClassificationResult classify(const EnvironmentLaw& law,
                              const ClassifyConfig& cfg);

struct SweepRow {
  double parameter = 0.0;
  double delta = 0.0;
  bool skipped = false;
  std::string skip_reason;
  ClassificationResult result;
};

// Runs classify across a (parameter, law) family; points failing the
// assumption checks are recorded as skipped with the reason.
std::vector<SweepRow> delta_sweep(
    const std::vector<std::pair<double, EnvironmentLaw>>& family,
    const ClassifyConfig& cfg);

}  // namespace cookiewalk
