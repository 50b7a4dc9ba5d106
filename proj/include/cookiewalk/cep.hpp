#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "cookiewalk/cookie_env.hpp"
#include "cookiewalk/stats.hpp"
#include "cookiewalk/walk_engine.hpp"

// The environment-at-the-frontier process: the walk observed at the first
// passage times of each level n, recording the overshoot past the level
// and a bounded window of consumed-cookie counts around it. Long-run
// frontier averages approximate the stationary statistics of the process;
// censored (horizon-exhausted) advances are excluded and counted, never
// silently dropped.

namespace cookiewalk {

struct CepConfig {
  int64_t window_left = -1;   // consumed-count window; -1 = 2 * max jump
  int64_t window_right = 1;
};

struct CepState {
  int64_t level = 0;      // frontier level n, reached at its passage time
  int64_t overshoot = 0;  // walk position at that time minus n, >= 0
  // (site - level, consumed count) for the window around the level.
  std::vector<std::pair<int64_t, int64_t>> consumed_window;
};

// Ensures the walk has reached `level` (stepping it if needed, within
// max_steps) and reports the state observed at that level's passage time.
// The walk must be driven only through this function between calls so
// batched crossings (one jump passing several levels) stay consistent.
// nullopt = censored: the budget ran out before the level was reached.
std::optional<CepState> advance_frontier(WalkState& walk,
                                         RealizedEnvironment& env,
                                         int64_t level, int64_t max_steps,
                                         const CepConfig& cfg = {});

struct DriftAtOriginEstimate {
  double mean = 0.0;
  double se = 0.0;
  int64_t replicas_used = 0;
  int64_t censored = 0;
  bool censoring_flagged = false;  // more than 1% of replicas censored
};

// Path-wise estimate of the consumed drift a site retains once the
// frontier has moved lag_k levels past it: averages (over frontier sites
// m in [n/2, n - lag_k] and replicas) the drift consumed at m by the time
// level m + lag_k is first reached.
DriftAtOriginEstimate estimate_consumed_drift_at_origin(
    const EnvironmentLaw& law, int64_t frontier_n, int64_t lag_k,
    int64_t replicas, uint64_t seed, int64_t max_steps = -1, int threads = 1);

struct RateEstimate {
  double mean = 0.0;
  double se = 0.0;
  int64_t replicas_used = 0;
  int64_t censored = 0;
  bool censoring_flagged = false;
};

// Empirical mean of (drift consumed at sites >= 0 by the passage time of
// level n) / n.
RateEstimate right_drift_rate(const EnvironmentLaw& law, int64_t n,
                              int64_t replicas, uint64_t seed,
                              int64_t max_steps = -1, int threads = 1);

struct FrontierSample {
  int64_t replica = 0;
  int64_t level = 0;
  int64_t overshoot = 0;
  double drift_right = 0.0;        // drift consumed at sites >= 0 so far
  double lagged_site_drift = 0.0;  // drift at site level - lag when lagged
  bool has_lag = false;
};

struct CepStatistics {
  std::map<int64_t, int64_t> overshoot_histogram;
  OnlineStats drift_at_origin;  // per-replica lagged-drift averages
  OnlineStats right_rate;       // per-replica final drift_right / n
  int64_t frontier_observations = 0;
  int64_t censored_replicas = 0;
};

// One pass collecting every frontier statistic; the optional sink receives
// each per-level sample (for CSV export) in replica-major order.
CepStatistics collect_cep(const EnvironmentLaw& law, int64_t frontier_n,
                          int64_t lag_k, int64_t replicas, uint64_t seed,
                          int64_t max_steps = -1, int threads = 1,
                          const std::function<void(const FrontierSample&)>*
                              sink = nullptr);

}  // namespace cookiewalk
