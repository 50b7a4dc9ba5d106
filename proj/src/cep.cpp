#include "cookiewalk/cep.hpp"

#include <algorithm>
#include <stdexcept>

#include "cookiewalk/parallel.hpp"

namespace cookiewalk {

namespace {

int64_t default_budget(int64_t frontier_n) {
  // Generous for laws whose frontier advances at a linear rate; slower
  // laws show up honestly in the censoring counts.
  return std::max<int64_t>(1'000'000, 200 * frontier_n);
}

}  // namespace

std::optional<CepState> advance_frontier(WalkState& walk,
                                         RealizedEnvironment& env,
                                         int64_t level, int64_t max_steps,
                                         const CepConfig& cfg) {
  if (walk.max_seen() < level) {
    const RunOutcome out = run_until(
        walk, env,
        [level](const WalkState& w) { return w.max_seen() >= level; },
        max_steps);
    if (!out.decided()) return std::nullopt;
  }
  CepState state;
  state.level = level;
  // max_seen was set by the jump that first reached `level`, so the
  // position at that passage time is max_seen even if several levels were
  // crossed at once.
  state.overshoot = walk.max_seen() - level;
  const int64_t wl =
      cfg.window_left >= 0 ? cfg.window_left : 2 * env.max_jump_bound();
  for (int64_t off = -wl; off <= cfg.window_right; ++off)
    state.consumed_window.emplace_back(off, env.consumed(level + off));
  return state;
}

namespace {

struct ReplicaOutcome {
  bool censored = true;
  double lag_mean = 0.0;
  bool has_lag = false;
  double right_rate = 0.0;
  std::map<int64_t, int64_t> overshoot_histogram;
  int64_t observations = 0;
};

// Runs one replica to frontier_n, reading the lagged site drift at each
// level and optionally streaming per-level samples. Environment and walk
// are reused across replicas (reset, not reallocated) so the arenas stay
// warm.
ReplicaOutcome run_replica(RealizedEnvironment& env, WalkState& walk,
                           int64_t frontier_n, int64_t lag_k, uint64_t seed,
                           int64_t replica, int64_t max_steps,
                           std::vector<FrontierSample>* rows) {
  env.reset_run(mix_seed(seed, (static_cast<uint64_t>(replica) << 1) | 0));
  walk.reset(0, mix_seed(seed, (static_cast<uint64_t>(replica) << 1) | 1));

  ReplicaOutcome out;
  OnlineStats lag_stats;
  int64_t budget = max_steps;
  const int64_t lag_from = frontier_n / 2 + lag_k;  // levels usable for lag
  for (int64_t level = 1; level <= frontier_n; ++level) {
    const int64_t before = walk.steps();
    const std::optional<CepState> state =
        advance_frontier(walk, env, level, budget);
    if (!state.has_value()) return out;  // censored at this level
    budget -= walk.steps() - before;
    ++out.overshoot_histogram[state->overshoot];
    ++out.observations;
    FrontierSample sample;
    sample.replica = replica;
    sample.level = level;
    sample.overshoot = state->overshoot;
    sample.drift_right = walk.consumed_drift_right();
    if (level >= lag_from && level - lag_k >= 0) {
      sample.lagged_site_drift = walk.site_drift(level - lag_k);
      sample.has_lag = true;
      lag_stats.add(sample.lagged_site_drift);
    }
    if (rows) rows->push_back(sample);
  }
  out.censored = false;
  out.has_lag = lag_stats.count > 0;
  out.lag_mean = lag_stats.mean;
  out.right_rate =
      walk.consumed_drift_right() / static_cast<double>(frontier_n);
  return out;
}

CepStatistics collect_impl(const EnvironmentLaw& law, int64_t frontier_n,
                           int64_t lag_k, int64_t replicas, uint64_t seed,
                           int64_t max_steps, int threads,
                           const std::function<void(const FrontierSample&)>*
                               sink) {
  if (frontier_n < 1) throw std::invalid_argument("frontier_n must be >= 1");
  if (lag_k < 0 || lag_k >= frontier_n)
    throw std::invalid_argument("lag must lie in [0, frontier_n)");
  const int64_t budget = max_steps > 0 ? max_steps : default_budget(frontier_n);

  std::vector<ReplicaOutcome> outcomes(static_cast<size_t>(replicas));
  std::vector<std::vector<FrontierSample>> rows(
      sink ? static_cast<size_t>(replicas) : 0);
  parallel_chunks(replicas, threads, [&](int64_t begin, int64_t end) {
    RealizedEnvironment env(law, 0);
    WalkState walk(0, 0);
    const int64_t jump = env.max_jump_bound();
    env.set_arena(-1024, frontier_n + 4 * jump + 16);
    walk.set_arena(-1024, frontier_n + 4 * jump + 16);
    for (int64_t i = begin; i < end; ++i)
      outcomes[static_cast<size_t>(i)] =
          run_replica(env, walk, frontier_n, lag_k, seed, i, budget,
                      sink ? &rows[static_cast<size_t>(i)] : nullptr);
  });

  CepStatistics stats;
  for (int64_t i = 0; i < replicas; ++i) {
    const ReplicaOutcome& out = outcomes[static_cast<size_t>(i)];
    if (sink)
      for (const FrontierSample& s : rows[static_cast<size_t>(i)]) (*sink)(s);
    for (const auto& [o, cnt] : out.overshoot_histogram)
      stats.overshoot_histogram[o] += cnt;
    stats.frontier_observations += out.observations;
    if (out.censored) {
      ++stats.censored_replicas;
      continue;
    }
    if (out.has_lag) stats.drift_at_origin.add(out.lag_mean);
    stats.right_rate.add(out.right_rate);
  }
  return stats;
}

bool flag_censoring(int64_t censored, int64_t replicas) {
  return censored * 100 > replicas;  // more than 1% censored
}

}  // namespace

DriftAtOriginEstimate estimate_consumed_drift_at_origin(
    const EnvironmentLaw& law, int64_t frontier_n, int64_t lag_k,
    int64_t replicas, uint64_t seed, int64_t max_steps, int threads) {
  if (lag_k < 1) throw std::invalid_argument("lag must be >= 1");
  const CepStatistics stats = collect_cep(law, frontier_n, lag_k, replicas,
                                          seed, max_steps, threads, nullptr);
  DriftAtOriginEstimate est;
  est.mean = stats.drift_at_origin.mean;
  est.se = stats.drift_at_origin.standard_error();
  est.replicas_used = stats.drift_at_origin.count;
  est.censored = stats.censored_replicas;
  est.censoring_flagged = flag_censoring(est.censored, replicas);
  return est;
}

RateEstimate right_drift_rate(const EnvironmentLaw& law, int64_t n,
                              int64_t replicas, uint64_t seed,
                              int64_t max_steps, int threads) {
  const CepStatistics stats =
      collect_cep(law, n, 0, replicas, seed, max_steps, threads, nullptr);
  RateEstimate est;
  est.mean = stats.right_rate.mean;
  est.se = stats.right_rate.standard_error();
  est.replicas_used = stats.right_rate.count;
  est.censored = stats.censored_replicas;
  est.censoring_flagged = flag_censoring(est.censored, replicas);
  return est;
}

CepStatistics collect_cep(const EnvironmentLaw& law, int64_t frontier_n,
                          int64_t lag_k, int64_t replicas, uint64_t seed,
                          int64_t max_steps, int threads,
                          const std::function<void(const FrontierSample&)>*
                              sink) {
  return collect_impl(law, frontier_n, lag_k, replicas, seed, max_steps,
                      threads, sink);
}

}  // namespace cookiewalk
