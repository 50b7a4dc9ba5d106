#include "cookiewalk/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cookiewalk/parallel.hpp"
#include "cookiewalk/stats.hpp"
#include "cookiewalk/walk_engine.hpp"

namespace cookiewalk {

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Recurrent:
      return "Recurrent";
    case Verdict::TransientRight:
      return "TransientRight";
    case Verdict::Undecided:
      return "Undecided";
  }
  return "Undecided";
}

std::string verdict_label(Verdict v, bool boundary_flag) {
  return boundary_flag ? verdict_name(v) + "[boundary]" : verdict_name(v);
}

namespace {

struct PathSummary {
  int64_t t_return = -1;    // first step strictly below start; -1 = none
  int32_t ladder_fails = 0; // failed fresh-maximum attempts
};

// Runs one replica to `horizon`, tracking the first passage strictly
// below the start and the fresh-maximum ladder: an attempt starts at each
// maximum first reached after a failure and fails when the walk later
// drops below that attempt's base level. Environment and walk are reused
// across replicas (reset, not reallocated) so the arenas stay warm.
PathSummary run_path(RealizedEnvironment& env, WalkState& walk,
                     int64_t horizon, uint64_t seed, int64_t replica) {
  env.reset_run(mix_seed(seed, (static_cast<uint64_t>(replica) << 1) | 0));
  walk.reset(0, mix_seed(seed, (static_cast<uint64_t>(replica) << 1) | 1));

  PathSummary out;
  int64_t ref = 0;         // base level of the current ladder attempt
  int64_t max_level = 0;   // running maximum
  bool waiting = false;    // attempt failed; waiting for a fresh maximum
  for (int64_t n = 1; n <= horizon; ++n) {
    walk.step(env);
    const int64_t pos = walk.position();
    if (pos > max_level) {
      max_level = pos;
      if (waiting) {
        ref = pos;
        waiting = false;
      }
    }
    if (!waiting && pos < ref) {
      ++out.ladder_fails;
      waiting = true;
    }
    if (out.t_return < 0 && pos < 0) out.t_return = n;
  }
  return out;
}

std::vector<PathSummary> run_paths(const EnvironmentLaw& law, int64_t horizon,
                                   int64_t replicas, uint64_t seed,
                                   int threads) {
  std::vector<PathSummary> paths(static_cast<size_t>(replicas));
  parallel_chunks(replicas, threads, [&](int64_t begin, int64_t end) {
    RealizedEnvironment env(law, 0);
    WalkState walk(0, 0);
    const int64_t jump = env.max_jump_bound();
    const int64_t arena_hi =
        std::min<int64_t>(horizon * jump + 8, 1 << 21);
    env.set_arena(-4096, arena_hi);
    walk.set_arena(-4096, arena_hi);
    for (int64_t i = begin; i < end; ++i)
      paths[static_cast<size_t>(i)] = run_path(env, walk, horizon, seed, i);
  });
  return paths;
}

EscapePoint escape_point(const std::vector<PathSummary>& paths,
                         int64_t horizon, double wilson_z) {
  int64_t stayed = 0;
  for (const PathSummary& p : paths)
    if (p.t_return < 0 || p.t_return > horizon) ++stayed;
  const int64_t n = static_cast<int64_t>(paths.size());
  const Interval ci = wilson_interval(stayed, n, wilson_z);
  return {horizon, static_cast<double>(stayed) / static_cast<double>(n),
          ci.lo, ci.hi};
}

}  // namespace

std::vector<EscapePoint> estimate_escape_probability(
    const EnvironmentLaw& law, int64_t horizon, int64_t replicas,
    uint64_t seed, int threads, int doubling_levels, double wilson_z) {
  if (horizon < 1 || replicas < 1)
    throw std::invalid_argument("horizon and replicas must be positive");
  const std::vector<PathSummary> paths =
      run_paths(law, horizon, replicas, seed, threads);
  std::vector<int64_t> horizons;
  for (int i = doubling_levels - 1; i >= 1; --i)
    horizons.push_back(std::max<int64_t>(1, horizon >> i));
  horizons.push_back(horizon);
  std::vector<EscapePoint> points;
  for (int64_t h : horizons) points.push_back(escape_point(paths, h, wilson_z));
  return points;
}

Verdict decide_verdict(const std::vector<EscapePoint>& escape,
                       double return_top, const ClassifyConfig& cfg) {
  if (escape.empty()) throw std::invalid_argument("empty escape curve");
  const EscapePoint& last = escape.back();
  const EscapePoint& prev =
      escape.size() >= 2 ? escape[escape.size() - 2] : last;
  const bool stable =
      prev.beta_hat > 0.0 &&
      (prev.beta_hat - last.beta_hat) <= cfg.stability_rel_drop * prev.beta_hat;
  if (last.ci_lo > 0.0 && prev.ci_lo > 0.0 && stable)
    return Verdict::TransientRight;
  if (return_top >= cfg.recurrent_return_threshold &&
      last.ci_hi < cfg.recurrent_beta_ci_max)
    return Verdict::Recurrent;
  return Verdict::Undecided;
}

ClassificationResult classify(const EnvironmentLaw& law,
                              const ClassifyConfig& cfg) {
  if (cfg.horizons.empty()) throw std::invalid_argument("no horizons given");
  if (!std::is_sorted(cfg.horizons.begin(), cfg.horizons.end()) ||
      std::adjacent_find(cfg.horizons.begin(), cfg.horizons.end()) !=
          cfg.horizons.end())
    throw std::invalid_argument("horizons must be strictly increasing");

  const int64_t top = cfg.horizons.back();
  const std::vector<PathSummary> paths =
      run_paths(law, top, cfg.replicas, cfg.seed, cfg.threads);

  ClassificationResult res;
  res.replicas = cfg.replicas;
  res.delta = law.delta();
  res.theorem_prediction =
      res.delta <= 1.0 ? Verdict::Recurrent : Verdict::TransientRight;
  res.boundary_flag = std::abs(res.delta - 1.0) <= cfg.boundary_band;

  for (int64_t h : cfg.horizons) {
    res.escape.push_back(escape_point(paths, h, cfg.wilson_z));
    res.return_fraction.emplace_back(h, 1.0 - res.escape.back().beta_hat);
  }
  for (const PathSummary& p : paths) {
    ++res.ladder_histogram[p.ladder_fails];
    if (p.t_return < 0) ++res.censored;
  }

  res.verdict =
      decide_verdict(res.escape, res.return_fraction.back().second, cfg);
  return res;
}

std::vector<SweepRow> delta_sweep(
    const std::vector<std::pair<double, EnvironmentLaw>>& family,
    const ClassifyConfig& cfg) {
  std::vector<SweepRow> rows;
  rows.reserve(family.size());
  for (const auto& [parameter, law] : family) {
    SweepRow row;
    row.parameter = parameter;
    row.delta = law.delta();
    const AssumptionReport report = law.validate();
    if (!report.all_pass()) {
      row.skipped = true;
      row.skip_reason = report.failures.empty()
                            ? "assumption check failed"
                            : report.failures.front();
    } else {
      row.result = classify(law, cfg);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace cookiewalk
