#pragma once

#include <cstdint>
#include <vector>

#include "cookiewalk/cookie_env.hpp"
#include "cookiewalk/rng.hpp"
#include "cookiewalk/sites.hpp"

// Step-by-step simulation of the walk with local times and the consumed-
// drift ledger. Each step at site x on visit j consumes the law for
// (x, j), adds that law's mean to the ledger at x, and jumps by a sample
// from it, which keeps position-minus-ledger a martingale step by step.

namespace cookiewalk {

struct WalkSite {
  int64_t visits = 0;   // local time contribution of this site
  double drift = 0.0;   // consumed drift at this site
};

class WalkState {
 public:
  WalkState(int64_t start, uint64_t rng_seed);

  // Rewind to a fresh walk; keeps the arena allocation so replica loops
  // reuse the same storage.
  void reset(int64_t start, uint64_t rng_seed);

  // Dense fast path for the per-site ledger on a known hot range.
  void set_arena(int64_t lo, int64_t hi) { sites_.set_arena(lo, hi); }

  int64_t position() const { return pos_; }
  int64_t start() const { return start_; }
  int64_t steps() const { return steps_; }
  int64_t min_seen() const { return min_; }
  int64_t max_seen() const { return max_; }
  int64_t last_jump() const { return last_jump_; }

  int64_t local_time(int64_t x) const;   // visits to x so far (start counts)
  double site_drift(int64_t x) const;    // consumed drift at x
  double consumed_drift() const { return drift_; }
  double consumed_drift_right() const { return drift_right_; }  // sites >= 0
  double martingale() const { return static_cast<double>(pos_) - drift_; }

  const std::vector<int64_t>& touched_sites() const { return sites_.touched(); }

  Rng& rng() { return rng_; }

  void step(RealizedEnvironment& env);

 private:
  int64_t pos_, start_, steps_ = 0, min_, max_, last_jump_ = 0;
  double drift_ = 0.0, drift_right_ = 0.0;
  SiteTable<WalkSite> sites_;
  Rng rng_;
};

enum class StopReason { Predicate, MaxSteps };

struct RunOutcome {
  StopReason reason = StopReason::MaxSteps;
  int64_t steps_taken = 0;
  bool decided() const { return reason == StopReason::Predicate; }
};

// Steps until the predicate holds (it is evaluated after every step) or
// max_steps have been taken. State and ledger remain usable either way.
template <class Pred>
RunOutcome run_until(WalkState& walk, RealizedEnvironment& env, Pred&& stop,
                     int64_t max_steps) {
  for (int64_t k = 0; k < max_steps; ++k) {
    walk.step(env);
    if (stop(walk)) return {StopReason::Predicate, k + 1};
  }
  return {StopReason::MaxSteps, max_steps};
}

enum class ExitSide { Up, Down, Undecided };

struct PassageRecord {
  ExitSide side = ExitSide::Undecided;
  int64_t exit_position = 0;  // includes overshoot past the boundary
  int64_t exit_time = 0;
  double drift_at_exit = 0.0;
  double drift_right_at_exit = 0.0;
};

// First time the walk is >= up or <= down, starting from start.
// Requires down < start < up; Undecided when max_steps is exhausted.
PassageRecord first_passage(RealizedEnvironment& env, int64_t start,
                            int64_t up, int64_t down, int64_t max_steps,
                            uint64_t rng_seed);

struct StoppingCheck {
  double mean_exit_position = 0.0;
  double mean_consumed_drift = 0.0;
  double gap_mean = 0.0;  // mean of exit position - start - consumed drift
  double gap_se = 0.0;
  double z = 0.0;
  int64_t replicas_used = 0;
  int64_t undecided = 0;
};

// Empirical check of the exit identity E[X_T] = start + E[D_T] over
// replicas on the same quenched environment (stacks shared, consumption
// reset per replica). Undecided replicas are excluded and counted.
StoppingCheck optional_stopping_check(const RealizedEnvironment& env,
                                      int64_t start, int64_t up, int64_t down,
                                      int64_t replicas, uint64_t seed,
                                      int64_t max_steps = 1'000'000,
                                      int threads = 1);

}  // namespace cookiewalk
