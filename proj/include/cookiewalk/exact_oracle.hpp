#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cookiewalk/cookie_env.hpp"
#include "cookiewalk/distributions.hpp"

// Exact analysis of bounded instances on a finite interval. The chain
// state is (position, per-site consumed counts capped at M); jumps landing
// at or beyond a boundary absorb at their landing position, overshoot
// preserved. Exit probabilities, the exit-position law, expected consumed
// drift and expected exit time come from linear solves against I - Q.

namespace cookiewalk {

struct OracleInstance {
  int64_t lo = 0;     // absorb when position <= lo
  int64_t hi = 0;     // absorb when position >= hi
  int64_t start = 0;  // lo < start < hi
  int64_t M = 0;
  JumpDistribution background;
  std::map<int64_t, CookieStack> stacks;  // one per interior site

  // Validates bounds and fills missing interior sites with cookie-free
  // stacks so every site in (lo, hi) is explicitly realized.
  static OracleInstance make(int64_t lo, int64_t hi, int64_t start, int64_t M,
                             JumpDistribution background,
                             std::map<int64_t, CookieStack> stacks);

  // Captures the effective stacks of an environment on (lo, hi).
  static OracleInstance from_environment(RealizedEnvironment& env, int64_t lo,
                                         int64_t hi, int64_t start);

  int64_t width() const { return hi - lo - 1; }  // number of interior sites
  RealizedEnvironment as_environment() const;
  double total_stack_drift() const;  // sum of interior stack drifts
};

// Bijective indexing of transient states (site, consumed-count signature).
class StateIndexer {
 public:
  StateIndexer(int64_t width, int64_t M, int64_t state_budget);

  int64_t states() const { return states_; }
  int64_t signatures() const { return signatures_; }

  // site_index in [0, width), packed count signature in [0, signatures).
  int64_t id(int64_t site_index, int64_t signature) const {
    return site_index * signatures_ + signature;
  }
  int64_t site_index(int64_t id) const { return id / signatures_; }
  int64_t signature(int64_t id) const { return id % signatures_; }

  // Count of the given site within a packed signature, and the signature
  // with that site's count bumped (capped at M).
  int64_t count_at(int64_t signature, int64_t site_index) const;
  int64_t bumped(int64_t signature, int64_t site_index) const;

 private:
  int64_t width_, m_, signatures_, states_;
  std::vector<int64_t> pow_;  // (M+1)^i
};

// Transient-state count W*(M+1)^W; throws std::length_error with the
// computed count when it exceeds the budget.
int64_t count_states(const OracleInstance& inst,
                     int64_t state_budget = 5'000'000);

struct SolveOptions {
  int64_t state_budget = 5'000'000;
  int64_t dense_limit = 3000;       // direct dense LU below this
  int64_t direct_limit = 10'000;    // direct sparse LU below this
  double residual_target = 1e-12;   // relative residual for every solve
};

struct ExitAnalysis {
  double p_up = 0.0;  // probability of exiting at or above hi
  JumpDistribution exit_position_law;
  double expected_consumed_drift = 0.0;
  double expected_exit_time = 0.0;
  int64_t start = 0;
  int64_t n_states = 0;
  std::string solver;       // "dense-lu", "sparse-lu" or "bicgstab-ilut"
  double solve_residual = 0.0;  // max relative residual across solves

  double expected_exit_position() const { return exit_position_law.mean(); }
  // | E[exit position] - start - E[consumed drift] |
  double stopping_residual() const;
};

ExitAnalysis solve_exit(const OracleInstance& inst,
                        const SolveOptions& opt = {});

struct CheckRow {
  std::string name;
  double exact = 0.0;
  double estimate = 0.0;
  double se = 0.0;
  double z = 0.0;
};

struct ValidationReport {
  std::vector<CheckRow> rows;
  int64_t replicas = 0;
  int64_t undecided = 0;
  double max_abs_z = 0.0;
  bool pass = false;  // all |z| <= 4 and no undecided replicas
};

// Monte Carlo estimates of every solved quantity on the same instance,
// compared to the exact values as z-scores.
ValidationReport cross_validate(const OracleInstance& inst, int64_t replicas,
                                uint64_t seed, int threads = 1);

// Seeded regression suite: interval width <= 5, M <= 2, jumps in [-2, 2],
// cookie drifts >= 0, aperiodic zero-mean backgrounds.
std::vector<OracleInstance> random_instance_suite(int64_t count,
                                                  uint64_t seed);

}  // namespace cookiewalk
