#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cookiewalk/distributions.hpp"
#include "cookiewalk/sites.hpp"

// Cookie environments: a per-site stack of M "cookie" jump laws consumed on
// the first M visits, with a zero-mean background law afterwards. The
// generative law is either one fixed stack at every site or an i.i.d.
// finite mixture of stacks; quenched (explicitly site-indexed) environments
// cover exactly-solvable instances and hand-built examples.

namespace cookiewalk {

struct CookieStack {
  std::vector<JumpDistribution> cookies;  // visit j = 1..M uses cookies[j-1]
  JumpDistribution background;            // visits j > M

  // Sum of the cookie means: the total drift stored at one site.
  double drift() const;

  // 1-based visit index; beyond the stack depth the background answers.
  const JumpDistribution& law_for_visit(int64_t j) const;

  int64_t depth() const { return static_cast<int64_t>(cookies.size()); }
  int64_t max_abs_jump() const;
  double abs_moment() const;  // sum over cookies of sum |z| p(z)

  bool operator==(const CookieStack&) const = default;
};

// Per-assumption validation outcome; collects human-readable failures
// instead of throwing so that callers can report and decide.
struct AssumptionReport {
  bool cookie_drifts_nonneg = false;  // every cookie mean >= 0
  bool background_ok = false;         // zero mean, aperiodic, not a point mass
  bool abs_moment_finite = true;      // always true for finite supports
  double cookie_abs_moment = 0.0;     // reported value of the first moment
  bool iid_sites = true;              // by construction for generated laws
  bool ellipticity_up = false;        // first cookie can move right...
  bool ellipticity_down = false;      // ...and some stack can move left
  std::vector<std::string> failures;

  bool all_pass() const {
    return cookie_drifts_nonneg && background_ok && abs_moment_finite &&
           iid_sites && ellipticity_up && ellipticity_down;
  }
};

class EnvironmentLaw {
 public:
  // One fixed stack at every site.
  static EnvironmentLaw deterministic(CookieStack stack, uint64_t master_seed);
  // Stacks drawn independently per site from a finite weighted mixture.
  // Weights must be positive and sum to 1 within 1e-9 (renormalized).
  static EnvironmentLaw iid_mixture(std::vector<double> weights,
                                    std::vector<CookieStack> stacks,
                                    uint64_t master_seed);

  int64_t M() const { return m_; }
  const JumpDistribution& background() const;
  bool is_deterministic() const { return stacks_.size() == 1; }
  size_t stack_count() const { return stacks_.size(); }
  const CookieStack& stack(size_t i) const { return stacks_[i]; }
  double weight(size_t i) const { return weights_[i]; }

  uint64_t master_seed() const { return master_seed_; }

  // Expected total cookie drift per site: the exact weighted average of
  // stack drifts. This is the phase-transition parameter (recurrent iff
  // the value is at most 1).
  double delta() const;

  AssumptionReport validate() const;

  int64_t background_bound() const;  // max |offset| of the background
  int64_t max_jump_bound() const;    // max |offset| over stacks + background

  // Deterministic mixture pick for (env_seed, site).
  size_t pick_stack(uint64_t env_seed, int64_t site) const;

 private:
  int64_t m_ = 0;
  std::vector<double> weights_;
  std::vector<CookieStack> stacks_;
  uint64_t master_seed_ = 0;
};

// The family with one cookie jumping +3 with probability theta and -1
// otherwise, on a symmetric +-1 background; its delta is 4*theta - 1.
EnvironmentLaw make_theta_family(double theta, uint64_t master_seed);

class RealizedEnvironment {
 public:
  // Law-backed: stacks realized lazily and deterministically per
  // (env_seed, site); replicas use distinct env seeds.
  RealizedEnvironment(EnvironmentLaw law, uint64_t env_seed);

  // Quenched: explicit stacks at listed sites, default stack elsewhere.
  static RealizedEnvironment quenched(JumpDistribution background, int64_t M,
                                      std::map<int64_t, CookieStack> sites);

  int64_t M() const { return core_->M; }
  const JumpDistribution& background() const { return core_->background; }
  uint64_t env_seed() const { return env_seed_; }
  int64_t max_jump_bound() const { return core_->max_jump_bound; }

  // The stack realized at x (before any removal shift).
  const CookieStack& realize_site(int64_t x);

  // Law for the j-th visit (1-based), accounting for removed cookies.
  const JumpDistribution& next_step_law(int64_t x, int64_t j);

  // Hot-path helper for the walk: returns next_step_law(x, j) and records
  // the consumption in one site lookup.
  const JumpDistribution& consume_step_law(int64_t x, int64_t j);

  // Record that the walk consumed visit j at site x (no-op beyond depth M).
  void note_consumed(int64_t x, int64_t j);

  // Cookies gone at x: removal shift plus cookies eaten this run, capped
  // at M. Monotone non-decreasing over a run.
  int64_t consumed(int64_t x) const;

  // Cookie-removal operator: a new environment whose j-th law at x equals
  // this environment's (counts[x] + j)-th law, counts capped at M. The
  // returned environment starts with a fresh run state.
  RealizedEnvironment removed(const std::map<int64_t, int64_t>& counts) const;

  int64_t removal_shift(int64_t x) const;

  // Forget per-run consumption (keeps stacks and removal shifts).
  void reset_run();

  // Forget per-run consumption and realize the law under a new seed:
  // replica loops reuse the same arena allocation this way. Quenched
  // environments ignore the seed.
  void reset_run(uint64_t new_env_seed);

  // Dense fast path for per-run state on a known hot range.
  void set_arena(int64_t lo, int64_t hi) { run_.set_arena(lo, hi); }

  // A copy sharing the immutable stacks but with a fresh run state.
  RealizedEnvironment fork_fresh() const;

 private:
  struct Core {
    std::optional<EnvironmentLaw> law;  // absent for quenched environments
    int64_t M = 0;
    JumpDistribution background;
    std::map<int64_t, CookieStack> explicit_sites;
    CookieStack default_stack;
    std::map<int64_t, int64_t> removal;  // capped at M
    int64_t max_jump_bound = 0;
  };

  struct SiteState {
    int32_t stack_idx = -1;  // memoized mixture pick; -1 = not realized
    int32_t eaten = 0;       // cookies consumed by the current run
  };

  RealizedEnvironment() = default;

  std::shared_ptr<const Core> core_;
  SiteTable<SiteState> run_;
  uint64_t env_seed_ = 0;
};

// Quenched environment in which the walk escapes to the left along the
// diagonal X_n = -n with positive probability: sites x <= -2 carry one
// cookie stepping -1 with probability 1 - 1/x^2 and x^2 - 1 otherwise, on
// a symmetric +-1 background, realized down to site -(depth + 1). The
// probability of holding the diagonal for `depth` steps has the exact
// telescoping value depth / (8 * (depth - 1)).
RealizedEnvironment make_diagonal_escape_environment(int64_t depth);

// Exact probability that the diagonal path survives `depth` steps in the
// environment above, computed from the realized laws themselves.
double diagonal_escape_reference(RealizedEnvironment& env, int64_t depth);

}  // namespace cookiewalk
