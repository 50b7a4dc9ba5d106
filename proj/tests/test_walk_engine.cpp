#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cookiewalk/cookie_env.hpp"
#include "cookiewalk/rng.hpp"
#include "cookiewalk/walk_engine.hpp"

// Engine oracles: deterministic laws give exactly predictable paths and
// ledgers; symmetric no-cookie laws have closed-form exit probabilities
// and exit times (gambler's ruin); the exit identity is checked both in
// a zero-variance instance (exact) and statistically.

using namespace cookiewalk;

namespace {

JumpDistribution pm1() { return JumpDistribution::symmetric_pm1(); }

CookieStack stack_with(std::vector<JumpDistribution> cookies) {
  CookieStack s;
  s.cookies = std::move(cookies);
  s.background = pm1();
  return s;
}

RealizedEnvironment always_right_env(uint64_t env_seed) {
  return RealizedEnvironment(
      EnvironmentLaw::deterministic(stack_with({JumpDistribution::point(1)}),
                                    1),
      env_seed);
}

RealizedEnvironment no_cookie_env(uint64_t env_seed) {
  return RealizedEnvironment(
      EnvironmentLaw::deterministic(stack_with({}), 1), env_seed);
}

}  // namespace

TEST_CASE("always-right first cookie: exact path and ledgers") {
  RealizedEnvironment env = always_right_env(1);
  WalkState walk(0, 42);
  for (int64_t k = 1; k <= 50; ++k) {
    walk.step(env);
    // Every step lands on a fresh site whose first-visit law is a point
    // mass at +1, so the position, the consumed drift, and the ledger are
    // all deterministic.
    CHECK(walk.position() == k);
    CHECK(walk.consumed_drift() == static_cast<double>(k));
    CHECK(walk.martingale() == 0.0);
    CHECK(walk.last_jump() == 1);
  }
  CHECK(walk.steps() == 50);
  CHECK(walk.min_seen() == 0);
  CHECK(walk.max_seen() == 50);
  CHECK(walk.consumed_drift_right() == 50.0);
  for (int64_t x = 0; x <= 50; ++x) CHECK(walk.local_time(x) == 1);
  CHECK(walk.local_time(51) == 0);
  for (int64_t x = 0; x < 50; ++x) CHECK(walk.site_drift(x) == 1.0);
  CHECK(walk.site_drift(50) == 0.0);  // not yet stepped from
}

TEST_CASE("no cookies: ledger stays zero and the position is the martingale") {
  RealizedEnvironment env = no_cookie_env(2);
  WalkState walk(0, 7);
  for (int i = 0; i < 1000; ++i) walk.step(env);
  CHECK(walk.consumed_drift() == 0.0);
  CHECK(walk.consumed_drift_right() == 0.0);
  CHECK(walk.martingale() == static_cast<double>(walk.position()));
}

TEST_CASE("local-time conservation: visits sum to steps plus one") {
  RealizedEnvironment env(make_theta_family(0.75, 5), 99);
  WalkState walk(0, 11);
  for (int i = 0; i < 2000; ++i) walk.step(env);
  int64_t total = 0;
  for (int64_t x : walk.touched_sites()) total += walk.local_time(x);
  CHECK(total == walk.steps() + 1);
}

TEST_CASE("ledger additivity: site drifts sum to the global ledgers") {
  RealizedEnvironment env(make_theta_family(0.75, 5), 123);
  WalkState walk(0, 17);
  for (int i = 0; i < 5000; ++i) walk.step(env);
  double total = 0.0, right = 0.0;
  for (int64_t x : walk.touched_sites()) {
    total += walk.site_drift(x);
    if (x >= 0) right += walk.site_drift(x);
  }
  CHECK(std::abs(total - walk.consumed_drift()) <= 1e-9);
  CHECK(std::abs(right - walk.consumed_drift_right()) <= 1e-9);
}

TEST_CASE("run_until: predicate stop and budget stop") {
  RealizedEnvironment env = always_right_env(1);
  WalkState walk(0, 1);
  const RunOutcome hit = run_until(
      walk, env, [](const WalkState& w) { return w.position() >= 5; }, 1000);
  CHECK(hit.decided());
  CHECK(hit.reason == StopReason::Predicate);
  CHECK(hit.steps_taken == 5);
  CHECK(walk.position() == 5);

  WalkState other(0, 1);
  RealizedEnvironment env2 = always_right_env(1);
  const RunOutcome out = run_until(
      other, env2, [](const WalkState&) { return false; }, 100);
  CHECK_FALSE(out.decided());
  CHECK(out.reason == StopReason::MaxSteps);
  CHECK(out.steps_taken == 100);
  CHECK(other.steps() == 100);
}

TEST_CASE("first_passage: symmetric exit splits evenly") {
  RealizedEnvironment env = no_cookie_env(3);
  const int64_t n = 40'000;
  int64_t ups = 0;
  for (int64_t i = 0; i < n; ++i) {
    env.reset_run();
    const PassageRecord rec =
        first_passage(env, 0, 2, -2, 100'000, mix_seed(21, static_cast<uint64_t>(i)));
    REQUIRE(rec.side != ExitSide::Undecided);
    if (rec.side == ExitSide::Up) ++ups;
    CHECK(rec.drift_at_exit == 0.0);
  }
  const double phat = static_cast<double>(ups) / static_cast<double>(n);
  CHECK(std::abs(phat - 0.5) <= 4.0 * std::sqrt(0.25 / static_cast<double>(n)));
}

TEST_CASE("first_passage: asymmetric interval matches gambler's ruin") {
  // Start 0 on (-1, 3): exit up has probability 1/4 and E[T] = 3.
  RealizedEnvironment env = no_cookie_env(3);
  const int64_t n = 40'000;
  int64_t ups = 0;
  double time_sum = 0.0, time_sq = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    env.reset_run();
    const PassageRecord rec =
        first_passage(env, 0, 3, -1, 100'000, mix_seed(33, static_cast<uint64_t>(i)));
    REQUIRE(rec.side != ExitSide::Undecided);
    if (rec.side == ExitSide::Up) ++ups;
    time_sum += static_cast<double>(rec.exit_time);
    time_sq += static_cast<double>(rec.exit_time) * static_cast<double>(rec.exit_time);
  }
  const double nd = static_cast<double>(n);
  const double phat = static_cast<double>(ups) / nd;
  CHECK(std::abs(phat - 0.25) <=
        4.0 * std::sqrt(0.25 * 0.75 / nd));
  const double tbar = time_sum / nd;
  const double tvar = time_sq / nd - tbar * tbar;
  CHECK(std::abs(tbar - 3.0) <= 4.0 * std::sqrt(tvar / nd));
}

TEST_CASE("first_passage: jump cookie exits immediately, overshoot kept") {
  RealizedEnvironment two(
      EnvironmentLaw::deterministic(stack_with({JumpDistribution::point(2)}), 1),
      4);
  const PassageRecord rec = first_passage(two, 0, 2, -2, 100, 9);
  CHECK(rec.side == ExitSide::Up);
  CHECK(rec.exit_time == 1);
  CHECK(rec.exit_position == 2);
  CHECK(rec.drift_at_exit == 2.0);

  RealizedEnvironment three(
      EnvironmentLaw::deterministic(stack_with({JumpDistribution::point(3)}), 1),
      4);
  const PassageRecord over = first_passage(three, 0, 2, -2, 100, 9);
  CHECK(over.side == ExitSide::Up);
  CHECK(over.exit_position == 3);  // one past the boundary
}

TEST_CASE("first_passage: budget exhaustion reports Undecided") {
  RealizedEnvironment env = always_right_env(1);
  const PassageRecord rec = first_passage(env, 0, 100, -100, 3, 1);
  CHECK(rec.side == ExitSide::Undecided);
  CHECK(rec.exit_time == 3);
  CHECK(rec.exit_position == 3);
}

TEST_CASE("first_passage: bound ordering is validated") {
  RealizedEnvironment env = no_cookie_env(1);
  CHECK_THROWS_AS(first_passage(env, 0, 0, -2, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(first_passage(env, 0, 2, 0, 10, 1), std::invalid_argument);
}

TEST_CASE("optional stopping: no cookies, statistical identity") {
  RealizedEnvironment env = no_cookie_env(8);
  const StoppingCheck check = optional_stopping_check(env, 0, 3, -3, 20'000, 31);
  CHECK(check.undecided == 0);
  CHECK(check.replicas_used == 20'000);
  CHECK(check.mean_consumed_drift == 0.0);  // ledger identically zero here
  CHECK(std::abs(check.z) <= 4.0);
}

TEST_CASE("optional stopping: deterministic cookie path is exact") {
  RealizedEnvironment env = always_right_env(1);
  const StoppingCheck check = optional_stopping_check(env, 0, 3, -3, 200, 5);
  CHECK(check.mean_exit_position == 3.0);
  CHECK(check.mean_consumed_drift == 3.0);
  CHECK(check.gap_mean == 0.0);
  CHECK(check.gap_se == 0.0);
  CHECK(check.z == 0.0);
  CHECK(check.undecided == 0);
}

TEST_CASE("optional stopping: excited law agrees with its exact solution") {
  // One cookie (-1 w.p. 1/2, +2 w.p. 1/2) per site on (-2, 2): the exact
  // expected exit position and expected consumed drift are both 7/8.
  RealizedEnvironment env(
      EnvironmentLaw::deterministic(
          stack_with({JumpDistribution::make({{-1, 0.5}, {2, 0.5}})}), 1),
      6);
  const StoppingCheck check =
      optional_stopping_check(env, 0, 2, -2, 20'000, 77, 1'000'000, 2);
  CHECK(check.undecided == 0);
  CHECK(std::abs(check.z) <= 4.0);
  // Exit positions live in {-2, 2, 3}: the spread is below 2.5, so four
  // standard errors at 2e4 replicas stay below 0.071.
  CHECK(std::abs(check.mean_exit_position - 0.875) <= 0.08);
  CHECK(std::abs(check.mean_consumed_drift - 0.875) <= 0.08);
}

TEST_CASE("same seeds give bit-identical trajectories") {
  const auto law = make_theta_family(0.75, 13);
  RealizedEnvironment e1(law, 55), e2(law, 55);
  WalkState w1(0, 1001), w2(0, 1001);
  for (int i = 0; i < 5000; ++i) {
    w1.step(e1);
    w2.step(e2);
    REQUIRE(w1.position() == w2.position());
  }
  CHECK(w1.consumed_drift() == w2.consumed_drift());
}

TEST_CASE("reset reproduces the original run exactly") {
  const auto law = make_theta_family(0.9, 13);
  RealizedEnvironment env(law, 21);
  WalkState walk(0, 303);
  std::vector<int64_t> first;
  for (int i = 0; i < 2000; ++i) {
    walk.step(env);
    first.push_back(walk.position());
  }
  const double drift_first = walk.consumed_drift();

  env.reset_run(21);
  walk.reset(0, 303);
  CHECK(walk.steps() == 0);
  CHECK(walk.local_time(0) == 1);
  for (int i = 0; i < 2000; ++i) {
    walk.step(env);
    REQUIRE(walk.position() == first[static_cast<size_t>(i)]);
  }
  CHECK(walk.consumed_drift() == drift_first);
}

TEST_CASE("arena and hashed site storage agree exactly") {
  const auto law = make_theta_family(0.75, 13);
  RealizedEnvironment dense(law, 31), sparse(law, 31);
  WalkState wd(0, 71), ws(0, 71);
  dense.set_arena(-2048, 1 << 16);
  wd.set_arena(-2048, 1 << 16);
  for (int i = 0; i < 10'000; ++i) {
    wd.step(dense);
    ws.step(sparse);
    REQUIRE(wd.position() == ws.position());
  }
  CHECK(wd.consumed_drift() == ws.consumed_drift());
  CHECK(wd.consumed_drift_right() == ws.consumed_drift_right());
  CHECK(wd.min_seen() == ws.min_seen());
  for (int64_t x : ws.touched_sites())
    CHECK(wd.local_time(x) == ws.local_time(x));
}
