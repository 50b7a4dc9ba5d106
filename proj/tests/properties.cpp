#include "properties.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "cookiewalk/cep.hpp"
#include "cookiewalk/classifier.hpp"
#include "cookiewalk/cookie_env.hpp"
#include "cookiewalk/exact_oracle.hpp"
#include "cookiewalk/rng.hpp"
#include "cookiewalk/stats.hpp"
#include "cookiewalk/walk_engine.hpp"

namespace cookiewalk::props {

namespace {

JumpDistribution pm1() { return JumpDistribution::symmetric_pm1(); }

CookieStack stack_with(std::vector<JumpDistribution> cookies) {
  CookieStack s;
  s.cookies = std::move(cookies);
  s.background = pm1();
  return s;
}

EnvironmentLaw mixture_law(uint64_t seed) {
  const auto a = stack_with({JumpDistribution::point(1),
                             JumpDistribution::make({{-1, 0.5}, {2, 0.5}})});
  const auto b = stack_with({pm1(), JumpDistribution::make({{-1, 0.25}, {3, 0.75}})});
  return EnvironmentLaw::iid_mixture({0.4, 0.6}, {a, b}, seed);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

PropertyOutcome local_time_conservation(uint64_t seed) {
  PropertyOutcome out{"local_time_conservation", true, ""};
  int run = 0;
  for (const EnvironmentLaw& law :
       {make_theta_family(0.75, mix_seed(seed, 1)), mixture_law(mix_seed(seed, 2))}) {
    RealizedEnvironment env(law, mix_seed(seed, 10 + static_cast<uint64_t>(run)));
    WalkState walk(0, mix_seed(seed, 20 + static_cast<uint64_t>(run)));
    for (int i = 0; i < 4000; ++i) walk.step(env);
    int64_t total = 0;
    for (int64_t x : walk.touched_sites()) total += walk.local_time(x);
    if (total != walk.steps() + 1) {
      out.pass = false;
      out.detail = "visit sum " + std::to_string(total) + " != steps+1 " +
                   std::to_string(walk.steps() + 1);
      return out;
    }
    ++run;
  }
  out.detail = "visit totals equal steps+1 on 2 laws x 4000 steps";
  return out;
}

PropertyOutcome ledger_additivity(uint64_t seed) {
  PropertyOutcome out{"ledger_additivity", true, ""};
  RealizedEnvironment env(mixture_law(mix_seed(seed, 3)), mix_seed(seed, 4));
  WalkState walk(0, mix_seed(seed, 5));
  for (int i = 0; i < 5000; ++i) walk.step(env);
  double total = 0.0, right = 0.0;
  for (int64_t x : walk.touched_sites()) {
    total += walk.site_drift(x);
    if (x >= 0) right += walk.site_drift(x);
  }
  const double gap = std::abs(total - walk.consumed_drift());
  const double gap_r = std::abs(right - walk.consumed_drift_right());
  out.pass = gap <= 1e-9 && gap_r <= 1e-9;
  out.detail = "site-sum gaps " + fmt(gap) + " / " + fmt(gap_r) + " (<= 1e-9)";
  return out;
}

PropertyOutcome martingale_mean_zero(uint64_t seed) {
  const auto law = make_theta_family(0.75, mix_seed(seed, 6));
  OnlineStats stats;
  RealizedEnvironment env(law, 0);
  WalkState walk(0, 0);
  env.set_arena(-1024, 8192);
  walk.set_arena(-1024, 8192);
  for (int64_t i = 0; i < 4000; ++i) {
    env.reset_run(mix_seed(seed, (static_cast<uint64_t>(i) << 1) | 0));
    walk.reset(0, mix_seed(seed, (static_cast<uint64_t>(i) << 1) | 1));
    for (int n = 0; n < 1000; ++n) walk.step(env);
    stats.add(walk.martingale());
  }
  const double bound = 4.0 * stats.standard_error();
  PropertyOutcome out{"martingale_mean_zero",
                      std::abs(stats.mean) <= bound,
                      "mean " + fmt(stats.mean) + " within " + fmt(bound)};
  return out;
}

PropertyOutcome escape_monotonicity(uint64_t seed) {
  ClassifyConfig cfg;
  cfg.horizons = {500, 2'000, 8'000};
  cfg.replicas = 1'500;
  cfg.seed = mix_seed(seed, 7);
  cfg.threads = 2;
  const ClassificationResult res =
      classify(make_theta_family(0.75, mix_seed(seed, 8)), cfg);
  bool ok = true;
  for (size_t i = 1; i < res.escape.size(); ++i) {
    ok = ok && res.escape[i].beta_hat <= res.escape[i - 1].beta_hat;
    ok = ok &&
         res.return_fraction[i].second >= res.return_fraction[i - 1].second;
  }
  std::string betas;
  for (const EscapePoint& p : res.escape) betas += fmt(p.beta_hat) + " ";
  return {"escape_monotonicity", ok,
          "beta_hat non-increasing across horizons: " + betas};
}

PropertyOutcome removal_composition(uint64_t seed) {
  RealizedEnvironment env(mixture_law(mix_seed(seed, 9)), mix_seed(seed, 10));
  Rng rng(mix_seed(seed, 11));
  std::map<int64_t, int64_t> l1, l2, capped;
  for (int64_t x = -6; x <= 6; ++x) {
    l1[x] = static_cast<int64_t>(rng.next() % 3);
    l2[x] = static_cast<int64_t>(rng.next() % 3);
    capped[x] = std::min<int64_t>(l1[x] + l2[x], env.M());
  }
  RealizedEnvironment lhs = env.removed(l1).removed(l2);
  RealizedEnvironment rhs = env.removed(capped);
  for (int64_t x = -6; x <= 6; ++x)
    for (int64_t j = 1; j <= env.M() + 2; ++j)
      if (!(lhs.next_step_law(x, j) == rhs.next_step_law(x, j)))
        return {"removal_composition", false,
                "laws differ at site " + std::to_string(x) + " visit " +
                    std::to_string(j)};
  return {"removal_composition", true,
          "sequential and capped-sum removals agree on 13 sites"};
}

PropertyOutcome realization_determinism(uint64_t seed) {
  const auto law = mixture_law(mix_seed(seed, 12));
  RealizedEnvironment e1(law, mix_seed(seed, 13)), e2(law, mix_seed(seed, 13));
  for (int64_t x = -200; x <= 200; ++x)
    if (!(e1.realize_site(x) == e2.realize_site(x)))
      return {"realization_determinism", false,
              "stacks differ at site " + std::to_string(x)};
  WalkState w1(0, mix_seed(seed, 14)), w2(0, mix_seed(seed, 14));
  RealizedEnvironment f1 = e1.fork_fresh(), f2 = e2.fork_fresh();
  for (int i = 0; i < 5000; ++i) {
    w1.step(f1);
    w2.step(f2);
    if (w1.position() != w2.position())
      return {"realization_determinism", false,
              "trajectories diverge at step " + std::to_string(i + 1)};
  }
  return {"realization_determinism", true,
          "stacks and a 5000-step trajectory reproduce bit for bit"};
}

PropertyOutcome exit_time_geometric_tail(uint64_t seed) {
  // On a bounded interval the exit time has a geometric tail; binned
  // log-frequencies of the exit time must fall on a strictly decreasing
  // trend.
  RealizedEnvironment env(
      EnvironmentLaw::deterministic(stack_with({}), mix_seed(seed, 15)),
      mix_seed(seed, 16));
  const int64_t replicas = 30'000;
  std::vector<int64_t> bins(10, 0);  // width-8 bins over [0, 80)
  for (int64_t i = 0; i < replicas; ++i) {
    env.reset_run();
    const PassageRecord rec = first_passage(env, 0, 3, -3, 100'000,
                                            mix_seed(seed, 100 + static_cast<uint64_t>(i)));
    const int64_t b = rec.exit_time / 8;
    if (b < static_cast<int64_t>(bins.size())) ++bins[static_cast<size_t>(b)];
  }
  // Least-squares slope of log counts over occupied bins.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (size_t b = 0; b < bins.size(); ++b) {
    if (bins[b] < 10) continue;
    const double x = static_cast<double>(b);
    const double y = std::log(static_cast<double>(bins[b]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  const double slope =
      (static_cast<double>(n) * sxy - sx * sy) / (static_cast<double>(n) * sxx - sx * sx);
  return {"exit_time_geometric_tail", n >= 5 && slope < -0.1,
          "log-frequency slope " + fmt(slope) + " over " + std::to_string(n) +
              " bins"};
}

PropertyOutcome sampling_frequencies(uint64_t seed) {
  const auto d = JumpDistribution::make(
      {{-2, 0.125}, {-1, 0.375}, {1, 0.375}, {2, 0.125}});
  Rng rng(mix_seed(seed, 17));
  const int64_t n = 200'000;
  std::map<int64_t, int64_t> counts;
  for (int64_t i = 0; i < n; ++i) ++counts[d.sample(rng)];
  for (const Atom& a : d.atoms()) {
    const double freq =
        static_cast<double>(counts[a.offset]) / static_cast<double>(n);
    const double se =
        std::sqrt(a.prob * (1.0 - a.prob) / static_cast<double>(n));
    if (std::abs(freq - a.prob) > 5.0 * se)
      return {"sampling_frequencies", false,
              "offset " + std::to_string(a.offset) + " freq " + fmt(freq) +
                  " vs " + fmt(a.prob)};
  }
  return {"sampling_frequencies", true,
          "all atom frequencies within 5 standard errors at 2e5 draws"};
}

PropertyOutcome renormalization_idempotence(uint64_t seed) {
  Rng rng(mix_seed(seed, 18));
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<std::pair<int64_t, double>> atoms;
    const int k = 2 + static_cast<int>(rng.next() % 4);
    double mass = 0.0;
    std::set<int64_t> used;
    for (int i = 0; i < k; ++i) {
      int64_t off;
      do {
        off = static_cast<int64_t>(rng.next() % 11) - 5;
      } while (used.count(off));
      used.insert(off);
      const double w = 0.1 + 0.9 * rng.u01();
      atoms.emplace_back(off, w);
      mass += w;
    }
    for (auto& [off, w] : atoms) w /= mass;
    const JumpDistribution d = JumpDistribution::make(atoms);
    std::vector<std::pair<int64_t, double>> again;
    for (const Atom& a : d.atoms()) again.emplace_back(a.offset, a.prob);
    if (!(JumpDistribution::make(again) == d))
      return {"renormalization_idempotence", false,
              "re-making from atoms changed the distribution"};
  }
  return {"renormalization_idempotence", true,
          "50 random laws re-make to themselves exactly"};
}

PropertyOutcome arena_storage_equivalence(uint64_t seed) {
  const auto law = make_theta_family(0.75, mix_seed(seed, 19));
  RealizedEnvironment dense(law, mix_seed(seed, 20)),
      sparse(law, mix_seed(seed, 20));
  WalkState wd(0, mix_seed(seed, 21)), ws(0, mix_seed(seed, 21));
  dense.set_arena(-2048, 65'536);
  wd.set_arena(-2048, 65'536);
  for (int i = 0; i < 10'000; ++i) {
    wd.step(dense);
    ws.step(sparse);
    if (wd.position() != ws.position())
      return {"arena_storage_equivalence", false,
              "positions diverge at step " + std::to_string(i + 1)};
  }
  if (wd.consumed_drift() != ws.consumed_drift())
    return {"arena_storage_equivalence", false, "ledgers differ"};
  return {"arena_storage_equivalence", true,
          "dense and hashed site storage agree over 1e4 steps"};
}

PropertyOutcome overshoot_bound(uint64_t seed) {
  RealizedEnvironment env(make_theta_family(0.75, mix_seed(seed, 22)),
                          mix_seed(seed, 23));
  WalkState walk(0, mix_seed(seed, 24));
  for (int64_t level = 1; level <= 300; ++level) {
    const auto state = advance_frontier(walk, env, level, 10'000'000);
    if (!state.has_value())
      return {"overshoot_bound", false, "unexpected censoring"};
    if (state->overshoot < 0 || state->overshoot > 2)
      return {"overshoot_bound", false,
              "overshoot " + std::to_string(state->overshoot) +
                  " outside [0, max jump - 1]"};
    for (const auto& [off, consumed] : state->consumed_window)
      if (off > 0 && consumed != 0)
        return {"overshoot_bound", false,
                "consumption strictly right of the frontier"};
  }
  return {"overshoot_bound", true,
          "overshoots in [0, 2] and no consumption right of the frontier"};
}

PropertyOutcome consumed_monotone_bounded(uint64_t seed) {
  RealizedEnvironment env(mixture_law(mix_seed(seed, 25)), mix_seed(seed, 26));
  WalkState walk(0, mix_seed(seed, 27));
  const std::vector<int64_t> probes = {-3, -1, 0, 1, 2, 5};
  std::map<int64_t, int64_t> last;
  for (int64_t x : probes) last[x] = env.consumed(x);
  for (int i = 0; i < 2000; ++i) {
    walk.step(env);
    for (int64_t x : probes) {
      const int64_t c = env.consumed(x);
      if (c < last[x] || c < 0 || c > env.M())
        return {"consumed_monotone_bounded", false,
                "site " + std::to_string(x) + " count " + std::to_string(c) +
                    " after " + std::to_string(last[x])};
      last[x] = c;
    }
  }
  return {"consumed_monotone_bounded", true,
          "per-site consumption non-decreasing and capped at M over a run"};
}

PropertyOutcome exit_law_identities(uint64_t seed) {
  const auto suite = random_instance_suite(8, mix_seed(seed, 28));
  for (size_t i = 0; i < suite.size(); ++i) {
    const ExitAnalysis res = solve_exit(suite[i]);
    double mass = 0.0;
    for (const Atom& a : res.exit_position_law.atoms()) mass += a.prob;
    const bool ok =
        std::abs(mass - 1.0) <= 1e-10 && res.stopping_residual() <= 1e-10 &&
        res.expected_exit_position() >=
            static_cast<double>(suite[i].start) - 1e-10 &&
        res.expected_consumed_drift <= suite[i].total_stack_drift() + 1e-10;
    if (!ok)
      return {"exit_law_identities", false,
              "instance " + std::to_string(i) + ": mass " + fmt(mass) +
                  ", residual " + fmt(res.stopping_residual())};
  }
  return {"exit_law_identities", true,
          "mass, stopping identity, submartingale and ledger bounds on 8 "
          "random instances"};
}

PropertyOutcome frontier_rate_bound(uint64_t seed) {
  const auto law = make_theta_family(0.75, mix_seed(seed, 29));
  const int64_t n = 1'000;
  const RateEstimate est =
      right_drift_rate(law, n, 80, mix_seed(seed, 30), -1, 2);
  const double bound =
      1.0 + 5.0 / std::sqrt(static_cast<double>(n)) + 4.0 * est.se;
  return {"frontier_rate_bound", est.censored == 0 && est.mean <= bound,
          "rate " + fmt(est.mean) + " <= " + fmt(bound)};
}

PropertyOutcome frontier_monotone_passage(uint64_t seed) {
  RealizedEnvironment env(make_theta_family(0.75, mix_seed(seed, 31)),
                          mix_seed(seed, 32));
  WalkState walk(0, mix_seed(seed, 33));
  int64_t prev_steps = -1, prev_overshoot = 0;
  for (int64_t level = 1; level <= 300; ++level) {
    const auto state = advance_frontier(walk, env, level, 10'000'000);
    if (!state.has_value())
      return {"frontier_monotone_passage", false, "unexpected censoring"};
    if (walk.steps() < prev_steps)
      return {"frontier_monotone_passage", false,
              "passage times decreased at level " + std::to_string(level)};
    // A strictly later passage time is required unless the previous jump
    // already carried the walk past this level (positive overshoot there).
    if (prev_steps >= 0 && prev_overshoot == 0 && walk.steps() <= prev_steps)
      return {"frontier_monotone_passage", false,
              "no fresh step despite zero overshoot at level " +
                  std::to_string(level)};
    prev_steps = walk.steps();
    prev_overshoot = state->overshoot;
  }
  return {"frontier_monotone_passage", true,
          "passage times non-decreasing, strict after zero overshoot"};
}

PropertyOutcome stopping_identity_mc(uint64_t seed) {
  RealizedEnvironment excited(
      EnvironmentLaw::deterministic(
          stack_with({JumpDistribution::make({{-1, 0.5}, {2, 0.5}})}),
          mix_seed(seed, 34)),
      mix_seed(seed, 35));
  const StoppingCheck stat = optional_stopping_check(excited, 0, 2, -2, 20'000,
                                                     mix_seed(seed, 36));
  if (stat.undecided != 0 || std::abs(stat.z) > 4.0)
    return {"stopping_identity_mc", false,
            "z " + fmt(stat.z) + ", undecided " + std::to_string(stat.undecided)};

  RealizedEnvironment certain(
      EnvironmentLaw::deterministic(stack_with({JumpDistribution::point(1)}),
                                    mix_seed(seed, 37)),
      mix_seed(seed, 38));
  const StoppingCheck exact =
      optional_stopping_check(certain, 0, 3, -3, 200, mix_seed(seed, 39));
  if (exact.gap_mean != 0.0 || exact.gap_se != 0.0)
    return {"stopping_identity_mc", false, "deterministic gap not exactly 0"};
  return {"stopping_identity_mc", true,
          "identity holds: |z| = " + fmt(std::abs(stat.z)) +
              " statistically, exactly on the deterministic law"};
}

PropertyOutcome delta_consistency(uint64_t seed) {
  const auto law = mixture_law(mix_seed(seed, 40));
  // Exact: weighted average of stack drifts.
  double exact = 0.0;
  for (size_t i = 0; i < law.stack_count(); ++i)
    exact += law.weight(i) * law.stack(i).drift();
  if (std::abs(law.delta() - exact) > 1e-12)
    return {"delta_consistency", false,
            "delta " + fmt(law.delta()) + " vs weighted sum " + fmt(exact)};
  RealizedEnvironment env(law, mix_seed(seed, 41));
  const int64_t n = 40'000;
  OnlineStats stats;
  for (int64_t x = 0; x < n; ++x) stats.add(env.realize_site(x).drift());
  const double bound = 4.0 * stats.standard_error();
  return {"delta_consistency",
          std::abs(stats.mean - exact) <= bound,
          "site average " + fmt(stats.mean) + " within " + fmt(bound) +
              " of exact " + fmt(exact)};
}

}  // namespace

std::vector<PropertyOutcome> run_property_suite(uint64_t seed) {
  return {local_time_conservation(seed),
          ledger_additivity(seed),
          martingale_mean_zero(seed),
          escape_monotonicity(seed),
          removal_composition(seed),
          realization_determinism(seed),
          exit_time_geometric_tail(seed),
          sampling_frequencies(seed),
          renormalization_idempotence(seed),
          arena_storage_equivalence(seed),
          overshoot_bound(seed),
          consumed_monotone_bounded(seed),
          exit_law_identities(seed),
          frontier_rate_bound(seed),
          frontier_monotone_passage(seed),
          stopping_identity_mc(seed),
          delta_consistency(seed)};
}

}  // namespace cookiewalk::props
