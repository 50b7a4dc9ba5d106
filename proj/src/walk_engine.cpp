#include "cookiewalk/walk_engine.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "cookiewalk/parallel.hpp"
#include "cookiewalk/stats.hpp"

namespace cookiewalk {

WalkState::WalkState(int64_t start, uint64_t rng_seed)
    : pos_(start), start_(start), min_(start), max_(start), rng_(rng_seed) {
  sites_.at(start).visits = 1;  // the starting position counts as a visit
}

void WalkState::reset(int64_t start, uint64_t rng_seed) {
  pos_ = start_ = min_ = max_ = start;
  steps_ = 0;
  last_jump_ = 0;
  drift_ = drift_right_ = 0.0;
  sites_.clear();
  sites_.at(start).visits = 1;
  rng_.reseed(rng_seed);
}

int64_t WalkState::local_time(int64_t x) const {
  const WalkSite* s = sites_.find(x);
  return s ? s->visits : 0;
}

double WalkState::site_drift(int64_t x) const {
  const WalkSite* s = sites_.find(x);
  return s ? s->drift : 0.0;
}

void WalkState::step(RealizedEnvironment& env) {
  const int64_t x = pos_;
  WalkSite& here = sites_.at(x);
  const int64_t j = here.visits;  // arrivals already counted, so j >= 1
  const JumpDistribution& law = env.consume_step_law(x, j);
  const double m = law.mean();
  here.drift += m;
  drift_ += m;
  if (x >= 0) drift_right_ += m;
  const int64_t z = law.sample(rng_);
  last_jump_ = z;
  pos_ = x + z;
  ++steps_;
  sites_.at(pos_).visits += 1;
  min_ = std::min(min_, pos_);
  max_ = std::max(max_, pos_);
}

PassageRecord first_passage(RealizedEnvironment& env, int64_t start,
                            int64_t up, int64_t down, int64_t max_steps,
                            uint64_t rng_seed) {
  if (!(down < start && start < up))
    throw std::invalid_argument("first_passage requires down < start < up");
  WalkState walk(start, rng_seed);
  const RunOutcome out = run_until(
      walk, env,
      [up, down](const WalkState& w) {
        return w.position() >= up || w.position() <= down;
      },
      max_steps);
  PassageRecord rec;
  rec.exit_position = walk.position();
  rec.exit_time = walk.steps();
  rec.drift_at_exit = walk.consumed_drift();
  rec.drift_right_at_exit = walk.consumed_drift_right();
  if (!out.decided())
    rec.side = ExitSide::Undecided;
  else
    rec.side = walk.position() >= up ? ExitSide::Up : ExitSide::Down;
  return rec;
}

StoppingCheck optional_stopping_check(const RealizedEnvironment& env,
                                      int64_t start, int64_t up, int64_t down,
                                      int64_t replicas, uint64_t seed,
                                      int64_t max_steps, int threads) {
  struct Slot {
    double gap = 0.0, exit_pos = 0.0, drift = 0.0;
    bool decided = false;
  };
  std::vector<Slot> slots(static_cast<size_t>(replicas));
  parallel_chunks(replicas, threads, [&](int64_t begin, int64_t end) {
    RealizedEnvironment local = env.fork_fresh();
    local.set_arena(down - local.max_jump_bound(),
                    up + local.max_jump_bound());
    for (int64_t i = begin; i < end; ++i) {
      local.reset_run();
      const PassageRecord rec =
          first_passage(local, start, up, down, max_steps, mix_seed(seed, static_cast<uint64_t>(i)));
      Slot& s = slots[static_cast<size_t>(i)];
      s.decided = rec.side != ExitSide::Undecided;
      s.exit_pos = static_cast<double>(rec.exit_position);
      s.drift = rec.drift_at_exit;
      s.gap = s.exit_pos - static_cast<double>(start) - s.drift;
    }
  });

  StoppingCheck check;
  OnlineStats gap, xs, ds;
  for (const Slot& s : slots) {
    if (!s.decided) {
      ++check.undecided;
      continue;
    }
    gap.add(s.gap);
    xs.add(s.exit_pos);
    ds.add(s.drift);
  }
  check.replicas_used = gap.count;
  check.mean_exit_position = xs.mean;
  check.mean_consumed_drift = ds.mean;
  check.gap_mean = gap.mean;
  check.gap_se = gap.standard_error();
  check.z = z_score(gap.mean, 0.0, check.gap_se);
  return check;
}

}  // namespace cookiewalk
