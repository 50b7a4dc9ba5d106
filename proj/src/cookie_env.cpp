#include "cookiewalk/cookie_env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cookiewalk {

double CookieStack::drift() const {
  long double d = 0.0L;
  for (const auto& c : cookies) d += c.mean();
  return static_cast<double>(d);
}

const JumpDistribution& CookieStack::law_for_visit(int64_t j) const {
  if (j < 1) throw std::invalid_argument("visit index is 1-based");
  return j <= depth() ? cookies[static_cast<size_t>(j - 1)] : background;
}

int64_t CookieStack::max_abs_jump() const {
  int64_t m = background.max_abs_offset();
  for (const auto& c : cookies) m = std::max(m, c.max_abs_offset());
  return m;
}

double CookieStack::abs_moment() const {
  long double m = 0.0L;
  for (const auto& c : cookies) m += c.abs_moment();
  return static_cast<double>(m);
}

EnvironmentLaw EnvironmentLaw::deterministic(CookieStack stack,
                                             uint64_t master_seed) {
  return iid_mixture({1.0}, {std::move(stack)}, master_seed);
}

EnvironmentLaw EnvironmentLaw::iid_mixture(std::vector<double> weights,
                                           std::vector<CookieStack> stacks,
                                           uint64_t master_seed) {
  if (stacks.empty() || weights.size() != stacks.size())
    throw std::invalid_argument("mixture needs matching weights and stacks");
  long double sum = 0.0L;
  for (double w : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("mixture weights must be positive");
    sum += w;
  }
  if (std::abs(static_cast<double>(sum) - 1.0) > 1e-9)
    throw std::invalid_argument("mixture weights must sum to 1 within 1e-9");
  for (auto& w : weights) w = static_cast<double>(w / sum);

  const int64_t m = stacks.front().depth();
  for (const auto& s : stacks) {
    if (s.depth() != m)
      throw std::invalid_argument("all stacks must have the same cookie depth");
    if (!(s.background == stacks.front().background))
      throw std::invalid_argument("all stacks must share the background law");
    if (!s.background.valid())
      throw std::invalid_argument("stack background must be a valid distribution");
    for (const auto& c : s.cookies)
      if (!c.valid()) throw std::invalid_argument("invalid cookie distribution");
  }

  EnvironmentLaw law;
  law.m_ = m;
  law.weights_ = std::move(weights);
  law.stacks_ = std::move(stacks);
  law.master_seed_ = master_seed;
  return law;
}

const JumpDistribution& EnvironmentLaw::background() const {
  return stacks_.front().background;
}

double EnvironmentLaw::delta() const {
  long double d = 0.0L;
  for (size_t i = 0; i < stacks_.size(); ++i)
    d += static_cast<long double>(weights_[i]) * stacks_[i].drift();
  return static_cast<double>(d);
}

AssumptionReport EnvironmentLaw::validate() const {
  AssumptionReport r;

  r.cookie_drifts_nonneg = true;
  for (size_t i = 0; i < stacks_.size(); ++i) {
    for (int64_t j = 1; j <= m_; ++j) {
      const double d = stacks_[i].cookies[static_cast<size_t>(j - 1)].mean();
      if (d < -1e-12) {
        r.cookie_drifts_nonneg = false;
        r.failures.push_back("stack " + std::to_string(i) + " cookie " +
                             std::to_string(j) + " has negative drift " +
                             std::to_string(d));
      }
    }
  }

  const JumpDistribution& bg = background();
  r.background_ok = true;
  if (std::abs(bg.mean()) > 1e-12) {
    r.background_ok = false;
    r.failures.push_back("background mean " + std::to_string(bg.mean()) +
                         " is not zero");
  }
  if (bg.atoms().size() < 2) {
    r.background_ok = false;
    r.failures.push_back("background is a point mass (degenerate support)");
  } else if (bg.reachable_lattice_gcd() != 1) {
    r.background_ok = false;
    r.failures.push_back(
        "background reaches only multiples of " +
        std::to_string(bg.reachable_lattice_gcd()) +
        "; the walk must be able to reach every integer");
  }

  long double abs_moment = 0.0L;
  for (size_t i = 0; i < stacks_.size(); ++i)
    abs_moment += static_cast<long double>(weights_[i]) * stacks_[i].abs_moment();
  r.cookie_abs_moment = static_cast<double>(abs_moment);
  r.abs_moment_finite = std::isfinite(r.cookie_abs_moment);

  // Weak ellipticity: every stack's first cookie can move right, and with
  // positive probability a whole stack can move left or stay.
  r.ellipticity_up = true;
  for (size_t i = 0; i < stacks_.size(); ++i) {
    if (m_ >= 1 && stacks_[i].cookies.front().mass_at_least(1) <= 0.0) {
      r.ellipticity_up = false;
      r.failures.push_back("stack " + std::to_string(i) +
                           " first cookie has no mass on [1, inf)");
    }
  }
  r.ellipticity_down = false;
  for (const auto& s : stacks_) {
    bool all_left = true;
    for (const auto& c : s.cookies) all_left = all_left && c.mass_at_most(0) > 0.0;
    if (all_left) {
      r.ellipticity_down = true;
      break;
    }
  }
  if (!r.ellipticity_down)
    r.failures.push_back("no stack lets all cookies move left or stay");

  return r;
}

int64_t EnvironmentLaw::background_bound() const {
  return background().max_abs_offset();
}

int64_t EnvironmentLaw::max_jump_bound() const {
  int64_t m = background_bound();
  for (const auto& s : stacks_) m = std::max(m, s.max_abs_jump());
  return m;
}

size_t EnvironmentLaw::pick_stack(uint64_t env_seed, int64_t site) const {
  if (stacks_.size() == 1) return 0;
  Rng rng(mix_seed(env_seed, zigzag64(site)));
  const double u = rng.u01();
  double cum = 0.0;
  for (size_t i = 0; i + 1 < weights_.size(); ++i) {
    cum += weights_[i];
    if (u < cum) return i;
  }
  return weights_.size() - 1;
}

EnvironmentLaw make_theta_family(double theta, uint64_t master_seed) {
  if (!(theta > 0.0) || !(theta < 1.0))
    throw std::invalid_argument("theta must lie in (0, 1)");
  CookieStack stack;
  stack.cookies = {JumpDistribution::make({{-1, 1.0 - theta}, {3, theta}})};
  stack.background = JumpDistribution::symmetric_pm1();
  return EnvironmentLaw::deterministic(std::move(stack), master_seed);
}

RealizedEnvironment::RealizedEnvironment(EnvironmentLaw law, uint64_t env_seed) {
  auto core = std::make_shared<Core>();
  core->M = law.M();
  core->background = law.background();
  core->max_jump_bound = law.max_jump_bound();
  core->law = std::move(law);
  core_ = std::move(core);
  env_seed_ = env_seed;
}

RealizedEnvironment RealizedEnvironment::quenched(
    JumpDistribution background, int64_t M,
    std::map<int64_t, CookieStack> sites) {
  auto core = std::make_shared<Core>();
  core->M = M;
  core->background = background;
  core->default_stack.cookies.assign(static_cast<size_t>(M), background);
  core->default_stack.background = background;
  int64_t bound = background.max_abs_offset();
  for (auto& [x, s] : sites) {
    if (s.depth() != M)
      throw std::invalid_argument("quenched stack depth must equal M");
    bound = std::max(bound, s.max_abs_jump());
  }
  core->max_jump_bound = bound;
  core->explicit_sites = std::move(sites);
  RealizedEnvironment env;
  env.core_ = std::move(core);
  return env;
}

const CookieStack& RealizedEnvironment::realize_site(int64_t x) {
  const Core& c = *core_;
  if (!c.law.has_value()) {
    auto it = c.explicit_sites.find(x);
    return it == c.explicit_sites.end() ? c.default_stack : it->second;
  }
  if (c.law->is_deterministic()) return c.law->stack(0);
  SiteState& s = run_.at(x);
  if (s.stack_idx < 0)
    s.stack_idx = static_cast<int32_t>(c.law->pick_stack(env_seed_, x));
  return c.law->stack(static_cast<size_t>(s.stack_idx));
}

int64_t RealizedEnvironment::removal_shift(int64_t x) const {
  if (core_->removal.empty()) return 0;
  auto it = core_->removal.find(x);
  return it == core_->removal.end() ? 0 : it->second;
}

const JumpDistribution& RealizedEnvironment::next_step_law(int64_t x, int64_t j) {
  if (j < 1) throw std::invalid_argument("visit index is 1-based");
  return realize_site(x).law_for_visit(removal_shift(x) + j);
}

const JumpDistribution& RealizedEnvironment::consume_step_law(int64_t x,
                                                              int64_t j) {
  const CookieStack& stack = realize_site(x);
  const int64_t idx = removal_shift(x) + j;
  if (idx <= core_->M) run_.at(x).eaten += 1;
  return stack.law_for_visit(idx);
}

void RealizedEnvironment::note_consumed(int64_t x, int64_t j) {
  if (removal_shift(x) + j <= core_->M) run_.at(x).eaten += 1;
}

int64_t RealizedEnvironment::consumed(int64_t x) const {
  const SiteState* s = run_.find(x);
  const int64_t eaten = s ? s->eaten : 0;
  return std::min<int64_t>(removal_shift(x) + eaten, core_->M);
}

RealizedEnvironment RealizedEnvironment::removed(
    const std::map<int64_t, int64_t>& counts) const {
  auto core = std::make_shared<Core>(*core_);
  for (const auto& [x, n] : counts) {
    if (n < 0) throw std::invalid_argument("removal counts must be non-negative");
    const int64_t combined = std::min<int64_t>(core->removal[x] + n, core->M);
    core->removal[x] = combined;
  }
  RealizedEnvironment env;
  env.core_ = std::move(core);
  env.env_seed_ = env_seed_;
  return env;
}

void RealizedEnvironment::reset_run() { run_.clear(); }

void RealizedEnvironment::reset_run(uint64_t new_env_seed) {
  run_.clear();
  env_seed_ = new_env_seed;
}

RealizedEnvironment RealizedEnvironment::fork_fresh() const {
  RealizedEnvironment env;
  env.core_ = core_;
  env.env_seed_ = env_seed_;
  return env;
}

RealizedEnvironment make_diagonal_escape_environment(int64_t depth) {
  if (depth < 2) throw std::invalid_argument("depth must be at least 2");
  const JumpDistribution bg = JumpDistribution::symmetric_pm1();
  std::map<int64_t, CookieStack> sites;
  for (int64_t x = -(depth + 1); x <= -2; ++x) {
    const double q = 1.0 / (static_cast<double>(x) * static_cast<double>(x));
    CookieStack s;
    s.cookies = {JumpDistribution::make({{-1, 1.0 - q}, {x * x - 1, q}})};
    s.background = bg;
    sites.emplace(x, std::move(s));
  }
  return RealizedEnvironment::quenched(bg, 1, std::move(sites));
}

double diagonal_escape_reference(RealizedEnvironment& env, int64_t depth) {
  long double p = 1.0L;
  for (int64_t n = 0; n < depth; ++n)
    p *= env.next_step_law(-n, 1).prob_at(-1);
  return static_cast<double>(p);
}

}  // namespace cookiewalk
