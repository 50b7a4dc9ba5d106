#include "cookiewalk/exact_oracle.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "cookiewalk/parallel.hpp"
#include "cookiewalk/stats.hpp"
#include "cookiewalk/walk_engine.hpp"

namespace cookiewalk {

OracleInstance OracleInstance::make(int64_t lo, int64_t hi, int64_t start,
                                    int64_t M, JumpDistribution background,
                                    std::map<int64_t, CookieStack> stacks) {
  if (!(lo < start && start < hi))
    throw std::invalid_argument("instance requires lo < start < hi");
  if (M < 0) throw std::invalid_argument("cookie depth must be non-negative");
  OracleInstance inst;
  inst.lo = lo;
  inst.hi = hi;
  inst.start = start;
  inst.M = M;
  inst.background = background;
  CookieStack plain;
  plain.cookies.assign(static_cast<size_t>(M), background);
  plain.background = background;
  for (int64_t x = lo + 1; x < hi; ++x) {
    auto it = stacks.find(x);
    if (it == stacks.end()) {
      inst.stacks.emplace(x, plain);
      continue;
    }
    if (it->second.depth() != M)
      throw std::invalid_argument("stack depth must equal the instance M");
    inst.stacks.emplace(x, it->second);
  }
  return inst;
}

OracleInstance OracleInstance::from_environment(RealizedEnvironment& env,
                                                int64_t lo, int64_t hi,
                                                int64_t start) {
  std::map<int64_t, CookieStack> stacks;
  for (int64_t x = lo + 1; x < hi; ++x) {
    CookieStack s;
    s.background = env.background();
    for (int64_t j = 1; j <= env.M(); ++j)
      s.cookies.push_back(env.next_step_law(x, j));
    stacks.emplace(x, std::move(s));
  }
  return make(lo, hi, start, env.M(), env.background(), std::move(stacks));
}

RealizedEnvironment OracleInstance::as_environment() const {
  return RealizedEnvironment::quenched(background, M, stacks);
}

double OracleInstance::total_stack_drift() const {
  long double d = 0.0L;
  for (const auto& [x, s] : stacks) d += s.drift();
  return static_cast<double>(d);
}

StateIndexer::StateIndexer(int64_t width, int64_t M, int64_t state_budget)
    : width_(width), m_(M) {
  if (width < 1) throw std::invalid_argument("indexer needs at least one site");
  // Checking the budget before each multiply keeps the product from
  // overflowing no matter how wide the request is.
  signatures_ = 1;
  pow_.push_back(1);
  for (int64_t i = 0; i < width; ++i) {
    if (signatures_ > state_budget)
      throw std::length_error("state budget exceeded: more than " +
                              std::to_string(state_budget) +
                              " states required");
    signatures_ *= (M + 1);
    pow_.push_back(signatures_);
  }
  states_ = width_ * signatures_;
  if (states_ > state_budget)
    throw std::length_error("state budget exceeded: " +
                            std::to_string(states_) + " states > budget " +
                            std::to_string(state_budget));
}

int64_t StateIndexer::count_at(int64_t signature, int64_t site_index) const {
  return (signature / pow_[static_cast<size_t>(site_index)]) % (m_ + 1);
}

int64_t StateIndexer::bumped(int64_t signature, int64_t site_index) const {
  const int64_t c = count_at(signature, site_index);
  if (c >= m_) return signature;
  return signature + pow_[static_cast<size_t>(site_index)];
}

int64_t count_states(const OracleInstance& inst, int64_t state_budget) {
  // Sized in floating point first so oversized requests report their
  // count instead of overflowing.
  const double approx = static_cast<double>(inst.width()) *
                        std::pow(static_cast<double>(inst.M + 1),
                                 static_cast<double>(inst.width()));
  if (approx > static_cast<double>(state_budget)) {
    char msg[160];
    std::snprintf(msg, sizeof(msg),
                  "state budget exceeded: %.0f states > budget %lld", approx,
                  static_cast<long long>(state_budget));
    throw std::length_error(msg);
  }
  return StateIndexer(inst.width(), inst.M, state_budget).states();
}

namespace {

struct ChainSystem {
  Eigen::SparseMatrix<double> a;     // I - Q over transient states
  Eigen::MatrixXd rhs;               // exit columns | drift means | ones
  std::vector<int64_t> exit_positions;
  int64_t start_id = 0;
};

ChainSystem build_system(const OracleInstance& inst, const StateIndexer& ix) {
  const int64_t n = ix.states();
  std::vector<const CookieStack*> site_stacks;
  site_stacks.reserve(static_cast<size_t>(inst.width()));
  for (int64_t x = inst.lo + 1; x < inst.hi; ++x)
    site_stacks.push_back(&inst.stacks.at(x));

  // First pass: collect reachable absorbing positions.
  std::map<int64_t, int64_t> exit_col;
  for (const auto& [x, s] : inst.stacks) {
    for (int64_t j = 1; j <= inst.M + 1; ++j) {
      const JumpDistribution& law = s.law_for_visit(j);
      for (const auto& a : law.atoms()) {
        const int64_t land = x + a.offset;
        if (land <= inst.lo || land >= inst.hi) exit_col.emplace(land, 0);
      }
    }
  }
  int64_t col = 0;
  for (auto& [pos, c] : exit_col) c = col++;
  const int64_t k = col;

  ChainSystem sys;
  sys.exit_positions.reserve(static_cast<size_t>(k));
  for (const auto& [pos, c] : exit_col) sys.exit_positions.push_back(pos);

  std::vector<Eigen::Triplet<double>> triplets;
  sys.rhs = Eigen::MatrixXd::Zero(n, k + 2);
  for (int64_t id = 0; id < n; ++id) {
    const int64_t si = ix.site_index(id);
    const int64_t sig = ix.signature(id);
    const int64_t x = inst.lo + 1 + si;
    const int64_t c = ix.count_at(sig, si);
    const JumpDistribution& law = site_stacks[static_cast<size_t>(si)]->law_for_visit(c + 1);
    const int64_t sig_after = ix.bumped(sig, si);
    triplets.emplace_back(static_cast<int>(id), static_cast<int>(id), 1.0);
    for (const auto& atom : law.atoms()) {
      const int64_t land = x + atom.offset;
      if (land <= inst.lo || land >= inst.hi) {
        sys.rhs(id, exit_col.at(land)) += atom.prob;
      } else {
        const int64_t target = ix.id(land - inst.lo - 1, sig_after);
        triplets.emplace_back(static_cast<int>(id), static_cast<int>(target),
                              -atom.prob);
      }
    }
    sys.rhs(id, k) = law.mean();  // consumed drift per step from this state
    sys.rhs(id, k + 1) = 1.0;     // expected-time right-hand side
  }
  sys.a.resize(static_cast<int>(n), static_cast<int>(n));
  sys.a.setFromTriplets(triplets.begin(), triplets.end());
  sys.start_id = ix.id(inst.start - inst.lo - 1, 0);
  return sys;
}

double relative_residual(const Eigen::SparseMatrix<double>& a,
                         const Eigen::MatrixXd& x, const Eigen::MatrixXd& b) {
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  return (a * x - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

double ExitAnalysis::stopping_residual() const {
  return std::abs(expected_exit_position() - static_cast<double>(start) -
                  expected_consumed_drift);
}

ExitAnalysis solve_exit(const OracleInstance& inst, const SolveOptions& opt) {
  const StateIndexer ix(inst.width(), inst.M, opt.state_budget);
  const ChainSystem sys = build_system(inst, ix);
  const int64_t n = ix.states();

  Eigen::MatrixXd sol;
  std::string solver;
  if (n <= opt.dense_limit) {
    solver = "dense-lu";
    const Eigen::MatrixXd dense = Eigen::MatrixXd(sys.a);
    sol = Eigen::PartialPivLU<Eigen::MatrixXd>(dense).solve(sys.rhs);
  } else if (n <= opt.direct_limit) {
    solver = "sparse-lu";
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(sys.a);
    if (lu.info() != Eigen::Success)
      throw std::runtime_error("sparse factorization failed");
    sol = lu.solve(sys.rhs);
  } else {
    solver = "bicgstab-ilut";
    Eigen::BiCGSTAB<Eigen::SparseMatrix<double>,
                    Eigen::IncompleteLUT<double>>
        it(sys.a);
    it.setTolerance(1e-14);
    it.setMaxIterations(4000);
    sol = it.solve(sys.rhs);
    if (relative_residual(sys.a, sol, sys.rhs) > opt.residual_target) {
      // Direct fallback keeps the residual contract when iteration stalls.
      solver = "sparse-lu";
      Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(sys.a);
      if (lu.info() != Eigen::Success)
        throw std::runtime_error("sparse factorization failed");
      sol = lu.solve(sys.rhs);
    }
  }

  ExitAnalysis out;
  out.start = inst.start;
  out.n_states = n;
  out.solver = solver;
  out.solve_residual = relative_residual(sys.a, sol, sys.rhs);
  if (out.solve_residual > opt.residual_target)
    throw std::runtime_error("solve residual " +
                             std::to_string(out.solve_residual) +
                             " exceeds target");

  const int64_t k = static_cast<int64_t>(sys.exit_positions.size());
  std::vector<std::pair<int64_t, double>> exit_atoms;
  long double mass = 0.0L;
  double up = 0.0;
  for (int64_t c = 0; c < k; ++c) {
    const double p = sol(sys.start_id, c);
    mass += p;
    if (sys.exit_positions[static_cast<size_t>(c)] >= inst.hi) up += p;
    if (p > 0.0)
      exit_atoms.emplace_back(sys.exit_positions[static_cast<size_t>(c)], p);
  }
  if (std::abs(static_cast<double>(mass) - 1.0) > 1e-10)
    throw std::runtime_error("exit-law mass " +
                             std::to_string(static_cast<double>(mass)) +
                             " deviates from 1");
  // A probability by construction; the solve can leave it a rounding error
  // outside [0, 1].
  out.p_up = std::clamp(up, 0.0, 1.0);
  out.exit_position_law = JumpDistribution::make(exit_atoms);
  out.expected_consumed_drift = sol(sys.start_id, k);
  out.expected_exit_time = sol(sys.start_id, k + 1);
  return out;
}

ValidationReport cross_validate(const OracleInstance& inst, int64_t replicas,
                                uint64_t seed, int threads) {
  const ExitAnalysis exact = solve_exit(inst);
  const int64_t horizon = std::max<int64_t>(
      1000, static_cast<int64_t>(std::ceil(exact.expected_exit_time * 1e4)));

  struct Slot {
    int64_t exit_position = 0;
    int64_t exit_time = 0;
    double drift = 0.0;
    bool decided = false;
  };
  std::vector<Slot> slots(static_cast<size_t>(replicas));
  const RealizedEnvironment proto = inst.as_environment();
  parallel_chunks(replicas, threads, [&](int64_t begin, int64_t end) {
    RealizedEnvironment env = proto.fork_fresh();
    env.set_arena(inst.lo - env.max_jump_bound(),
                  inst.hi + env.max_jump_bound());
    for (int64_t i = begin; i < end; ++i) {
      env.reset_run();
      const PassageRecord rec =
          first_passage(env, inst.start, inst.hi, inst.lo, horizon,
                        mix_seed(seed, static_cast<uint64_t>(i)));
      Slot& s = slots[static_cast<size_t>(i)];
      s.decided = rec.side != ExitSide::Undecided;
      s.exit_position = rec.exit_position;
      s.exit_time = rec.exit_time;
      s.drift = rec.drift_at_exit;
    }
  });

  ValidationReport report;
  report.replicas = replicas;
  int64_t n_up = 0;
  OnlineStats drift, time;
  std::map<int64_t, int64_t> exit_counts;
  int64_t used = 0;
  for (const Slot& s : slots) {
    if (!s.decided) {
      ++report.undecided;
      continue;
    }
    ++used;
    if (s.exit_position >= inst.hi) ++n_up;
    drift.add(s.drift);
    time.add(static_cast<double>(s.exit_time));
    exit_counts[s.exit_position] += 1;
  }

  // Degenerate (zero-spread) statistics agree when they match the solve up
  // to its numerical noise floor; any real disagreement is far larger.
  constexpr double kSolveNoise = 1e-9;
  auto add_row = [&report](const std::string& name, double ex, double est,
                           double se) {
    report.rows.push_back({name, ex, est, se, z_score(est, ex, se, kSolveNoise)});
  };
  const double up_hat =
      used > 0 ? static_cast<double>(n_up) / static_cast<double>(used) : 0.0;
  add_row("p_up", exact.p_up, up_hat, binomial_se(exact.p_up, used));
  add_row("expected_consumed_drift", exact.expected_consumed_drift, drift.mean,
          drift.standard_error());
  add_row("expected_exit_time", exact.expected_exit_time, time.mean,
          time.standard_error());
  for (const auto& atom : exact.exit_position_law.atoms()) {
    const auto it = exit_counts.find(atom.offset);
    const double freq =
        used > 0 ? static_cast<double>(it == exit_counts.end() ? 0 : it->second) /
                       static_cast<double>(used)
                 : 0.0;
    add_row("exit_prob@" + std::to_string(atom.offset), atom.prob, freq,
            binomial_se(atom.prob, used));
    if (it != exit_counts.end()) exit_counts.erase(it);
  }
  for (const auto& [pos, cnt] : exit_counts)
    add_row("exit_prob@" + std::to_string(pos), 0.0,
            static_cast<double>(cnt) / static_cast<double>(used), 0.0);

  report.max_abs_z = 0.0;
  for (const auto& row : report.rows)
    report.max_abs_z = std::max(report.max_abs_z, std::abs(row.z));
  report.pass = report.undecided == 0 && report.max_abs_z <= 4.0;
  return report;
}

std::vector<OracleInstance> random_instance_suite(int64_t count,
                                                  uint64_t seed) {
  std::vector<OracleInstance> suite;
  suite.reserve(static_cast<size_t>(count));
  const std::vector<JumpDistribution> backgrounds = {
      JumpDistribution::symmetric_pm1(),
      JumpDistribution::make({{-1, 0.25}, {0, 0.5}, {1, 0.25}}),
      JumpDistribution::make(
          {{-2, 1.0 / 6}, {-1, 1.0 / 3}, {1, 1.0 / 3}, {2, 1.0 / 6}}),
      JumpDistribution::make(
          {{-2, 0.125}, {-1, 0.375}, {1, 0.375}, {2, 0.125}}),
  };

  for (int64_t idx = 0; idx < count; ++idx) {
    Rng rng(mix_seed(seed, static_cast<uint64_t>(idx)));
    const int64_t width = 2 + static_cast<int64_t>(rng.next() % 4);  // hi-lo
    const int64_t lo = -static_cast<int64_t>(rng.next() % 3) - 1;
    const int64_t hi = lo + width;
    const int64_t start = lo + 1 + static_cast<int64_t>(
                                       rng.next() % static_cast<uint64_t>(width - 1));
    const int64_t M = 1 + static_cast<int64_t>(rng.next() % 2);
    const JumpDistribution& bg =
        backgrounds[static_cast<size_t>(rng.next() % backgrounds.size())];

    auto random_cookie = [&rng]() {
      // 1-3 distinct offsets in [-2, 2]; flip signs if the mean came out
      // negative so every cookie drift is >= 0.
      const int n_atoms = 1 + static_cast<int>(rng.next() % 3);
      std::vector<int64_t> offsets = {-2, -1, 0, 1, 2};
      for (int i = 4; i > 0; --i)
        std::swap(offsets[static_cast<size_t>(i)],
                  offsets[rng.next() % static_cast<uint64_t>(i + 1)]);
      offsets.resize(static_cast<size_t>(n_atoms));
      std::vector<double> w;
      double sum = 0.0;
      for (int i = 0; i < n_atoms; ++i) {
        w.push_back(0.05 + rng.u01());
        sum += w.back();
      }
      std::vector<std::pair<int64_t, double>> atoms;
      double mean = 0.0;
      for (int i = 0; i < n_atoms; ++i) {
        atoms.emplace_back(offsets[static_cast<size_t>(i)], w[static_cast<size_t>(i)] / sum);
        mean += static_cast<double>(offsets[static_cast<size_t>(i)]) * w[static_cast<size_t>(i)] / sum;
      }
      if (mean < 0.0)
        for (auto& [z, p] : atoms) z = -z;
      return JumpDistribution::make(atoms);
    };

    std::map<int64_t, CookieStack> stacks;
    for (int64_t x = lo + 1; x < hi; ++x) {
      CookieStack s;
      s.background = bg;
      for (int64_t j = 0; j < M; ++j) s.cookies.push_back(random_cookie());
      stacks.emplace(x, std::move(s));
    }
    suite.push_back(OracleInstance::make(lo, hi, start, M, bg, std::move(stacks)));
  }
  return suite;
}

}  // namespace cookiewalk
