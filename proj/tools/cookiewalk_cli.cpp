#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cookiewalk/cep.hpp"
#include "cookiewalk/classifier.hpp"
#include "cookiewalk/config_io.hpp"
#include "cookiewalk/cookie_env.hpp"
#include "cookiewalk/exact_oracle.hpp"
#include "cookiewalk/parallel.hpp"
#include "cookiewalk/stats.hpp"
#include "cookiewalk/walk_engine.hpp"

namespace cw = cookiewalk;
using nlohmann::json;

namespace {

constexpr int kExitAssumptionFailure = 2;

struct Flags {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<int64_t> replicas;
  std::optional<int64_t> horizon;
  int threads = 1;
  std::string out;
  bool skip_invalid = false;
  std::string format;  // per-command default when empty
};

void add_common_flags(CLI::App* sub, Flags& flags) {
  sub->add_option("--config", flags.config_path, "Experiment config (JSON)")
      ->required();
  sub->add_option("--seed", flags.seed, "Master seed (overrides config)");
  sub->add_option("--replicas", flags.replicas,
                  "Replica count (overrides config)");
  sub->add_option("--horizon", flags.horizon,
                  "Top horizon / frontier level (overrides config)");
  sub->add_option("--threads", flags.threads, "Worker threads")
      ->check(CLI::PositiveNumber);
  sub->add_option("--out", flags.out, "Artifact output path");
  sub->add_flag("--skip-invalid", flags.skip_invalid,
                "Continue past assumption failures instead of exiting 2");
  sub->add_option("--format", flags.format, "Artifact format")
      ->check(CLI::IsMember({"csv", "json"}));
}

cw::ExperimentConfig load_with_overrides(const Flags& flags) {
  cw::ExperimentConfig cfg = cw::load_config(flags.config_path);
  if (flags.seed) {
    cfg.seed = *flags.seed;
    cfg.classify.seed = *flags.seed;
  }
  if (flags.replicas) {
    cfg.classify.replicas = *flags.replicas;
    cfg.simulate_replicas = *flags.replicas;
    cfg.cep_replicas = *flags.replicas;
  }
  if (flags.horizon) {
    cfg.simulate_horizon = *flags.horizon;
    cfg.cep_frontier = *flags.horizon;
    // For classification the override caps the ladder and becomes its top.
    std::vector<int64_t> capped;
    for (const int64_t h : cfg.classify.horizons)
      if (h < *flags.horizon) capped.push_back(h);
    capped.push_back(*flags.horizon);
    cfg.classify.horizons = std::move(capped);
  }
  cfg.classify.threads = flags.threads;
  return cfg;
}

// Writes `text` to flags.out, or to stdout when no path was given.
void emit_artifact(const Flags& flags, const std::string& text) {
  if (flags.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(flags.out, std::ios::binary);
  if (!out) throw std::invalid_argument(flags.out + ": cannot open for writing");
  out << text;
}

void print_truncation(const cw::ExperimentConfig& cfg) {
  if (!cfg.truncation) return;
  const cw::TruncationInfo& t = *cfg.truncation;
  const int64_t M = cfg.law ? cfg.law->M() : 0;
  std::cout << "truncation: point=" << t.point
            << " discarded_mass=" << cw::format_double(t.discarded_mass)
            << " delta_bias_bound="
            << cw::format_double(t.delta_bias_bound(M)) << "\n";
}

void print_report(const cw::AssumptionReport& rep) {
  const auto line = [](bool ok, const char* what) {
    std::cout << (ok ? "  [ok]   " : "  [FAIL] ") << what << "\n";
  };
  line(rep.cookie_drifts_nonneg, "cookie drifts non-negative");
  line(rep.background_ok, "background zero-mean, aperiodic, non-degenerate");
  line(rep.abs_moment_finite, "cookie first moment finite");
  line(rep.iid_sites, "sites identically and independently generated");
  line(rep.ellipticity_up, "first cookie can move right at every site");
  line(rep.ellipticity_down, "some stack can always move left");
  for (const std::string& f : rep.failures) std::cout << "  -> " << f << "\n";
}

// Validates the law-backed environment; returns the exit code to use (0
// to continue) and prints the report when it fails.
int gate_assumptions(const cw::ExperimentConfig& cfg, const Flags& flags) {
  if (!cfg.law) return 0;  // quenched environments carry no generative law
  const cw::AssumptionReport rep = cfg.law->validate();
  if (rep.all_pass()) return 0;
  std::cout << "assumption failures in " << cfg.name << ":\n";
  print_report(rep);
  if (flags.skip_invalid) {
    std::cout << "continuing (--skip-invalid)\n";
    return 0;
  }
  return kExitAssumptionFailure;
}

int run_validate(const Flags& flags) {
  const cw::ExperimentConfig cfg = load_with_overrides(flags);
  if (!cfg.law) {
    if (cfg.diagonal_depth > 0) {
      std::cout << "quenched diagonal-escape environment (depth "
                << cfg.diagonal_depth
                << "): no generative law to validate\n";
      return 0;
    }
    throw std::invalid_argument(cfg.name + ": config has no environment block");
  }
  const cw::AssumptionReport rep = cfg.law->validate();
  std::cout << "config: " << cfg.name << "\n"
            << "M = " << cfg.law->M()
            << ", stacks = " << cfg.law->stack_count()
            << ", max jump bound = " << cfg.law->max_jump_bound() << "\n"
            << "delta = " << cw::format_double(cfg.law->delta()) << "\n";
  print_truncation(cfg);
  print_report(rep);

  if (!flags.out.empty() || flags.format == "json") {
    json artifact = cw::assumption_report_to_json(rep);
    artifact["stamp"] = cw::artifact_stamp(cfg);
    artifact["delta"] = cfg.law->delta();
    if (cfg.truncation) {
      artifact["truncation_point"] = cfg.truncation->point;
      artifact["delta_bias_bound"] =
          cfg.truncation->delta_bias_bound(cfg.law->M());
    }
    emit_artifact(flags, artifact.dump(2) + "\n");
  }

  if (rep.all_pass()) {
    std::cout << "all assumptions hold\n";
    return 0;
  }
  return flags.skip_invalid ? 0 : kExitAssumptionFailure;
}

int run_oracle(const Flags& flags) {
  const cw::ExperimentConfig cfg = load_with_overrides(flags);
  if (!cfg.instance)
    throw std::invalid_argument(cfg.name + ": config has no oracle block");
  const cw::OracleInstance& inst = *cfg.instance;
  const cw::ExitAnalysis res = cw::solve_exit(inst);

  std::cout << "instance: interval (" << inst.lo << ", " << inst.hi
            << "), start " << inst.start << ", M " << inst.M << "\n"
            << "states = " << res.n_states << " (" << res.solver << ")\n"
            << "p_up = " << cw::format_double(res.p_up) << "\n"
            << "expected_exit_position = "
            << cw::format_double(res.expected_exit_position()) << "\n"
            << "expected_consumed_drift = "
            << cw::format_double(res.expected_consumed_drift) << "\n"
            << "expected_exit_time = "
            << cw::format_double(res.expected_exit_time) << "\n"
            << "stopping_residual = "
            << cw::format_double(res.stopping_residual()) << "\n"
            << "solve_residual = " << cw::format_double(res.solve_residual)
            << "\n";

  json artifact = cw::exit_analysis_to_json(res);
  artifact["stamp"] = cw::artifact_stamp(cfg);
  if (!flags.out.empty()) emit_artifact(flags, artifact.dump(2) + "\n");
  return 0;
}

struct SimSlot {
  int64_t final_position = 0;
  double martingale = 0.0;
  double consumed_drift = 0.0;
  bool returned = false;  // ever strictly below the start
  bool all_left = true;   // held position == -step throughout
};

int run_simulate(const Flags& flags) {
  const cw::ExperimentConfig cfg = load_with_overrides(flags);
  if (!cfg.has_environment())
    throw std::invalid_argument(cfg.name + ": config has no environment block");
  if (const int rc = gate_assumptions(cfg, flags)) return rc;

  const int64_t horizon = cfg.simulate_horizon;
  const int64_t replicas = cfg.simulate_replicas;
  const bool diagonal = cfg.diagonal_depth > 0;

  if (flags.format == "csv") {
    // Trajectory dump of replica 0: step, position, visit_index,
    // consumed_drift.
    cw::RealizedEnvironment env = cfg.realize_environment();
    if (cfg.law) env.reset_run(cw::mix_seed(cfg.seed, 0));
    cw::WalkState walk(0, cw::mix_seed(cfg.seed, 1));
    std::ostringstream os;
    cw::CsvWriter csv(os, cfg);
    csv.row({"step", "position", "visit_index", "consumed_drift"});
    for (int64_t n = 1; n <= horizon; ++n) {
      walk.step(env);
      csv.row({std::to_string(n), std::to_string(walk.position()),
               std::to_string(walk.local_time(walk.position())),
               cw::format_double(walk.consumed_drift())});
    }
    emit_artifact(flags, os.str());
    return 0;
  }

  std::vector<SimSlot> slots(static_cast<size_t>(replicas));
  const cw::RealizedEnvironment proto = cfg.realize_environment();
  cw::parallel_chunks(replicas, flags.threads, [&](int64_t begin, int64_t end) {
    cw::RealizedEnvironment env = proto.fork_fresh();
    cw::WalkState walk(0, 0);
    const int64_t lo = diagonal ? -(cfg.diagonal_depth + 2) : -4096;
    const int64_t hi = std::min<int64_t>(
        horizon * std::max<int64_t>(env.max_jump_bound(), 1) + 8, 1 << 21);
    env.set_arena(lo, hi);
    walk.set_arena(lo, hi);
    for (int64_t i = begin; i < end; ++i) {
      env.reset_run(cw::mix_seed(cfg.seed, (static_cast<uint64_t>(i) << 1) | 0));
      walk.reset(0, cw::mix_seed(cfg.seed, (static_cast<uint64_t>(i) << 1) | 1));
      SimSlot& s = slots[static_cast<size_t>(i)];
      s = SimSlot{};
      for (int64_t n = 1; n <= horizon; ++n) {
        walk.step(env);
        if (walk.position() < 0 && !s.returned) s.returned = true;
        if (walk.position() != -n) s.all_left = false;
      }
      s.final_position = walk.position();
      s.martingale = walk.martingale();
      s.consumed_drift = walk.consumed_drift();
    }
  });

  cw::OnlineStats pos, mart, drift;
  int64_t returned = 0, all_left = 0;
  for (const SimSlot& s : slots) {
    pos.add(static_cast<double>(s.final_position));
    mart.add(s.martingale);
    drift.add(s.consumed_drift);
    returned += s.returned ? 1 : 0;
    all_left += s.all_left ? 1 : 0;
  }

  std::cout << "config: " << cfg.name << "\n"
            << "replicas = " << replicas << ", horizon = " << horizon << "\n"
            << "mean_final_position = " << cw::format_double(pos.mean)
            << " (se " << cw::format_double(pos.standard_error()) << ")\n"
            << "mean_martingale = " << cw::format_double(mart.mean) << " (se "
            << cw::format_double(mart.standard_error()) << ")\n"
            << "mean_consumed_drift = " << cw::format_double(drift.mean) << "\n"
            << "return_fraction = "
            << cw::format_double(static_cast<double>(returned) /
                                 static_cast<double>(replicas))
            << "\n";

  json artifact{{"stamp", cw::artifact_stamp(cfg)},
                {"replicas", replicas},
                {"horizon", horizon},
                {"mean_final_position", pos.mean},
                {"final_position_se", pos.standard_error()},
                {"mean_martingale", mart.mean},
                {"martingale_se", mart.standard_error()},
                {"mean_consumed_drift", drift.mean},
                {"return_fraction", static_cast<double>(returned) /
                                        static_cast<double>(replicas)}};
  if (cfg.truncation && cfg.law) {
    artifact["truncation_point"] = cfg.truncation->point;
    artifact["delta_bias_bound"] =
        cfg.truncation->delta_bias_bound(cfg.law->M());
  }

  if (diagonal) {
    cw::RealizedEnvironment ref_env = proto.fork_fresh();
    const int64_t depth = std::min<int64_t>(horizon, cfg.diagonal_depth);
    const double reference = cw::diagonal_escape_reference(ref_env, depth);
    const double frac =
        static_cast<double>(all_left) / static_cast<double>(replicas);
    const double se = cw::binomial_se(reference, replicas);
    std::cout << "all_left_fraction = " << cw::format_double(frac)
              << " (exact " << cw::format_double(reference) << ", z = "
              << cw::format_double(cw::z_score(frac, reference, se)) << ")\n";
    artifact["all_left_fraction"] = frac;
    artifact["all_left_exact"] = reference;
  }

  if (!flags.out.empty()) emit_artifact(flags, artifact.dump(2) + "\n");
  return 0;
}

int run_classify(const Flags& flags) {
  const cw::ExperimentConfig cfg = load_with_overrides(flags);
  if (!cfg.law)
    throw std::invalid_argument(cfg.name +
                                ": classify needs a law-backed environment");
  if (const int rc = gate_assumptions(cfg, flags)) return rc;

  const cw::ClassificationResult res = cw::classify(*cfg.law, cfg.classify);

  std::cout << "config: " << cfg.name << "\n"
            << "delta = " << cw::format_double(res.delta)
            << " (prediction: " << cw::verdict_name(res.theorem_prediction)
            << ")\n";
  print_truncation(cfg);
  std::cout << "verdict = " << cw::verdict_label(res.verdict, res.boundary_flag)
            << "\n"
            << "replicas = " << res.replicas
            << ", censored at top horizon = " << res.censored << "\n";
  for (const cw::EscapePoint& p : res.escape)
    std::cout << "  horizon " << p.horizon
              << ": escape " << cw::format_double(p.beta_hat) << " ["
              << cw::format_double(p.ci_lo) << ", "
              << cw::format_double(p.ci_hi) << "]\n";
  for (const auto& [h, f] : res.return_fraction)
    std::cout << "  horizon " << h << ": returned "
              << cw::format_double(f) << "\n";

  if (!flags.out.empty()) {
    json artifact = cw::classification_to_json(res);
    artifact["stamp"] = cw::artifact_stamp(cfg);
    emit_artifact(flags, artifact.dump(2) + "\n");
  }
  return 0;
}

std::string sweep_csv(const cw::ExperimentConfig& cfg,
                      const std::vector<cw::SweepRow>& rows) {
  std::ostringstream os;
  cw::CsvWriter csv(os, cfg);
  std::vector<std::string> header = {"parameter", "delta", "beta_hat",
                                     "beta_ci_lo", "beta_ci_hi"};
  for (size_t k = 1; k <= cfg.classify.horizons.size(); ++k)
    header.push_back("return_frac_h" + std::to_string(k));
  header.push_back("verdict");
  header.push_back("censored_count");
  csv.row(header);

  for (const cw::SweepRow& row : rows) {
    std::vector<std::string> fields = {cw::format_double(row.parameter),
                                       cw::format_double(row.delta)};
    if (row.skipped) {
      fields.push_back("");  // beta_hat
      fields.push_back("");  // beta_ci_lo
      fields.push_back("");  // beta_ci_hi
      for (size_t k = 0; k < cfg.classify.horizons.size(); ++k)
        fields.push_back("");
      fields.push_back("Skipped(" + row.skip_reason + ")");
      fields.push_back("");
    } else {
      const cw::EscapePoint& top = row.result.escape.back();
      fields.push_back(cw::format_double(top.beta_hat));
      fields.push_back(cw::format_double(top.ci_lo));
      fields.push_back(cw::format_double(top.ci_hi));
      for (const auto& [h, f] : row.result.return_fraction)
        fields.push_back(cw::format_double(f));
      fields.push_back(
          cw::verdict_label(row.result.verdict, row.result.boundary_flag));
      fields.push_back(std::to_string(row.result.censored));
    }
    csv.row(fields);
  }
  return os.str();
}

int run_sweep(const Flags& flags) {
  cw::ExperimentConfig cfg = load_with_overrides(flags);
  const auto family = cfg.sweep_family();

  // The gate runs per point inside delta_sweep; invalid points become
  // skipped rows. Without --skip-invalid their presence fails the run.
  const std::vector<cw::SweepRow> rows = cw::delta_sweep(family, cfg.classify);

  const std::string csv = sweep_csv(cfg, rows);
  emit_artifact(flags, csv);

  bool any_skipped = false;
  if (!flags.out.empty()) {
    // Artifact went to a file; give the terminal a short summary.
    bool monotone = true;
    double prev_beta = -1.0;
    for (const cw::SweepRow& row : rows) {
      if (row.skipped) {
        any_skipped = true;
        std::cout << "parameter " << cw::format_double(row.parameter)
                  << ": skipped (" << row.skip_reason << ")\n";
        continue;
      }
      const double beta = row.result.escape.back().beta_hat;
      if (beta < prev_beta) monotone = false;
      prev_beta = beta;
      std::cout << "parameter " << cw::format_double(row.parameter)
                << ": delta " << cw::format_double(row.delta) << " -> "
                << cw::verdict_label(row.result.verdict,
                                     row.result.boundary_flag)
                << "\n";
    }
    std::cout << "escape probability monotone non-decreasing in delta: "
              << (monotone ? "yes" : "no") << "\n"
              << "wrote " << flags.out << "\n";
  } else {
    for (const cw::SweepRow& row : rows) any_skipped |= row.skipped;
  }

  if (any_skipped && !flags.skip_invalid) return kExitAssumptionFailure;
  return 0;
}

int run_cep(const Flags& flags) {
  const cw::ExperimentConfig cfg = load_with_overrides(flags);
  if (!cfg.law)
    throw std::invalid_argument(cfg.name +
                                ": cep needs a law-backed environment");
  if (const int rc = gate_assumptions(cfg, flags)) return rc;

  const int64_t n = cfg.cep_frontier;
  const int64_t lag = cfg.cep_lag;

  std::ostringstream csv_text;
  std::optional<cw::CsvWriter> csv;
  std::function<void(const cw::FrontierSample&)> sink_fn;
  const std::function<void(const cw::FrontierSample&)>* sink = nullptr;
  if (flags.format == "csv") {
    csv.emplace(csv_text, cfg);
    csv->row({"replica", "frontier_n", "overshoot", "D_plus",
              "D_origin_lagged"});
    sink_fn = [&](const cw::FrontierSample& s) {
      csv->row({std::to_string(s.replica), std::to_string(s.level),
                std::to_string(s.overshoot), cw::format_double(s.drift_right),
                s.has_lag ? cw::format_double(s.lagged_site_drift) : ""});
    };
    sink = &sink_fn;
  }

  const cw::CepStatistics stats =
      cw::collect_cep(*cfg.law, n, lag, cfg.cep_replicas, cfg.seed,
                      cfg.cep_max_steps, flags.threads, sink);

  const double rate_se = stats.right_rate.standard_error();
  const double origin_se = stats.drift_at_origin.standard_error();
  std::cout << "config: " << cfg.name << "\n"
            << "frontier_n = " << n << ", lag = " << lag
            << ", replicas = " << cfg.cep_replicas << "\n"
            << "right_drift_rate = "
            << cw::format_double(stats.right_rate.mean) << " (se "
            << cw::format_double(rate_se) << ")\n"
            << "drift_at_origin_lagged = "
            << cw::format_double(stats.drift_at_origin.mean) << " (se "
            << cw::format_double(origin_se) << ")\n"
            << "censored_replicas = " << stats.censored_replicas
            << (stats.censored_replicas * 100 > cfg.cep_replicas
                    ? " (flagged: censoring above 1%)"
                    : "")
            << "\n";

  if (flags.format == "csv") {
    emit_artifact(flags, csv_text.str());
  } else if (!flags.out.empty()) {
    json overshoot = json::object();
    for (const auto& [o, c] : stats.overshoot_histogram)
      overshoot[std::to_string(o)] = c;
    json artifact{{"stamp", cw::artifact_stamp(cfg)},
                  {"frontier_n", n},
                  {"lag", lag},
                  {"replicas", cfg.cep_replicas},
                  {"right_drift_rate", stats.right_rate.mean},
                  {"right_drift_rate_se", rate_se},
                  {"drift_at_origin_lagged", stats.drift_at_origin.mean},
                  {"drift_at_origin_se", origin_se},
                  {"frontier_observations", stats.frontier_observations},
                  {"censored_replicas", stats.censored_replicas},
                  {"overshoot_histogram", overshoot}};
    emit_artifact(flags, artifact.dump(2) + "\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cookiewalk: simulator and exact-solve toolkit for "
               "multi-visit self-interacting random walks"};
  app.require_subcommand(1);

  Flags flags;
  int rc = 0;
  const auto attach = [&](const char* name, const char* help, auto runner) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common_flags(sub, flags);
    sub->callback([&flags, &rc, runner] { rc = runner(flags); });
    return sub;
  };

  attach("validate", "Check model assumptions and report the drift parameter",
         run_validate);
  attach("simulate", "Run replicas to a fixed horizon and summarize",
         run_simulate);
  attach("classify", "Estimate recurrence/transience at growing horizons",
         run_classify);
  attach("sweep", "Classify a parameterized family across a grid", run_sweep);
  attach("oracle", "Exactly solve a bounded-interval instance", run_oracle);
  attach("cep", "Frontier statistics: overshoot, consumed drift, lagged site "
                "drift", run_cep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
