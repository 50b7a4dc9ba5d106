#include "cookiewalk/config_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cookiewalk {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw std::invalid_argument(where + ": " + what);
}

const json& require(const json& obj, const char* key,
                    const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(where, std::string("missing field '") + key + "'");
  return *it;
}

int64_t as_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) fail(where, "expected an integer");
  return v.get<int64_t>();
}

double as_num(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  return v.get<double>();
}

CookieStack stack_from_json(const json& arr, const JumpDistribution& bg,
                            const std::string& where) {
  if (!arr.is_array()) fail(where, "expected an array of per-visit laws");
  CookieStack stack;
  stack.background = bg;
  size_t i = 0;
  for (const json& law : arr)
    stack.cookies.push_back(
        distribution_from_json(law, where + "[" + std::to_string(i++) + "]"));
  return stack;
}

EnvironmentLaw law_from_json(const json& env, uint64_t seed,
                             const std::string& where) {
  const int64_t M = as_int(require(env, "M", where), where + ".M");
  const JumpDistribution bg = distribution_from_json(
      require(env, "background", where), where + ".background");
  const json& gen = require(env, "generator", where);
  const std::string type =
      require(gen, "type", where + ".generator").get<std::string>();
  const std::string gw = where + ".generator";

  if (type == "theta_family") {
    const double theta = as_num(require(gen, "theta", gw), gw + ".theta");
    EnvironmentLaw law = make_theta_family(theta, seed);
    if (M != law.M()) fail(where + ".M", "theta_family has depth M=1");
    if (!(bg == law.background()))
      fail(where + ".background",
           "theta_family uses the symmetric +-1 background");
    return law;
  }

  std::vector<CookieStack> stacks;
  const json& js = require(gen, "stacks", gw);
  if (!js.is_array() || js.empty()) fail(gw + ".stacks", "expected a non-empty array");
  size_t i = 0;
  for (const json& s : js) {
    CookieStack stack =
        stack_from_json(s, bg, gw + ".stacks[" + std::to_string(i++) + "]");
    if (static_cast<int64_t>(stack.depth()) != M)
      fail(gw + ".stacks", "every stack must hold exactly M cookie laws");
    stacks.push_back(std::move(stack));
  }

  if (type == "deterministic") {
    if (stacks.size() != 1)
      fail(gw + ".stacks", "deterministic generator takes exactly one stack");
    return EnvironmentLaw::deterministic(std::move(stacks[0]), seed);
  }
  if (type == "iid_mixture") {
    std::vector<double> weights;
    for (const json& w : require(gen, "weights", gw))
      weights.push_back(as_num(w, gw + ".weights"));
    return EnvironmentLaw::iid_mixture(std::move(weights), std::move(stacks),
                                       seed);
  }
  fail(gw + ".type", "unknown generator type '" + type + "'");
}

OracleInstance instance_from_json(const json& obj, const std::string& where) {
  const json& interval = require(obj, "interval", where);
  if (!interval.is_array() || interval.size() != 2)
    fail(where + ".interval", "expected [lo, hi]");
  const int64_t lo = as_int(interval[0], where + ".interval[0]");
  const int64_t hi = as_int(interval[1], where + ".interval[1]");
  const int64_t start = as_int(require(obj, "start", where), where + ".start");
  const int64_t M = as_int(require(obj, "M", where), where + ".M");
  const JumpDistribution bg = distribution_from_json(
      require(obj, "background", where), where + ".background");

  std::map<int64_t, CookieStack> sites;
  const json& js = require(obj, "sites", where);
  if (!js.is_object())
    fail(where + ".sites", "expected an object keyed by site");
  for (const auto& [key, val] : js.items()) {
    int64_t x = 0;
    const auto [ptr, ec] =
        std::from_chars(key.data(), key.data() + key.size(), x);
    if (ec != std::errc() || ptr != key.data() + key.size())
      fail(where + ".sites", "site key '" + key + "' is not an integer");
    sites[x] = stack_from_json(val, bg, where + ".sites[" + key + "]");
  }
  return OracleInstance::make(lo, hi, start, M, bg, std::move(sites));
}

TruncationInfo truncation_from_json(const json& obj, const std::string& where) {
  TruncationInfo t;
  t.point = as_int(require(obj, "point", where), where + ".point");
  if (obj.contains("discarded_mass"))
    t.discarded_mass = as_num(obj["discarded_mass"], where + ".discarded_mass");
  if (obj.contains("max_offset_bound"))
    t.max_offset_bound =
        as_num(obj["max_offset_bound"], where + ".max_offset_bound");
  if (t.point < 0 || t.discarded_mass < 0 || t.max_offset_bound < 0)
    fail(where, "truncation fields must be non-negative");
  return t;
}

}  // namespace

uint64_t fnv1a64(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(uint64_t v) {
  char buf[17];
  for (int i = 15; i >= 0; --i) {
    buf[i] = "0123456789abcdef"[v & 0xf];
    v >>= 4;
  }
  buf[16] = '\0';
  return std::string(buf);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

JumpDistribution distribution_from_json(const json& pairs,
                                        const std::string& where) {
  if (!pairs.is_array() || pairs.empty())
    fail(where, "expected a non-empty array of [offset, prob] pairs");
  std::vector<std::pair<int64_t, double>> atoms;
  size_t i = 0;
  for (const json& pair : pairs) {
    const std::string at = where + "[" + std::to_string(i++) + "]";
    if (!pair.is_array() || pair.size() != 2) fail(at, "expected [offset, prob]");
    atoms.emplace_back(as_int(pair[0], at + "[0]"), as_num(pair[1], at + "[1]"));
  }
  return JumpDistribution::make(atoms);
}

json distribution_to_json(const JumpDistribution& d) {
  json out = json::array();
  for (const Atom& a : d.atoms()) out.push_back({a.offset, a.prob});
  return out;
}

RealizedEnvironment ExperimentConfig::realize_environment() const {
  if (diagonal_depth > 0)
    return make_diagonal_escape_environment(diagonal_depth);
  if (law.has_value()) return RealizedEnvironment(*law, seed);
  throw std::invalid_argument(name + ": config has no environment block");
}

std::vector<std::pair<double, EnvironmentLaw>> ExperimentConfig::sweep_family()
    const {
  if (!sweep.has_value())
    throw std::invalid_argument(name + ": config has no sweep block");
  if (sweep->parameter != "theta")
    throw std::invalid_argument(name + ": unknown sweep parameter '" +
                                sweep->parameter + "'");
  std::vector<std::pair<double, EnvironmentLaw>> family;
  for (const double theta : sweep->grid)
    family.emplace_back(theta, make_theta_family(theta, seed));
  return family;
}

ExperimentConfig parse_config(const std::string& text,
                              const std::string& origin) {
  ExperimentConfig cfg;
  cfg.source_text = text;
  cfg.config_hash = fnv1a64(text);
  cfg.name = origin;

  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(origin, e.what());  // nlohmann reports line/byte positions
  }
  if (!root.is_object()) fail(origin, "top level must be a JSON object");

  if (root.contains("name")) cfg.name = root["name"].get<std::string>();
  if (root.contains("seed"))
    cfg.seed = static_cast<uint64_t>(as_int(root["seed"], origin + ".seed"));

  if (root.contains("environment")) {
    const json& env = root["environment"];
    const std::string where = origin + ".environment";
    const std::string type =
        env.contains("type") ? env["type"].get<std::string>() : "law";
    if (type == "diagonal_escape") {
      cfg.diagonal_depth = as_int(require(env, "depth", where), where + ".depth");
    } else if (type == "law") {
      if (env.contains("seed"))
        cfg.seed = static_cast<uint64_t>(as_int(env["seed"], where + ".seed"));
      cfg.law = law_from_json(env, cfg.seed, where);
      if (env.contains("truncation"))
        cfg.truncation =
            truncation_from_json(env["truncation"], where + ".truncation");
    } else {
      fail(where + ".type", "unknown environment type '" + type + "'");
    }
  }

  if (root.contains("oracle"))
    cfg.instance = instance_from_json(root["oracle"], origin + ".oracle");

  if (root.contains("sweep")) {
    const json& sw = root["sweep"];
    const std::string where = origin + ".sweep";
    SweepSpec spec;
    if (sw.contains("parameter"))
      spec.parameter = sw["parameter"].get<std::string>();
    for (const json& g : require(sw, "grid", where))
      spec.grid.push_back(as_num(g, where + ".grid"));
    if (spec.grid.empty()) fail(where + ".grid", "grid must be non-empty");
    cfg.sweep = std::move(spec);
  }

  if (root.contains("classify")) {
    const json& cl = root["classify"];
    const std::string where = origin + ".classify";
    if (cl.contains("horizons")) {
      cfg.classify.horizons.clear();
      for (const json& h : cl["horizons"])
        cfg.classify.horizons.push_back(as_int(h, where + ".horizons"));
    }
    if (cl.contains("replicas"))
      cfg.classify.replicas = as_int(cl["replicas"], where + ".replicas");
    if (cl.contains("wilson_z"))
      cfg.classify.wilson_z = as_num(cl["wilson_z"], where + ".wilson_z");
    if (cl.contains("recurrent_return_threshold"))
      cfg.classify.recurrent_return_threshold = as_num(
          cl["recurrent_return_threshold"], where + ".recurrent_return_threshold");
  }

  if (root.contains("simulate")) {
    const json& sim = root["simulate"];
    const std::string where = origin + ".simulate";
    if (sim.contains("horizon"))
      cfg.simulate_horizon = as_int(sim["horizon"], where + ".horizon");
    if (sim.contains("replicas"))
      cfg.simulate_replicas = as_int(sim["replicas"], where + ".replicas");
  }

  if (root.contains("cep")) {
    const json& cep = root["cep"];
    const std::string where = origin + ".cep";
    if (cep.contains("frontier_n"))
      cfg.cep_frontier = as_int(cep["frontier_n"], where + ".frontier_n");
    if (cep.contains("lag")) cfg.cep_lag = as_int(cep["lag"], where + ".lag");
    if (cep.contains("replicas"))
      cfg.cep_replicas = as_int(cep["replicas"], where + ".replicas");
    if (cep.contains("max_steps"))
      cfg.cep_max_steps = as_int(cep["max_steps"], where + ".max_steps");
  }

  cfg.classify.seed = cfg.seed;  // after any environment-level override
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument(path + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

json artifact_stamp(const ExperimentConfig& cfg) {
  return json{{"tool_version", kToolVersion},
              {"config_hash", hex64(cfg.config_hash)},
              {"config_name", cfg.name},
              {"seed", cfg.seed}};
}

json assumption_report_to_json(const AssumptionReport& rep) {
  return json{{"cookie_drifts_nonneg", rep.cookie_drifts_nonneg},
              {"background_ok", rep.background_ok},
              {"abs_moment_finite", rep.abs_moment_finite},
              {"cookie_abs_moment", rep.cookie_abs_moment},
              {"iid_sites", rep.iid_sites},
              {"ellipticity_up", rep.ellipticity_up},
              {"ellipticity_down", rep.ellipticity_down},
              {"all_pass", rep.all_pass()},
              {"failures", rep.failures}};
}

json exit_analysis_to_json(const ExitAnalysis& res) {
  return json{{"p_up", res.p_up},
              {"exit_position_law", distribution_to_json(res.exit_position_law)},
              {"expected_exit_position", res.expected_exit_position()},
              {"expected_consumed_drift", res.expected_consumed_drift},
              {"expected_exit_time", res.expected_exit_time},
              {"stopping_residual", res.stopping_residual()},
              {"start", res.start},
              {"n_states", res.n_states},
              {"solver", res.solver},
              {"solve_residual", res.solve_residual}};
}

json classification_to_json(const ClassificationResult& res) {
  json escape = json::array();
  for (const EscapePoint& p : res.escape)
    escape.push_back({{"horizon", p.horizon},
                      {"beta_hat", p.beta_hat},
                      {"ci_lo", p.ci_lo},
                      {"ci_hi", p.ci_hi}});
  json returns = json::array();
  for (const auto& [h, f] : res.return_fraction)
    returns.push_back({{"horizon", h}, {"fraction", f}});
  json ladder = json::object();
  for (const auto& [fails, count] : res.ladder_histogram)
    ladder[std::to_string(fails)] = count;
  return json{{"verdict", verdict_label(res.verdict, res.boundary_flag)},
              {"boundary_flag", res.boundary_flag},
              {"delta", res.delta},
              {"theorem_prediction", verdict_name(res.theorem_prediction)},
              {"escape", escape},
              {"return_fraction", returns},
              {"ladder_histogram", ladder},
              {"censored", res.censored},
              {"replicas", res.replicas}};
}

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

CsvWriter::CsvWriter(std::ostream& os, const ExperimentConfig& cfg) : os_(os) {
  os_ << "# cookiewalk " << kToolVersion << " config=" << hex64(cfg.config_hash)
      << " seed=" << cfg.seed << "\n";
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) os_ << ',';
    os_ << csv_quote(fields[i]);
  }
  os_ << '\n';
}

}  // namespace cookiewalk
