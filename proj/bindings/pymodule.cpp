#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cookiewalk/cep.hpp"
#include "cookiewalk/classifier.hpp"
#include "cookiewalk/config_io.hpp"
#include "cookiewalk/cookie_env.hpp"
#include "cookiewalk/exact_oracle.hpp"

namespace py = pybind11;
namespace cw = cookiewalk;
using nlohmann::json;

namespace {

cw::ExperimentConfig parse_text(const std::string& text) {
  return cw::parse_config(text, "<config>");
}

const cw::EnvironmentLaw& require_law(const cw::ExperimentConfig& cfg) {
  if (!cfg.law)
    throw std::invalid_argument("config has no law-backed environment block");
  return *cfg.law;
}

const cw::OracleInstance& require_instance(const cw::ExperimentConfig& cfg) {
  if (!cfg.instance) throw std::invalid_argument("config has no oracle block");
  return *cfg.instance;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Simulator and exact-solve toolkit for one-dimensional random walks "
      "whose first visits to each site consume stored drift. Heavy entry "
      "points accept the same JSON config text as the command-line tool and "
      "return JSON strings.";
  m.attr("__version__") = cw::kToolVersion;

  py::class_<cw::JumpDistribution>(m, "JumpDistribution")
      .def(py::init([](const std::vector<std::pair<int64_t, double>>& atoms) {
             return cw::JumpDistribution::make(atoms);
           }),
           py::arg("atoms"), "Build from [(offset, prob), ...]; renormalizes.")
      .def("mean", &cw::JumpDistribution::mean)
      .def("support_span", &cw::JumpDistribution::support_span)
      .def("reachable_lattice_gcd", &cw::JumpDistribution::reachable_lattice_gcd)
      .def("prob_at", &cw::JumpDistribution::prob_at, py::arg("offset"))
      .def("atoms",
           [](const cw::JumpDistribution& d) {
             std::vector<std::pair<int64_t, double>> out;
             for (const cw::Atom& a : d.atoms()) out.emplace_back(a.offset, a.prob);
             return out;
           })
      .def("sample_mean",
           [](const cw::JumpDistribution& d, int64_t draws, uint64_t seed) {
             cw::Rng rng(seed);
             long double sum = 0.0L;
             for (int64_t i = 0; i < draws; ++i) sum += d.sample(rng);
             return static_cast<double>(sum / static_cast<long double>(draws));
           },
           py::arg("draws"), py::arg("seed"),
           "Empirical mean of `draws` samples at a fixed seed.");

  m.def("delta_of_config", [](const std::string& text) {
    return require_law(parse_text(text)).delta();
  },
  py::arg("config_text"),
  "Exact per-site stored drift of the config's environment law.");

  m.def("validate_json", [](const std::string& text) {
    const cw::ExperimentConfig cfg = parse_text(text);
    json out = cw::assumption_report_to_json(require_law(cfg).validate());
    out["delta"] = cfg.law->delta();
    return out.dump();
  },
  py::arg("config_text"));

  m.def("solve_exit_json", [](const std::string& text) {
    const cw::ExperimentConfig cfg = parse_text(text);
    std::string out;
    {
      py::gil_scoped_release release;
      out = cw::exit_analysis_to_json(cw::solve_exit(require_instance(cfg)))
                .dump();
    }
    return out;
  },
  py::arg("config_text"));

  m.def("cross_validate_json",
        [](const std::string& text, int64_t replicas, uint64_t seed,
           int threads) {
          const cw::ExperimentConfig cfg = parse_text(text);
          const cw::OracleInstance& inst = require_instance(cfg);
          json rows = json::array();
          json out;
          {
            py::gil_scoped_release release;
            const cw::ValidationReport rep =
                cw::cross_validate(inst, replicas, seed, threads);
            for (const cw::CheckRow& r : rep.rows)
              rows.push_back({{"name", r.name},
                              {"exact", r.exact},
                              {"estimate", r.estimate},
                              {"se", r.se},
                              {"z", r.z}});
            out = json{{"rows", rows},
                       {"replicas", rep.replicas},
                       {"undecided", rep.undecided},
                       {"max_abs_z", rep.max_abs_z},
                       {"pass", rep.pass}};
          }
          return out.dump();
        },
        py::arg("config_text"), py::arg("replicas") = 20'000,
        py::arg("seed") = 1, py::arg("threads") = 1);

  m.def("classify_json",
        [](const std::string& text, int threads) {
          cw::ExperimentConfig cfg = parse_text(text);
          const cw::EnvironmentLaw& law = require_law(cfg);
          cfg.classify.threads = threads;
          std::string out;
          {
            py::gil_scoped_release release;
            out = cw::classification_to_json(cw::classify(law, cfg.classify))
                      .dump();
          }
          return out;
        },
        py::arg("config_text"), py::arg("threads") = 1);

  m.def("escape_curve_json",
        [](const std::string& text, int64_t horizon, int64_t replicas,
           uint64_t seed, int threads) {
          const cw::ExperimentConfig cfg = parse_text(text);
          const cw::EnvironmentLaw& law = require_law(cfg);
          json points = json::array();
          {
            py::gil_scoped_release release;
            for (const cw::EscapePoint& p : cw::estimate_escape_probability(
                     law, horizon, replicas, seed, threads))
              points.push_back({{"horizon", p.horizon},
                                {"beta_hat", p.beta_hat},
                                {"ci_lo", p.ci_lo},
                                {"ci_hi", p.ci_hi}});
          }
          return points.dump();
        },
        py::arg("config_text"), py::arg("horizon") = 10'000,
        py::arg("replicas") = 2'000, py::arg("seed") = 1,
        py::arg("threads") = 1);

  m.def("drift_at_origin_json",
        [](const std::string& text, int64_t frontier_n, int64_t lag,
           int64_t replicas, uint64_t seed, int threads) {
          const cw::ExperimentConfig cfg = parse_text(text);
          const cw::EnvironmentLaw& law = require_law(cfg);
          json out;
          {
            py::gil_scoped_release release;
            const cw::DriftAtOriginEstimate est =
                cw::estimate_consumed_drift_at_origin(law, frontier_n, lag,
                                                      replicas, seed, -1,
                                                      threads);
            out = json{{"mean", est.mean},
                       {"se", est.se},
                       {"replicas_used", est.replicas_used},
                       {"censored", est.censored},
                       {"censoring_flagged", est.censoring_flagged}};
          }
          return out.dump();
        },
        py::arg("config_text"), py::arg("frontier_n") = 1'000,
        py::arg("lag") = 20, py::arg("replicas") = 200, py::arg("seed") = 1,
        py::arg("threads") = 1);

  m.def("diagonal_escape_reference",
        [](int64_t depth) {
          cw::RealizedEnvironment env =
              cw::make_diagonal_escape_environment(depth);
          return cw::diagonal_escape_reference(env, depth);
        },
        py::arg("depth"),
        "Exact probability that the walk holds position = -step for `depth` "
        "steps in the bundled left-diagonal environment.");
}
