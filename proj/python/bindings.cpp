// Copyright (c) 2026 The crowdnav Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "crowdnav/collect.hpp"
#include "crowdnav/config.hpp"
#include "crowdnav/errors.hpp"
#include "crowdnav/evaluate.hpp"
#include "crowdnav/mpc.hpp"
#include "crowdnav/planner.hpp"
#include "crowdnav/runlog.hpp"
#include "crowdnav/uncertainty.hpp"

namespace py = pybind11;
using namespace crowdnav;

namespace
{

using Pair = std::pair<double, double>;

Vec2 v(const Pair& p) { return {p.first, p.second}; }
Pair p(const Vec2& x) { return {x.x, x.y}; }

std::vector<penn::GaussianPrediction> gaussians(const std::vector<Pair>& members)
{
  std::vector<penn::GaussianPrediction> out;
  for (const auto& [m, var] : members) out.push_back({m, var});
  return out;
}

py::dict metricsDict(const metrics::BatchMetrics& m)
{
  py::dict d;
  d["episodes"] = m.episodes;
  d["successes"] = m.successes;
  d["success_rate"] = m.success_rate;
  d["avg_time"] = m.avg_time;
  d["avg_path_length"] = m.avg_path_length;
  d["avg_time_success"] = m.avg_time_success ? py::cast(*m.avg_time_success) : py::none();
  d["avg_path_length_success"] = m.avg_path_length_success ? py::cast(*m.avg_path_length_success) : py::none();
  py::dict entry;
  py::dict time;
  for (auto z : metrics::kAllZones) {
    const std::string name(metrics::zoneName(z));
    entry[name.c_str()] = m.zone_entry_ratio[static_cast<std::size_t>(z)];
    time[name.c_str()] = m.zone_time_ratio[static_cast<std::size_t>(z)];
  }
  d["zone_entry_ratio"] = entry;
  d["zone_time_ratio"] = time;
  d["human_exposure"] = m.human_exposure;
  return d;
}

config::AppConfig configFrom(const std::string& path)
{
  return path.empty() ? config::parseConfig("", "<defaults>") : config::loadConfig(path);
}

}  // namespace

PYBIND11_MODULE(_crowdnav, m)
{
  m.doc() = "Crowd navigation workbench: heuristic and learned risk, CBF-MPC, Multi-RRT, metrics";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<FormatError>(m, "FormatError");
  py::register_exception<planner::NoPath>(m, "NoPath");

  m.def("psi", [](Pair x, Pair o, double eta) { return mpc::psi(v(x), v(o), eta); }, py::arg("x"),
        py::arg("obstacle"), py::arg("eta_safe"));
  m.def(
    "cbf_residual",
    [](Pair x0, Pair x1, Pair o0, Pair o1, double xi, double eta) {
      return mpc::cbfResidual(v(x0), v(x1), v(o0), v(o1), xi, eta);
    },
    py::arg("x_t"), py::arg("x_t1"), py::arg("obs_t"), py::arg("obs_t1"), py::arg("xi"), py::arg("eta_safe"));

  m.def(
    "solve_mpc",
    [](Pair x0, Pair target, const std::vector<std::pair<Pair, Pair>>& moving, const std::vector<double>& radii,
       int horizon, double dt, double v_max) {
      mpc::MpcConfig cfg;
      cfg.horizon = horizon;
      cfg.dt = dt;
      cfg.v_max = v_max;
      if (radii.size() != moving.size()) throw InvalidInput("one radius per obstacle");
      std::vector<mpc::ObstacleTrack> tracks;
      for (std::size_t i = 0; i < moving.size(); ++i) {
        tracks.push_back(mpc::extrapolate(v(moving[i].first), v(moving[i].second), radii[i], horizon, dt));
      }
      sim::RobotState r;
      r.position = v(x0);
      const auto sol = mpc::solve(mpc::buildProblem(r, v(target), tracks, cfg));
      py::dict d;
      std::vector<Pair> xs;
      std::vector<Pair> us;
      for (const auto& s : sol.states) xs.push_back(p(s));
      for (const auto& u : sol.controls) us.push_back(p(u));
      d["states"] = xs;
      d["controls"] = us;
      d["status"] = mpc::toString(sol.status);
      d["min_psi"] = sol.min_psi;
      d["cost"] = sol.cost;
      d["iterations"] = sol.iterations;
      return d;
    },
    "Solve the CBF-MPC problem. Obstacles are ((x, y), (vx, vy)) pairs moving at constant velocity.",
    py::arg("x0"), py::arg("target"), py::arg("obstacles") = std::vector<std::pair<Pair, Pair>>{},
    py::arg("radii") = std::vector<double>{}, py::arg("horizon") = 8, py::arg("dt") = 0.25, py::arg("v_max") = 1.0);

  m.def("var_gaussian", [](double mean, double var, double eps) { return uncertainty::varGaussian({mean, var}, eps); },
        py::arg("mean"), py::arg("variance"), py::arg("eps"));
  m.def("cvar_gaussian", [](double mean, double var, double eps) { return uncertainty::cvarGaussian({mean, var}, eps); },
        py::arg("mean"), py::arg("variance"), py::arg("eps"));
  m.def("epistemic_jrd", [](const std::vector<Pair>& mem) { return uncertainty::epistemicJrd(gaussians(mem)); },
        "Clamped Jensen-Renyi divergence of a uniform Gaussian mixture given (mean, variance) pairs.",
        py::arg("members"));
  m.def("epistemic_jrd_raw", [](const std::vector<Pair>& mem) { return uncertainty::epistemicJrdRaw(gaussians(mem)); },
        py::arg("members"));

  m.def(
    "plan",
    [](Pair start, Pair goal, const std::vector<std::tuple<double, double, double>>& obstacles, std::uint64_t seed,
       int budget) {
      planner::PlanRequest req;
      req.start = v(start);
      req.goal = v(goal);
      req.seed = seed;
      for (const auto& [x, y, r] : obstacles) req.obstacles.push_back({{x, y}, r});
      planner::PlannerParams params;
      params.budget = budget;
      std::vector<Pair> out;
      for (const auto& w : planner::plan(req, params).waypoints) out.push_back(p(w));
      return out;
    },
    py::arg("start"), py::arg("goal"), py::arg("obstacles") = std::vector<std::tuple<double, double, double>>{},
    py::arg("seed") = 0, py::arg("budget") = 20000);
  m.def(
    "current_guidance",
    [](const std::vector<Pair>& waypoints, Pair robot, double lookahead) {
      planner::GlobalPath path;
      for (const auto& w : waypoints) path.waypoints.push_back(v(w));
      return p(planner::currentGuidance(path, v(robot), lookahead));
    },
    py::arg("waypoints"), py::arg("robot"), py::arg("lookahead") = 3.0);

  m.def("zone_of_distance", [](double d) { return std::string(metrics::zoneName(metrics::zoneOfDistance(d, {}))); },
        py::arg("surface_distance"));

  m.def(
    "run_episode",
    [](const std::string& config_path, const std::string& cell, const std::string& policy_name, std::uint64_t seed,
       const std::string& model) {
      const auto cfg = configFrom(config_path);
      policy::PolicyConfig pc = cfg.policy;
      pc.kind = policy::policyKindFromString(policy_name);
      if (!model.empty()) pc.model_path = model;
      auto pol = policy::makePolicy(pc);
      sim::EpisodeOptions eo;
      eo.bands = cfg.bands;
      sim::EpisodeResult res;
      {
        py::gil_scoped_release release;
        res = sim::runEpisode(*pol, config::cellScenario(cfg, cell), seed, eo);
      }
      py::dict d;
      d["outcome"] = sim::toString(res.outcome);
      d["success"] = res.success;
      d["steps"] = res.steps;
      d["duration"] = res.duration;
      d["path_length"] = res.path_length;
      std::vector<Pair> robot;
      for (const auto& t : res.trajectory) robot.push_back(p(t.robot));
      d["robot_trajectory"] = robot;
      d["metrics"] = metricsDict(metrics::aggregate(std::span<const sim::EpisodeResult>(&res, 1)));
      return d;
    },
    py::arg("config") = "", py::arg("cell") = "open_aware", py::arg("policy") = "hr_mpc", py::arg("seed") = 1,
    py::arg("model") = "");

  m.def(
    "evaluate",
    [](const std::string& config_path, const std::vector<std::string>& policies, long episodes, std::uint64_t seed,
       const std::vector<std::string>& cells, const std::string& model) {
      auto cfg = configFrom(config_path);
      if (!model.empty()) cfg.policy.model_path = model;
      auto opts = evaluate::defaultOptions(cfg);
      opts.episodes = episodes;
      opts.seed = seed;
      if (!cells.empty()) opts.cells = cells;
      opts.policies.clear();
      for (const auto& s : policies) opts.policies.push_back(policy::policyKindFromString(s));
      std::vector<evaluate::BatchResult> res;
      {
        py::gil_scoped_release release;
        res = evaluate::runEvaluation(cfg, opts);
      }
      py::list out;
      for (const auto& r : res) {
        py::dict d = metricsDict(r.metrics);
        d["cell"] = r.cell;
        d["policy"] = policy::toString(r.policy);
        out.append(d);
      }
      return py::make_tuple(out, evaluate::metricsCsv(res));
    },
    "Returns (rows, metrics_csv_text).", py::arg("config") = "", py::arg("policies") = std::vector<std::string>{"hr_mpc"},
    py::arg("episodes") = 2, py::arg("seed") = 1, py::arg("cells") = std::vector<std::string>{},
    py::arg("model") = "");

  m.def(
    "collect_dataset",
    [](const std::string& config_path, long episodes, std::uint64_t seed, const std::filesystem::path& out_csv) {
      const auto cfg = configFrom(config_path);
      std::vector<sim::ScenarioConfig> cells;
      for (const auto& name : config::kMatrixCells) cells.push_back(config::cellScenario(cfg, name));
      data::Dataset ds;
      {
        py::gil_scoped_release release;
        ds = collect::collectDataset(cells, cfg.policy, episodes, seed);
      }
      data::writeDataset(ds, out_csv);
      return ds.samples.size();
    },
    py::arg("config"), py::arg("episodes"), py::arg("seed"), py::arg("out_csv"));

  m.def(
    "train",
    [](const std::filesystem::path& dataset, const std::filesystem::path& out_model, const std::string& config_path,
       int max_epochs, int members) {
      auto cfg = configFrom(config_path);
      if (max_epochs > 0) cfg.train.max_epochs = max_epochs;
      if (members > 0) cfg.train.members = members;
      const auto ds = data::readDataset(dataset);
      penn::TrainReport rep;
      penn::Ensemble ens;
      {
        py::gil_scoped_release release;
        ens = penn::train(ds, cfg.train, &rep);
      }
      penn::saveModel(ens, out_model);
      py::dict d;
      d["initial_val_nll"] = rep.initial_val_nll;
      d["final_val_nll"] = rep.final_val_nll;
      d["epochs_run"] = rep.epochs_run;
      return d;
    },
    py::arg("dataset"), py::arg("out_model"), py::arg("config") = "", py::arg("max_epochs") = 0, py::arg("members") = 0);

  m.def(
    "replay",
    [](const std::filesystem::path& log) {
      const auto parsed = runlog::readLog(log);
      runlog::ReplayReport rep;
      {
        py::gil_scoped_release release;
        rep = runlog::replay(parsed);
      }
      py::dict d;
      d["equal"] = rep.equal;
      d["steps_checked"] = rep.steps_checked;
      d["outcome"] = rep.outcome;
      d["first_mismatch_step"] = rep.first_mismatch_step ? py::cast(*rep.first_mismatch_step) : py::none();
      return d;
    },
    py::arg("log"));
}
