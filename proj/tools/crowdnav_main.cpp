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

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "crowdnav/collect.hpp"
#include "crowdnav/config.hpp"
#include "crowdnav/errors.hpp"
#include "crowdnav/evaluate.hpp"
#include "crowdnav/parallel.hpp"
#include "crowdnav/runlog.hpp"

namespace fs = std::filesystem;
using namespace crowdnav;

namespace
{

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Common
{
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<long> episodes;
  std::string out;
};

config::AppConfig loadWithOverrides(const Common& c)
{
  config::AppConfig cfg = c.config.empty() ? config::parseConfig("", "<defaults>") : config::loadConfig(c.config);
  if (c.seed) {
    cfg.seed = *c.seed;
    cfg.train.seed = *c.seed;
  }
  return cfg;
}

double secondsSince(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmdCollect(const Common& c)
{
  const auto t0 = std::chrono::steady_clock::now();
  auto cfg = loadWithOverrides(c);
  const long episodes = c.episodes.value_or(cfg.collect.episodes);
  if (episodes <= 0) throw ConfigError("--episodes must be positive");
  std::vector<sim::ScenarioConfig> cells;
  for (const auto& name : config::kMatrixCells) cells.push_back(config::cellScenario(cfg, name));
  collect::CollectStats stats;
  const auto ds = collect::collectDataset(cells, cfg.policy, episodes, cfg.seed, workersFromEnv(1), &stats);

  const fs::path out(c.out);
  fs::create_directories(out);
  const fs::path csv = out / "dataset.csv";
  data::writeDataset(ds, csv);
  evaluate::RunManifest m;
  m.command = "collect";
  m.config_path = c.config;
  m.seeds["root"] = cfg.seed;
  m.artifacts = {csv.string(), data::metaPath(csv).string()};
  m.extra["episodes"] = episodes;
  m.extra["decisions"] = stats.decisions;
  m.extra["samples"] = ds.samples.size();
  m.wall_time_s = secondsSince(t0);
  evaluate::writeManifest(m, out / "manifest.json");
  std::cout << "samples: " << ds.samples.size() << "\n";
  return kExitOk;
}

int cmdTrain(const Common& c, const std::string& dataset_path)
{
  const auto t0 = std::chrono::steady_clock::now();
  auto cfg = loadWithOverrides(c);
  if (c.episodes) cfg.train.max_epochs = static_cast<int>(*c.episodes);
  const auto ds = data::readDataset(dataset_path);
  if (cfg.train.widths.empty() || static_cast<std::size_t>(cfg.train.widths.front()) != ds.feature_dim) {
    throw InvalidInput(
      "dataset feature dimension " + std::to_string(ds.feature_dim) + " does not match model input dimension " +
      std::to_string(cfg.train.widths.empty() ? 0 : cfg.train.widths.front()));
  }
  cfg.train.workers = workersFromEnv(1);
  penn::TrainReport rep;
  const auto ens = penn::train(ds, cfg.train, &rep);

  const fs::path out(c.out);
  fs::create_directories(out);
  const fs::path model = out / "model.json";
  const fs::path curve = out / "training_curve.csv";
  penn::saveModel(ens, model);
  std::ostringstream cs;
  cs << "member,epoch,train_nll,val_nll,lr\n";
  for (const auto& r : rep.curve) {
    cs << r.member << ',' << r.epoch << ',' << metrics::formatDouble(r.train_nll) << ','
       << metrics::formatDouble(r.val_nll) << ',' << metrics::formatDouble(r.lr) << '\n';
  }
  evaluate::writeFileAtomic(curve, cs.str());

  evaluate::RunManifest m;
  m.command = "train";
  m.config_path = c.config;
  m.seeds["root"] = cfg.seed;
  m.artifacts = {model.string(), curve.string()};
  m.extra["dataset"] = dataset_path;
  m.extra["early_stop_epochs"] = rep.epochs_run;
  m.extra["best_epochs"] = rep.best_epoch;
  m.extra["initial_val_nll"] = rep.initial_val_nll;
  m.extra["final_val_nll"] = rep.final_val_nll;
  m.wall_time_s = secondsSince(t0);
  evaluate::writeManifest(m, out / "manifest.json");
  for (std::size_t j = 0; j < rep.epochs_run.size(); ++j) {
    std::cout << "member " << j << ": epochs " << rep.epochs_run[j] << ", val NLL "
              << metrics::formatDouble(rep.initial_val_nll[j]) << " -> " << metrics::formatDouble(rep.final_val_nll[j])
              << "\n";
  }
  return kExitOk;
}

int cmdEval(const Common& c, const std::string& policies, const std::string& model, bool no_logs)
{
  const auto t0 = std::chrono::steady_clock::now();
  auto cfg = loadWithOverrides(c);
  if (!model.empty()) cfg.policy.model_path = model;
  auto opts = evaluate::defaultOptions(cfg);
  if (c.episodes) opts.episodes = *c.episodes;
  if (!policies.empty()) opts.policies = config::parsePolicyList(policies);
  if (opts.episodes <= 0) throw ConfigError("--episodes must be positive");
  std::shared_ptr<const penn::Ensemble> ens;
  if (std::find(opts.policies.begin(), opts.policies.end(), policy::PolicyKind::lr_mpc) != opts.policies.end()) {
    if (cfg.policy.model_path.empty()) throw ConfigError("lr_mpc needs --model or eval.model");
    ens = policy::loadPolicyModel(cfg.policy.model_path);
  }
  const fs::path out(c.out);
  fs::create_directories(out);
  if (!no_logs && cfg.eval.write_logs) opts.log_dir = out / "logs";
  const auto results = evaluate::runEvaluation(cfg, opts, ens);
  const fs::path csv = out / "metrics.csv";
  evaluate::writeFileAtomic(csv, evaluate::metricsCsv(results));

  evaluate::RunManifest m;
  m.command = "eval";
  m.config_path = c.config;
  m.seeds["root"] = opts.seed;
  m.artifacts.push_back(csv.string());
  long failed = 0;
  for (const auto& br : results) {
    for (std::size_t k = 0; k < br.episodes.size(); ++k) {
      if (opts.log_dir) {
        m.artifacts.push_back(runlog::logPath(*opts.log_dir, br.cell, br.policy, static_cast<long>(k)).string());
      }
      if (!br.episodes[k].diagnostic.empty()) {
        ++failed;
        std::cerr << br.cell << "/" << policy::toString(br.policy) << " episode " << k << ": "
                  << br.episodes[k].diagnostic << "\n";
      }
    }
  }
  m.extra["episodes_per_cell"] = opts.episodes;
  m.extra["failed_episodes"] = failed;
  if (!cfg.policy.model_path.empty()) m.extra["model"] = cfg.policy.model_path.string();
  m.wall_time_s = secondsSince(t0);
  evaluate::writeManifest(m, out / "manifest.json");
  std::cout << evaluate::metricsCsv(results);
  return kExitOk;
}

int cmdReplay(const std::string& log_path, const std::string& model, const std::string& out, const std::string& exp)
{
  const auto log = runlog::readLog(fs::path(log_path));
  std::shared_ptr<const penn::Ensemble> ens;
  if (!model.empty()) ens = policy::loadPolicyModel(model);
  const auto rep = runlog::replay(log, ens);
  std::ostringstream trace;
  runlog::writeTraceCsv(trace, rep.traces);
  if (out.empty()) {
    std::cout << trace.str();
  } else {
    evaluate::writeFileAtomic(out, trace.str());
  }
  if (!exp.empty()) {
    const auto cfg = config::parseConfig(log.header.config_text, log.header.config_source);
    const auto world = sim::makeWorld(config::cellScenario(cfg, log.header.cell), log.header.seed);
    std::ostringstream tj;
    runlog::writeTrajectoryCsv(tj, rep.result, world, cfg.bands);
    evaluate::writeFileAtomic(exp, tj.str());
  }
  if (!rep.equal) {
    std::cerr << "replay mismatch at step " << rep.first_mismatch_step.value_or(-1);
    if (rep.first_mismatch_line) std::cerr << " (log line " << *rep.first_mismatch_line << ")";
    std::cerr << "\n";
    return kExitRuntime;
  }
  std::cerr << "replay equal: " << rep.steps_checked << " steps, outcome " << rep.outcome << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Crowd navigation workbench: risk dataset collection, ensemble training, evaluation and replay"};
  app.require_subcommand(1);
  Common common;
  std::uint64_t seed = 0;
  long episodes = 0;

  auto addCommon = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", common.config, "INI configuration file");
    if (config_required) opt->required();
    sub->add_option("--seed", seed, "root seed (overrides seeds.root)");
    sub->add_option("--out", common.out, "output directory")->required();
  };

  auto* collect = app.add_subcommand("collect", "run heuristic-risk episodes and write a risk dataset");
  addCommon(collect, true);
  collect->add_option("--episodes", episodes, "number of episodes");

  std::string dataset;
  auto* train = app.add_subcommand("train", "train the probabilistic ensemble on a dataset");
  addCommon(train, false);
  train->add_option("--dataset", dataset, "dataset CSV")->required();
  train->add_option("--episodes", episodes, "override train.max_epochs");

  std::string policies;
  std::string model;
  bool no_logs = false;
  auto* eval = app.add_subcommand("eval", "evaluate policies over the scenario matrix");
  addCommon(eval, true);
  eval->add_option("--episodes", episodes, "episodes per cell");
  eval->add_option("--policies", policies, "comma-separated: lr_mpc,hr_mpc,sf_baseline");
  eval->add_option("--model", model, "trained model for lr_mpc");
  eval->add_flag("--no-logs", no_logs, "skip per-episode logs");

  std::string log_path;
  std::string trace_out;
  std::string export_path;
  auto* replay = app.add_subcommand("replay", "re-simulate a logged episode and check it step by step");
  replay->add_option("log", log_path, "episode log (.jsonl)")->required();
  replay->add_option("--model", model, "model override for lr_mpc logs");
  replay->add_option("--out", trace_out, "decision trace CSV (default stdout)");
  replay->add_option("--export", export_path, "plot-ready trajectory and zone CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  auto* active = app.get_subcommands().front();
  if (const auto* o = active->get_option_no_throw("--seed"); o != nullptr && o->count() > 0) common.seed = seed;
  if (const auto* o = active->get_option_no_throw("--episodes"); o != nullptr && o->count() > 0) {
    common.episodes = episodes;
  }

  try {
    if (collect->parsed()) return cmdCollect(common);
    if (train->parsed()) return cmdTrain(common, dataset);
    if (eval->parsed()) return cmdEval(common, policies, model, no_logs);
    if (replay->parsed()) return cmdReplay(log_path, model, trace_out, export_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
