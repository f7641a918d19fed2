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

#include "crowdnav/evaluate.hpp"

#include <fstream>
#include <sstream>

#include "crowdnav/collect.hpp"
#include "crowdnav/errors.hpp"
#include "crowdnav/parallel.hpp"
#include "crowdnav/runlog.hpp"

namespace crowdnav::evaluate
{

EvalOptions defaultOptions(const config::AppConfig& cfg)
{
  EvalOptions o;
  o.cells = cfg.eval.cells;
  o.policies = cfg.eval.policies;
  o.episodes = cfg.eval.episodes;
  o.seed = cfg.seed;
  o.workers = workersFromEnv(1);
  return o;
}

std::vector<BatchResult> runEvaluation(
  const config::AppConfig& cfg, const EvalOptions& opts, std::shared_ptr<const penn::Ensemble> model)
{
  if (opts.episodes <= 0) throw InvalidInput("episodes must be positive");
  const bool need_model =
    std::find(opts.policies.begin(), opts.policies.end(), policy::PolicyKind::lr_mpc) != opts.policies.end();
  if (need_model && !model) {
    if (cfg.policy.model_path.empty()) throw ConfigError("lr_mpc requires a model (eval.model or --model)");
    model = policy::loadPolicyModel(cfg.policy.model_path);
  }
  const std::string model_path =
    cfg.policy.model_path.empty() ? "" : std::filesystem::absolute(cfg.policy.model_path).string();

  std::vector<BatchResult> out;
  for (const auto& cell : opts.cells) {
    const auto scenario = config::cellScenario(cfg, cell);
    const auto cell_idx = config::cellIndex(cell);
    for (const auto kind : opts.policies) {
      BatchResult br;
      br.cell = cell;
      br.policy = kind;
      br.episodes.resize(static_cast<std::size_t>(opts.episodes));
      policy::PolicyConfig pc = cfg.policy;
      pc.kind = kind;
      parallelFor(br.episodes.size(), opts.workers, [&](std::size_t k) {
        const std::uint64_t seed = collect::episodeSeed(opts.seed, cell_idx, k);
        sim::EpisodeOptions eo;
        eo.bands = cfg.bands;
        eo.record_trajectory = opts.keep_trajectories;
        std::ofstream log_file;
        std::unique_ptr<runlog::EpisodeLogger> logger;
        std::filesystem::path log_path;
        try {
          auto pol = policy::makePolicy(pc, kind == policy::PolicyKind::lr_mpc ? model : nullptr);
          if (opts.log_dir) {
            log_path = runlog::logPath(*opts.log_dir, cell, kind, static_cast<long>(k));
            std::filesystem::create_directories(log_path.parent_path());
            log_file.open(log_path, std::ios::binary | std::ios::trunc);
            if (!log_file) throw std::runtime_error("cannot write " + log_path.string());
            runlog::LogHeader h{cell, kind, static_cast<long>(k), seed, cfg.source, cfg.text, model_path};
            logger = std::make_unique<runlog::EpisodeLogger>(log_file, h);
            if (auto* rp = dynamic_cast<policy::RiskMpcPolicy*>(pol.get())) rp->setTraceSink(logger->sink());
            eo.observer = logger.get();
          }
          br.episodes[k] = sim::runEpisode(*pol, scenario, seed, eo);
        } catch (const std::exception& e) {
          sim::EpisodeResult failed;
          failed.outcome = sim::Outcome::timeout;
          failed.diagnostic = std::string("episode failed: ") + e.what();
          br.episodes[k] = std::move(failed);
        }
      });
      br.metrics = metrics::aggregate(br.episodes);
      out.push_back(std::move(br));
    }
  }
  return out;
}

std::string metricsCsv(const std::vector<BatchResult>& results)
{
  std::string s = metrics::metricsCsvHeader() + "\n";
  for (const auto& r : results) {
    s += metrics::metricsCsvRow(r.cell, policy::toString(r.policy), r.metrics) + "\n";
  }
  return s;
}

void writeManifest(const RunManifest& m, const std::filesystem::path& path)
{
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["config"] = m.config_path;
  j["seeds"] = m.seeds;
  j["artifacts"] = m.artifacts;
  j["tool_version"] = m.tool_version;
  j["wall_time_s"] = m.wall_time_s;
  j["extra"] = m.extra;
  writeFileAtomic(path, j.dump(2) + "\n");
}

RunManifest readManifest(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("manifest is not valid JSON: ") + e.what());
  }
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.config_path = j.at("config").get<std::string>();
  m.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
  m.artifacts = j.at("artifacts").get<std::vector<std::string>>();
  m.tool_version = j.at("tool_version").get<std::string>();
  m.wall_time_s = j.at("wall_time_s").get<double>();
  m.extra = j.at("extra");
  return m;
}

void writeFileAtomic(const std::filesystem::path& path, const std::string& content)
{
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace crowdnav::evaluate
