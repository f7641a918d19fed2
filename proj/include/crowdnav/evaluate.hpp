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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crowdnav/config.hpp"
#include "crowdnav/metrics.hpp"

/// Batch evaluation over the scenario matrix, and run manifests.
namespace crowdnav::evaluate
{

struct BatchResult
{
  std::string cell;
  policy::PolicyKind policy{policy::PolicyKind::hr_mpc};
  metrics::BatchMetrics metrics;
  std::vector<sim::EpisodeResult> episodes;
};

struct EvalOptions
{
  std::vector<std::string> cells;
  std::vector<policy::PolicyKind> policies;
  long episodes{50};
  std::uint64_t seed{1};
  int workers{1};
  // Per-episode JSONL logs go under this directory when set.
  std::optional<std::filesystem::path> log_dir;
  bool keep_trajectories{false};
};

/// Options taken from the [eval] section and the root seed.
EvalOptions defaultOptions(const config::AppConfig& cfg);

/// Runs every (cell, policy) batch. Episode k of a cell uses the same seed,
/// hence the same crowd, for every policy. Episodes run on a worker pool and
/// are reduced in index order. A failing episode is recorded as a timeout
/// with a diagnostic and the batch continues. Returns rows in (cell, policy)
/// order. `model` is required when lr_mpc is requested and no model path is set.
std::vector<BatchResult> runEvaluation(
  const config::AppConfig& cfg, const EvalOptions& opts,
  std::shared_ptr<const penn::Ensemble> model = nullptr);

/// Header plus one metrics row per batch.
std::string metricsCsv(const std::vector<BatchResult>& results);

inline constexpr const char* kToolVersion = "0.1.0";

struct RunManifest
{
  std::string command;
  std::string config_path;
  std::map<std::string, std::uint64_t> seeds;
  std::vector<std::string> artifacts;
  std::string tool_version{kToolVersion};
  double wall_time_s{0.0};
  // Command-specific extras, e.g. early-stop epochs.
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();
};

void writeManifest(const RunManifest& m, const std::filesystem::path& path);
RunManifest readManifest(const std::filesystem::path& path);

/// Writes `content` to `path` through a temporary file and a rename, so a
/// failed run never leaves a partial artifact behind.
void writeFileAtomic(const std::filesystem::path& path, const std::string& content);

}  // namespace crowdnav::evaluate
