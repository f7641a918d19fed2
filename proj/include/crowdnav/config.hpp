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
#include <string>
#include <vector>

#include "crowdnav/penn.hpp"
#include "crowdnav/policy.hpp"
#include "crowdnav/world.hpp"
#include "crowdnav/zones.hpp"

/// INI run configuration shared by all commands.
namespace crowdnav::config
{

struct CollectConfig
{
  long episodes{100};
};

struct EvalConfig
{
  long episodes{50};
  std::vector<std::string> cells{"open_aware", "open_unaware", "obstacle_aware", "obstacle_unaware"};
  std::vector<policy::PolicyKind> policies{
    policy::PolicyKind::lr_mpc, policy::PolicyKind::hr_mpc, policy::PolicyKind::sf_baseline};
  // Added in the obstacle cells.
  sim::StaticObstacle central{{0.0, 0.0}, 1.0};
  bool write_logs{true};
};

struct AppConfig
{
  std::string source;  // file path or "<string>"
  std::string text;    // raw file contents, embedded in logs for replay
  std::uint64_t seed{1};
  sim::ScenarioConfig scenario;
  metrics::ZoneBands bands;
  policy::PolicyConfig policy;
  penn::TrainConfig train;
  CollectConfig collect;
  EvalConfig eval;
};

/// Parses INI text. Syntax errors, unknown keys and bad values throw
/// ConfigError naming the key and line.
AppConfig parseConfig(const std::string& text, const std::string& source = "<string>");

/// Throws ConfigError when the file cannot be read or parsed.
AppConfig loadConfig(const std::filesystem::path& path);

inline const std::vector<std::string> kMatrixCells{
  "open_aware", "open_unaware", "obstacle_aware", "obstacle_unaware"};

/// Scenario for a named matrix cell. Throws ConfigError on an unknown name.
sim::ScenarioConfig cellScenario(const AppConfig& cfg, const std::string& cell);

/// Index of a cell name in kMatrixCells, used to key episode seeds.
std::size_t cellIndex(const std::string& cell);

/// Policy names separated by commas.
std::vector<policy::PolicyKind> parsePolicyList(const std::string& s);

}  // namespace crowdnav::config
