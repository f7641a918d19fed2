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
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crowdnav/config.hpp"
#include "crowdnav/episode.hpp"
#include "crowdnav/policy.hpp"

/// Per-episode JSON-lines logs and their replay.
///
/// Line kinds, in order: one "header", one "start", then per control step an
/// optional "path" (new global path), an optional "decision" and a "step";
/// finally one "result". A log without its result line is truncated.
namespace crowdnav::runlog
{

inline constexpr int kLogVersion = 1;
inline constexpr const char* kLogFormat = "crowdnav-episode-log";

struct LogHeader
{
  std::string cell;
  policy::PolicyKind policy{policy::PolicyKind::hr_mpc};
  long episode{0};
  std::uint64_t seed{0};
  std::string config_source;
  std::string config_text;
  std::string model_path;
};

nlohmann::ordered_json toJson(const policy::DecisionTrace& tr);

/// Writes one log while an episode runs. Attach to a RiskMpcPolicy with
/// sink() so decisions land in the log.
class EpisodeLogger : public sim::EpisodeObserver
{
public:
  EpisodeLogger(std::ostream& out, LogHeader header);

  policy::TraceSink sink();
  void onStart(const sim::WorldState& initial) override;
  void onStep(const sim::Snapshot& snap, const Vec2& cmd, const sim::WorldState& after) override;
  void onEnd(const sim::EpisodeResult& result) override;

private:
  void write(const nlohmann::ordered_json& j);

  std::ostream& out_;
  LogHeader header_;
  std::optional<policy::DecisionTrace> pending_;
  std::uint64_t last_stamp_{0};
};

struct LoggedStep
{
  long step{0};
  double time{0.0};
  Vec2 robot;
  Vec2 cmd;
  int line{0};
};

struct ParsedLog
{
  LogHeader header;
  std::vector<LoggedStep> steps;
  std::vector<nlohmann::json> decisions;
  nlohmann::json result;
};

/// Throws FormatError pointing at the first malformed line, or at the line
/// after the last one when the result record is missing.
ParsedLog readLog(std::istream& in);
ParsedLog readLog(const std::filesystem::path& path);

struct ReplayReport
{
  bool equal{true};
  long steps_checked{0};
  // First step whose command differs from the log, with its log line.
  std::optional<long> first_mismatch_step;
  std::optional<int> first_mismatch_line;
  std::string outcome;
  std::vector<policy::DecisionTrace> traces;
  sim::EpisodeResult result;
};

/// Re-simulates the episode from the embedded config and seed and compares
/// every command bit for bit. `model` overrides the logged model path.
ReplayReport replay(const ParsedLog& log, std::shared_ptr<const penn::Ensemble> model = nullptr);

/// One row per decision: time, selected target, fallback, solver telemetry, control.
void writeTraceCsv(std::ostream& out, const std::vector<policy::DecisionTrace>& traces);

/// Long-format trajectory table: one row per agent per step, humans tagged
/// with their proxemic zone.
void writeTrajectoryCsv(
  std::ostream& out, const sim::EpisodeResult& result, const sim::WorldState& initial,
  const metrics::ZoneBands& bands);

/// Log file path inside an evaluation output directory.
std::filesystem::path logPath(
  const std::filesystem::path& dir, const std::string& cell, policy::PolicyKind policy, long episode);

}  // namespace crowdnav::runlog
