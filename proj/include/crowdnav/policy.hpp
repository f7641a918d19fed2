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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "crowdnav/episode.hpp"
#include "crowdnav/mpc.hpp"
#include "crowdnav/penn.hpp"
#include "crowdnav/planner.hpp"
#include "crowdnav/risk.hpp"
#include "crowdnav/uncertainty.hpp"

/// Navigation policies: learned-risk MPC, heuristic-risk MPC and a
/// social-force robot baseline.
namespace crowdnav::policy
{

enum class PolicyKind
{
  lr_mpc,
  hr_mpc,
  sf_baseline
};

std::string toString(PolicyKind k);
/// Throws ConfigError on an unknown name.
PolicyKind policyKindFromString(const std::string& s);

struct CandidateGeometry
{
  std::vector<double> radii{1.5, 3.0};
  int per_ring{12};
  // Append the global guidance waypoint to the local samples.
  bool include_guidance{true};
};

struct PolicyConfig
{
  PolicyKind kind{PolicyKind::hr_mpc};
  std::filesystem::path model_path;
  risk::HeuristicParams heuristic;
  uncertainty::FilterThresholds thresholds;
  mpc::MpcConfig mpc;
  CandidateGeometry candidates;
  double lookahead{3.0};
  // Humans (nearest first) that get barrier rows.
  int tracked_humans{6};
  // Solutions whose barrier violation exceeds this are not executed.
  double slack_threshold{0.05};
  planner::ReplanOptions planner;
  // Run the global planner on a background thread instead of in lockstep.
  bool async_planner{false};
  sim::SfParams sf;
};

/// Throws ConfigError on inconsistent settings.
void validate(const PolicyConfig& cfg);

enum class Fallback
{
  none,
  guidance,
  min_heuristic,
  zero_velocity,
  solver
};

std::string toString(Fallback f);

struct DecisionTrace
{
  double time{0.0};
  Vec2 guidance;
  std::uint64_t path_stamp{0};
  std::shared_ptr<const planner::GlobalPath> path;
  std::vector<risk::CandidateWaypoint> candidates;
  // Heuristic scores; filled for every candidate by HR-MPC, and by LR-MPC
  // only when a fallback needed them.
  std::vector<risk::RiskBreakdown> heuristic;
  std::vector<penn::EnsemblePrediction> predictions;
  std::optional<uncertainty::FilterReport> filter;
  std::optional<std::size_t> selected;
  std::optional<Vec2> target;
  Fallback fallback{Fallback::none};
  std::optional<mpc::SolveStatus> mpc_status;
  int mpc_iterations{0};
  double mpc_min_psi{0.0};
  double mpc_cost{0.0};
  double mpc_max_slack{0.0};
  std::vector<mpc::ObstacleTrack> tracks;
  std::vector<Vec2> planned_states;
  Vec2 control;
};

struct Decision
{
  Vec2 control;
  DecisionTrace trace;
  std::optional<mpc::MpcSolution> solution;
};

/// Static obstacles plus the `tracked_humans` nearest visible humans, each
/// extrapolated at constant velocity over the horizon.
std::vector<mpc::ObstacleTrack> buildTracks(const sim::Snapshot& snap, const PolicyConfig& cfg);

/// Local ring samples followed by the guidance waypoint.
std::vector<risk::CandidateWaypoint> makeCandidates(
  const sim::Snapshot& snap, const Vec2& guidance, const PolicyConfig& cfg);

/// Index of the smallest total risk; ties go to the smaller goal distance, then
/// the lower index.
std::size_t argminRisk(
  const std::vector<risk::CandidateWaypoint>& cands, const std::vector<risk::RiskBreakdown>& scores,
  const Vec2& goal);

Decision decideHr(
  const sim::Snapshot& snap, const Vec2& guidance, const PolicyConfig& cfg,
  const mpc::MpcSolution* warm_start = nullptr);

Decision decideLr(
  const sim::Snapshot& snap, const Vec2& guidance, const PolicyConfig& cfg,
  const penn::Ensemble& model, const mpc::MpcSolution* warm_start = nullptr);

/// Treats the robot as a social-force agent heading for the episode goal.
Vec2 decideSf(const sim::Snapshot& snap, const sim::SfParams& sf, double dt);

/// Previous solution advanced by one step, for warm starting.
mpc::MpcSolution shiftSolution(const mpc::MpcSolution& sol);

using TraceSink = std::function<void(const DecisionTrace&)>;

/// HR-MPC or LR-MPC with its own global planner.
class RiskMpcPolicy : public sim::NavigationPolicy
{
public:
  /// `model` is required for lr_mpc.
  RiskMpcPolicy(PolicyConfig cfg, std::shared_ptr<const penn::Ensemble> model = nullptr);

  std::string name() const override { return toString(cfg_.kind); }
  void reset(const sim::WorldState& initial, std::uint64_t seed) override;
  Vec2 act(const sim::Snapshot& snap) override;

  void setTraceSink(TraceSink sink) { sink_ = std::move(sink); }
  const PolicyConfig& config() const { return cfg_; }

private:
  PolicyConfig cfg_;
  std::shared_ptr<const penn::Ensemble> model_;
  std::unique_ptr<planner::GuidanceSource> planner_;
  std::optional<mpc::MpcSolution> warm_;
  TraceSink sink_;
};

class SocialForcePolicy : public sim::NavigationPolicy
{
public:
  explicit SocialForcePolicy(sim::SfParams sf = {}) : sf_(sf) {}
  std::string name() const override { return toString(PolicyKind::sf_baseline); }
  void reset(const sim::WorldState& initial, std::uint64_t /*seed*/) override { dt_ = initial.dt; }
  Vec2 act(const sim::Snapshot& snap) override { return decideSf(snap, sf_, dt_); }

private:
  sim::SfParams sf_;
  double dt_{0.25};
};

/// Loads the model for lr_mpc when none is given. Throws ConfigError when the
/// model cannot be read or does not match the feature layout.
std::unique_ptr<sim::NavigationPolicy> makePolicy(
  const PolicyConfig& cfg, std::shared_ptr<const penn::Ensemble> model = nullptr);

/// Reads and checks a model file, mapping failures to ConfigError.
std::shared_ptr<const penn::Ensemble> loadPolicyModel(const std::filesystem::path& path);

}  // namespace crowdnav::policy
