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

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "crowdnav/geometry.hpp"
#include "crowdnav/world.hpp"

/// Heuristic waypoint risk: path clearance, head-on orientation, goal distance
/// and goal-direction misalignment, plus the fixed-length feature encoding that
/// the learned risk model consumes.
namespace crowdnav::risk
{

enum class CandidateSource
{
  local_sample,
  global_guidance
};

struct CandidateWaypoint
{
  Vec2 position;
  CandidateSource source{CandidateSource::local_sample};
  std::optional<double> risk;
  std::optional<bool> passed_filters;
};

struct HeuristicParams
{
  double lambda_dist{1.0};
  // Keeps the inverse-distance term finite at zero clearance.
  double eps_d{0.1};
  double lambda_dir{2.0};
  int samples_per_segment{8};
  double risk_max{100.0};
};

void validate(const HeuristicParams& params);

struct RiskBreakdown
{
  double path{0.0};
  double orientation{0.0};
  double goal_dist{0.0};
  double dir_penalty{0.0};
  double total{0.0};
  bool collision{false};
};

inline constexpr std::size_t kFeatureHumans = 5;
inline constexpr std::size_t kFeaturesPerHuman = 6;
inline constexpr std::size_t kFeatureDim = 9 + kFeatureHumans * kFeaturesPerHuman;
static_assert(kFeatureDim == 39);

using FeatureVector = std::array<double, kFeatureDim>;

// Clearance reported when nothing is in view.
inline constexpr double kEmptyClearance = 1e6;
// Obstacle distances in the feature vector saturate here.
inline constexpr double kFeatureFarDistance = 10.0;

/// Candidates on concentric rings around the robot: for each radius, `n_ring`
/// angles starting at 0 rad. Throws InvalidInput if a radius exceeds the sensing range.
std::vector<CandidateWaypoint> sampleCandidates(
  const sim::Snapshot& snap, int n_ring, std::span<const double> radii);

/// `n` equally spaced points from `from` (exclusive) to `to` (inclusive).
std::vector<Vec2> segmentSamples(const Vec2& from, const Vec2& to, int n);

/// Surface distance from `p` to the nearest visible human or static obstacle;
/// negative inside a disc, kEmptyClearance when nothing is in view.
double nearestClearance(const sim::Snapshot& snap, const Vec2& p);

struct PathRisk
{
  double value{0.0};
  // Some sample point lies strictly inside a human or obstacle disc.
  bool collision{false};
};

PathRisk pathRisk(const sim::Snapshot& snap, const Vec2& p, const HeuristicParams& params);

double orientationRisk(const sim::Snapshot& snap, const Vec2& p, const HeuristicParams& params);

double goalDist(const Vec2& p, const Vec2& goal);

double dirPenalty(const Vec2& robot_pos, const Vec2& p, const Vec2& goal, double lambda_dir);

/// Sum of the four terms, or risk_max when the segment to `p` collides.
RiskBreakdown totalRisk(const sim::Snapshot& snap, const Vec2& p, const HeuristicParams& params);

/// Encodes (snapshot, candidate) in a robot-centred frame whose x axis points at the goal.
///
/// Layout: robot velocity (2), goal offset (2), candidate offset (2),
/// candidate-goal distance (1), static-obstacle clearance from robot and from
/// candidate (2), then the kFeatureHumans nearest visible humans sorted by
/// clearance, each as relative position (2), relative velocity (2), surface
/// distance (1) and a validity flag (1). Missing humans are all-zero.
FeatureVector featurize(const sim::Snapshot& snap, const Vec2& p);

}  // namespace crowdnav::risk
