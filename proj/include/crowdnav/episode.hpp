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
#include <string>
#include <vector>

#include "crowdnav/world.hpp"
#include "crowdnav/zones.hpp"

namespace crowdnav::sim
{

/// Anything that maps a snapshot to a robot velocity command.
class NavigationPolicy
{
public:
  virtual ~NavigationPolicy() = default;

  virtual std::string name() const = 0;

  /// Called once before the first `act` of an episode.
  virtual void reset(const WorldState& /*initial*/, std::uint64_t /*seed*/) {}

  virtual Vec2 act(const Snapshot& snap) = 0;
};

struct TrajectoryPoint
{
  double time{0.0};
  Vec2 robot;
  std::vector<Vec2> humans;
};

struct EpisodeResult
{
  bool success{false};
  Outcome outcome{Outcome::timeout};
  long steps{0};
  double duration{0.0};
  double path_length{0.0};
  // Indexed by human id.
  std::vector<metrics::ZoneStats> per_human_zone_counts;
  std::vector<TrajectoryPoint> trajectory;
  // Non-empty when the policy threw; such episodes are reported as timeouts.
  std::string diagnostic;
};

/// Hooks for logging; all callbacks default to no-ops.
class EpisodeObserver
{
public:
  virtual ~EpisodeObserver() = default;
  virtual void onStart(const WorldState& /*initial*/) {}
  virtual void onStep(
    const Snapshot& /*snap*/, const Vec2& /*cmd*/, const WorldState& /*after*/)
  {
  }
  virtual void onEnd(const EpisodeResult& /*result*/) {}
};

struct EpisodeOptions
{
  metrics::ZoneBands bands;
  bool record_trajectory{true};
  EpisodeObserver* observer{nullptr};
};

/// Runs sense -> policy -> stepWorld until the robot arrives, collides or times out.
EpisodeResult runEpisode(
  NavigationPolicy& policy, const ScenarioConfig& scenario, std::uint64_t seed,
  const EpisodeOptions& options = {});

/// Same loop from an explicit initial world.
EpisodeResult runEpisode(
  NavigationPolicy& policy, WorldState world, double timeout, std::uint64_t seed,
  const EpisodeOptions& options = {});

}  // namespace crowdnav::sim
