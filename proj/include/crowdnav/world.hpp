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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crowdnav/geometry.hpp"

namespace crowdnav::sim
{

struct RobotState
{
  Vec2 position;
  Vec2 velocity;
  double radius{0.3};
  double v_max{1.0};
  double sensing_range{5.0};
};

struct HumanAgent
{
  int id{0};
  Vec2 position;
  Vec2 velocity;
  Vec2 goal;
  double radius{0.3};
  double v_max{1.0};
  bool aware_of_robot{true};
  // Number of goals reached so far; keys the goal-resampling stream.
  int goals_reached{0};
};

struct StaticObstacle
{
  Vec2 center;
  double radius{1.0};
};

/// Social-force parameters. Repulsion magnitude is A * exp(-surface_distance / B).
struct SfParams
{
  double tau{0.5};
  double human_A{2.0};
  double human_B{0.35};
  double obstacle_A{2.0};
  double obstacle_B{0.35};
};

enum class Outcome
{
  reached,
  collision,
  timeout
};

std::string toString(Outcome o);
Outcome outcomeFromString(const std::string& s);

struct WorldState
{
  long step{0};
  double time{0.0};
  double dt{0.25};
  RobotState robot;
  std::vector<HumanAgent> humans;
  std::vector<StaticObstacle> obstacles;
  Vec2 goal;
  Bounds arena;
  double goal_tolerance{0.3};
  double human_goal_tolerance{0.3};
  std::uint64_t rng_seed{0};
  SfParams sf;
  std::optional<Outcome> terminal;
};

/// What the robot perceives at one instant.
struct Snapshot
{
  RobotState robot;
  std::vector<HumanAgent> visible_humans;
  std::vector<StaticObstacle> obstacles;
  Vec2 goal;
  double time{0.0};
};

struct ScenarioConfig
{
  std::string name{"default"};
  Bounds arena{{-6.0, -6.0}, {6.0, 6.0}};
  Vec2 robot_start{-4.5, -4.5};
  Vec2 robot_goal{4.5, 4.5};
  double robot_radius{0.3};
  double robot_v_max{1.0};
  double sensing_range{5.0};
  int humans_min{5};
  int humans_max{30};
  double human_radius{0.3};
  double human_v_max{1.0};
  bool aware{true};
  std::vector<StaticObstacle> obstacles;
  double dt{0.25};
  double timeout{200.0};
  double goal_tolerance{0.3};
  // Minimum surface gap between discs when sampling human starts and goals.
  double spawn_separation{0.5};
  SfParams sf;
};

/// Throws ConfigError naming the offending field.
void validate(const ScenarioConfig& cfg);

/// Samples the crowd for one episode. Deterministic in (cfg, seed).
WorldState makeWorld(const ScenarioConfig& cfg, std::uint64_t seed);

/// Social-force acceleration of `agent`. Entries of `others` with the agent's id
/// are skipped; the robot only repels agents that are aware of it.
Vec2 sfAccel(
  const HumanAgent& agent, std::span<const HumanAgent> others,
  std::span<const StaticObstacle> obstacles, const RobotState& robot, const SfParams& params);

/// Social-force acceleration of a generic disc agent. `robot` may be null.
Vec2 sfAccel(
  int id, const Vec2& position, const Vec2& velocity, const Vec2& goal, double radius,
  double v_max, std::span<const HumanAgent> others, std::span<const StaticObstacle> obstacles,
  const RobotState* robot, const SfParams& params);

/// Advances the world by one step under the robot velocity command.
/// Throws InvalidInput on a non-finite command. Terminal worlds are returned unchanged.
WorldState stepWorld(const WorldState& world, const Vec2& robot_cmd);

Snapshot sense(const WorldState& world);

/// Unit axis used to separate two coincident discs; the lower id pushes along +axis.
Vec2 tieBreakAxis(int lower_id);

}  // namespace crowdnav::sim
