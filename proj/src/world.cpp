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

#include "crowdnav/world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "crowdnav/errors.hpp"
#include "crowdnav/rng.hpp"

namespace crowdnav::sim
{

std::string toString(Outcome o)
{
  switch (o) {
    case Outcome::reached:
      return "reached";
    case Outcome::collision:
      return "collision";
    case Outcome::timeout:
      return "timeout";
  }
  return "unknown";
}

Outcome outcomeFromString(const std::string& s)
{
  if (s == "reached") return Outcome::reached;
  if (s == "collision") return Outcome::collision;
  if (s == "timeout") return Outcome::timeout;
  throw InvalidInput("unknown outcome '" + s + "'");
}

Vec2 tieBreakAxis(int lower_id)
{
  // golden-angle spacing keeps axes of neighbouring ids well apart
  const double angle = std::numbers::pi * (3.0 - std::sqrt(5.0)) * static_cast<double>(lower_id + 2);
  return {std::cos(angle), std::sin(angle)};
}

namespace
{

Vec2 pairRepulsion(
  int id, const Vec2& p, double r, int other_id, const Vec2& q, double rq, double A, double B)
{
  const Vec2 diff = p - q;
  const double dist = norm(diff);
  Vec2 dir;
  if (dist > 0.0) {
    dir = diff / dist;
  } else {
    const int lower = std::min(id, other_id);
    dir = tieBreakAxis(lower) * (id == lower ? 1.0 : -1.0);
  }
  return dir * (A * std::exp(-(dist - r - rq) / B));
}

}  // namespace

Vec2 sfAccel(
  int id, const Vec2& position, const Vec2& velocity, const Vec2& goal, double radius,
  double v_max, std::span<const HumanAgent> others, std::span<const StaticObstacle> obstacles,
  const RobotState* robot, const SfParams& params)
{
  const Vec2 v_des = normalized(goal - position) * v_max;
  Vec2 acc = (v_des - velocity) / params.tau;
  for (const auto& o : others) {
    if (o.id == id) {
      continue;
    }
    acc += pairRepulsion(id, position, radius, o.id, o.position, o.radius, params.human_A, params.human_B);
  }
  for (const auto& ob : obstacles) {
    // obstacles never move, so the agent always takes the positive side of its own axis
    acc += pairRepulsion(
      id, position, radius, id + 1, ob.center, ob.radius, params.obstacle_A, params.obstacle_B);
  }
  if (robot != nullptr) {
    acc += pairRepulsion(
      id, position, radius, -1, robot->position, robot->radius, params.human_A, params.human_B);
  }
  return acc;
}

Vec2 sfAccel(
  const HumanAgent& agent, std::span<const HumanAgent> others,
  std::span<const StaticObstacle> obstacles, const RobotState& robot, const SfParams& params)
{
  return sfAccel(
    agent.id, agent.position, agent.velocity, agent.goal, agent.radius, agent.v_max, others,
    obstacles, agent.aware_of_robot ? &robot : nullptr, params);
}

namespace
{

bool clearOf(
  const Vec2& p, double r, double gap, const std::vector<StaticObstacle>& obstacles,
  const std::vector<HumanAgent>& humans, bool use_goals)
{
  for (const auto& ob : obstacles) {
    if (distance(p, ob.center) - r - ob.radius < gap) {
      return false;
    }
  }
  for (const auto& h : humans) {
    const Vec2& q = use_goals ? h.goal : h.position;
    if (distance(p, q) - r - h.radius < gap) {
      return false;
    }
  }
  return true;
}

Vec2 sampleFreePoint(
  Rng& rng, const Bounds& arena, double r, double gap, const std::vector<StaticObstacle>& obstacles,
  const std::vector<HumanAgent>& humans, bool use_goals, std::span<const Vec2> keep_out)
{
  std::uniform_real_distribution<double> ux(arena.lo.x + r, arena.hi.x - r);
  std::uniform_real_distribution<double> uy(arena.lo.y + r, arena.hi.y - r);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const Vec2 p{ux(rng), uy(rng)};
    bool ok = clearOf(p, r, gap, obstacles, humans, use_goals);
    for (const auto& k : keep_out) {
      ok = ok && distance(p, k) - 2.0 * r >= gap;
    }
    if (ok) {
      return p;
    }
  }
  throw ConfigError("could not place a human; arena too crowded for the requested separation");
}

Vec2 resampleGoal(const WorldState& w, const HumanAgent& h)
{
  Rng rng = makeRng(w.rng_seed, {stream::kGoalResample, static_cast<std::uint64_t>(h.id),
                                 static_cast<std::uint64_t>(h.goals_reached)});
  std::uniform_real_distribution<double> ux(w.arena.lo.x + h.radius, w.arena.hi.x - h.radius);
  std::uniform_real_distribution<double> uy(w.arena.lo.y + h.radius, w.arena.hi.y - h.radius);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const Vec2 g{ux(rng), uy(rng)};
    if (clearOf(g, h.radius, 0.0, w.obstacles, {}, false) && distance(g, h.position) > 1.0) {
      return g;
    }
  }
  return h.goal;
}

}  // namespace

void validate(const ScenarioConfig& cfg)
{
  auto fail = [](const std::string& key, const std::string& why) {
    throw ConfigError("scenario." + key + ": " + why);
  };
  if (!(cfg.arena.hi.x > cfg.arena.lo.x) || !(cfg.arena.hi.y > cfg.arena.lo.y)) {
    fail("arena", "empty arena");
  }
  if (!(cfg.dt > 0.0)) fail("dt", "must be positive");
  if (!(cfg.timeout > 0.0)) fail("timeout", "must be positive");
  if (!(cfg.robot_radius > 0.0)) fail("robot_radius", "must be positive");
  if (!(cfg.human_radius > 0.0)) fail("human_radius", "must be positive");
  if (!(cfg.robot_v_max > 0.0)) fail("robot_v_max", "must be positive");
  if (!(cfg.human_v_max > 0.0)) fail("human_v_max", "must be positive");
  if (!(cfg.sensing_range > 0.0)) fail("sensing_range", "must be positive");
  if (!(cfg.goal_tolerance > 0.0)) fail("goal_tolerance", "must be positive");
  if (cfg.humans_min < 0 || cfg.humans_max < cfg.humans_min) {
    fail("humans", "need 0 <= humans_min <= humans_max");
  }
  if (!cfg.arena.contains(cfg.robot_start, cfg.robot_radius)) fail("start", "outside arena");
  if (!cfg.arena.contains(cfg.robot_goal, cfg.robot_radius)) fail("goal", "outside arena");
  if (!(cfg.sf.tau > 0.0 && cfg.sf.human_B > 0.0 && cfg.sf.obstacle_B > 0.0)) {
    fail("sf", "tau and B must be positive");
  }
  for (const auto& ob : cfg.obstacles) {
    if (!(ob.radius > 0.0)) fail("obstacles", "radius must be positive");
    if (distance(ob.center, cfg.robot_start) < ob.radius + cfg.robot_radius) {
      fail("obstacles", "obstacle overlaps the robot start");
    }
    if (distance(ob.center, cfg.robot_goal) < ob.radius + cfg.robot_radius) {
      fail("obstacles", "obstacle overlaps the robot goal");
    }
  }
}

WorldState makeWorld(const ScenarioConfig& cfg, std::uint64_t seed)
{
  validate(cfg);
  WorldState w;
  w.dt = cfg.dt;
  w.arena = cfg.arena;
  w.goal = cfg.robot_goal;
  w.goal_tolerance = cfg.goal_tolerance;
  w.human_goal_tolerance = cfg.human_radius;
  w.rng_seed = seed;
  w.sf = cfg.sf;
  w.obstacles = cfg.obstacles;
  w.robot.position = cfg.robot_start;
  w.robot.radius = cfg.robot_radius;
  w.robot.v_max = cfg.robot_v_max;
  w.robot.sensing_range = cfg.sensing_range;

  Rng rng = makeRng(seed, {stream::kScenario});
  std::uniform_int_distribution<int> count(cfg.humans_min, cfg.humans_max);
  const int n = count(rng);
  const Vec2 robot_discs[] = {cfg.robot_start, cfg.robot_goal};
  w.humans.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    HumanAgent h;
    h.id = i;
    h.radius = cfg.human_radius;
    h.v_max = cfg.human_v_max;
    h.aware_of_robot = cfg.aware;
    h.position = sampleFreePoint(
      rng, cfg.arena, h.radius, cfg.spawn_separation, cfg.obstacles, w.humans, false,
      std::span<const Vec2>(robot_discs, 1));
    h.goal = sampleFreePoint(
      rng, cfg.arena, h.radius, cfg.spawn_separation, cfg.obstacles, w.humans, true, {});
    w.humans.push_back(h);
  }
  return w;
}

WorldState stepWorld(const WorldState& world, const Vec2& robot_cmd)
{
  if (!isFinite(robot_cmd)) {
    throw InvalidInput("robot command is not finite");
  }
  if (world.terminal) {
    return world;
  }
  WorldState next = world;
  const double dt = world.dt;

  // synchronous update: every agent reacts to the state at the start of the step
  for (std::size_t i = 0; i < world.humans.size(); ++i) {
    const HumanAgent& h = world.humans[i];
    const Vec2 acc = sfAccel(h, world.humans, world.obstacles, world.robot, world.sf);
    HumanAgent& nh = next.humans[i];
    nh.velocity = clipNorm(h.velocity + acc * dt, h.v_max);
    nh.position = h.position + nh.velocity * dt;
    if (distance(nh.position, nh.goal) <= world.human_goal_tolerance) {
      nh.goal = resampleGoal(world, nh);
      ++nh.goals_reached;
    }
  }

  next.robot.velocity = robot_cmd;
  next.robot.position = world.robot.position + robot_cmd * dt;
  ++next.step;
  next.time = static_cast<double>(next.step) * dt;

  const RobotState& r = next.robot;
  for (const auto& h : next.humans) {
    if (distance(r.position, h.position) < r.radius + h.radius) {
      next.terminal = Outcome::collision;
      return next;
    }
  }
  for (const auto& ob : next.obstacles) {
    if (distance(r.position, ob.center) < r.radius + ob.radius) {
      next.terminal = Outcome::collision;
      return next;
    }
  }
  if (distance(r.position, next.goal) <= next.goal_tolerance) {
    next.terminal = Outcome::reached;
  }
  return next;
}

Snapshot sense(const WorldState& world)
{
  Snapshot s;
  s.robot = world.robot;
  s.obstacles = world.obstacles;
  s.goal = world.goal;
  s.time = world.time;
  for (const auto& h : world.humans) {
    if (distance(h.position, world.robot.position) <= world.robot.sensing_range) {
      s.visible_humans.push_back(h);
    }
  }
  return s;
}

}  // namespace crowdnav::sim
