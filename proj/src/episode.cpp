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

#include "crowdnav/episode.hpp"

#include <exception>
#include <stdexcept>

namespace crowdnav::sim
{

namespace
{

TrajectoryPoint capture(const WorldState& w)
{
  TrajectoryPoint p;
  p.time = w.time;
  p.robot = w.robot.position;
  p.humans.reserve(w.humans.size());
  for (const auto& h : w.humans) {
    p.humans.push_back(h.position);
  }
  return p;
}

}  // namespace

EpisodeResult runEpisode(
  NavigationPolicy& policy, const ScenarioConfig& scenario, std::uint64_t seed,
  const EpisodeOptions& options)
{
  return runEpisode(policy, makeWorld(scenario, seed), scenario.timeout, seed, options);
}

EpisodeResult runEpisode(
  NavigationPolicy& policy, WorldState world, double timeout, std::uint64_t seed,
  const EpisodeOptions& options)
{
  EpisodeResult result;
  result.per_human_zone_counts.resize(world.humans.size());
  if (options.record_trajectory) {
    result.trajectory.push_back(capture(world));
  }
  if (options.observer != nullptr) {
    options.observer->onStart(world);
  }

  auto finish = [&](Outcome outcome) {
    result.outcome = outcome;
    result.success = outcome == Outcome::reached;
    result.steps = world.step;
    result.duration = static_cast<double>(world.step) * world.dt;
    if (options.observer != nullptr) {
      options.observer->onEnd(result);
    }
    return result;
  };

  if (distance(world.robot.position, world.goal) <= world.goal_tolerance) {
    return finish(Outcome::reached);
  }

  policy.reset(world, seed);
  while (true) {
    const Snapshot snap = sense(world);
    Vec2 cmd;
    try {
      cmd = policy.act(snap);
      if (!isFinite(cmd)) {
        throw std::runtime_error("policy returned a non-finite command");
      }
    } catch (const std::exception& e) {
      result.diagnostic = policy.name() + " failed at t=" + std::to_string(world.time) + ": " + e.what();
      return finish(Outcome::timeout);
    }
    cmd = clipNorm(cmd, world.robot.v_max);

    const Vec2 before = world.robot.position;
    world = stepWorld(world, cmd);
    result.path_length += distance(before, world.robot.position);
    for (const auto& h : world.humans) {
      result.per_human_zone_counts[static_cast<std::size_t>(h.id)].record(
        metrics::zoneOf(world.robot, h, options.bands));
    }
    if (options.record_trajectory) {
      result.trajectory.push_back(capture(world));
    }
    if (options.observer != nullptr) {
      options.observer->onStep(snap, cmd, world);
    }
    if (world.terminal) {
      return finish(*world.terminal);
    }
    if (world.time >= timeout) {
      return finish(Outcome::timeout);
    }
  }
}

}  // namespace crowdnav::sim
