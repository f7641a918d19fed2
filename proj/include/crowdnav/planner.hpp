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

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "crowdnav/geometry.hpp"
#include "crowdnav/world.hpp"

/// Multi-tree RRT over the static map, plus the plumbing that keeps a fresh
/// global path available to the control loop.
namespace crowdnav::planner
{

struct PlanRequest
{
  Vec2 start;
  Vec2 goal;
  std::vector<sim::StaticObstacle> obstacles;
  Bounds bounds;
  // Obstacles are inflated by this much; the arena walls shrink by it.
  double robot_radius{0.3};
  std::uint64_t seed{0};
};

struct GlobalPath
{
  std::vector<Vec2> waypoints;
  std::uint64_t stamp{0};

  double length() const;
};

struct PlannerParams
{
  int subtrees{4};
  double goal_bias{0.1};
  double step{0.5};
  int shortcut_attempts{50};
  // Iteration budget of one plan() call.
  int budget{20000};
};

/// No connection found within the budget, or the goal is unreachable.
class NoPath : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

bool pointFree(const PlanRequest& req, const Vec2& p);
bool segmentFree(const PlanRequest& req, const Vec2& a, const Vec2& b);

/// Moves `p` radially out of any inflated obstacle and back inside the arena.
Vec2 pushOut(const PlanRequest& req, const Vec2& p);

/// Throws InvalidInput when the start is not free and NoPath when the goal is
/// not free or no connection is found.
GlobalPath plan(const PlanRequest& req, const PlannerParams& params = {});

/// Point `lookahead` metres of arc beyond the robot's closest projection onto
/// the path, or the last waypoint when the path ends first.
Vec2 currentGuidance(const GlobalPath& path, const Vec2& robot, double lookahead);

/// The previous path cut at the robot's closest projection and re-rooted at
/// `req.start`; empty when the new first segment is blocked.
std::optional<GlobalPath> reanchor(const GlobalPath& prev, const PlanRequest& req);

/// Anything that hands out the latest global path for a robot position.
class GuidanceSource
{
public:
  virtual ~GuidanceSource() = default;
  /// Reports the robot position and returns the newest path (may be null
  /// before the first success). Never blocks on planning in async sources.
  virtual std::shared_ptr<const GlobalPath> update(const Vec2& robot) = 0;
  virtual bool degraded() const = 0;
};

struct ReplanOptions
{
  PlannerParams params{.budget = 2000};
  // Consecutive failures before the degraded flag is raised.
  int degraded_after{3};
  // A fresh plan replaces the re-anchored previous path only when it is
  // shorter by more than this fraction; stops left/right flipping.
  double switch_margin{0.1};
};

/// Picks between a fresh plan and the re-anchored previous path.
GlobalPath choosePath(
  const std::shared_ptr<const GlobalPath>& prev, GlobalPath fresh, const PlanRequest& req,
  const ReplanOptions& opts);

/// One plan attempt per update() call on the caller's thread. Used inside
/// episodes so that runs are reproducible.
class LockstepPlanner : public GuidanceSource
{
public:
  LockstepPlanner(PlanRequest base, ReplanOptions opts = {});

  std::shared_ptr<const GlobalPath> update(const Vec2& robot) override;
  bool degraded() const override { return failures_ >= opts_.degraded_after; }
  std::uint64_t attempts() const { return attempts_; }

private:
  PlanRequest base_;
  ReplanOptions opts_;
  std::shared_ptr<const GlobalPath> latest_;
  std::uint64_t attempts_{0};
  std::uint64_t stamp_{0};
  int failures_{0};
};

/// Background replanning worker. The robot position goes in and the path
/// comes out through latest-value slots; callers only ever copy a pointer.
class PlannerService : public GuidanceSource
{
public:
  PlannerService(PlanRequest base, ReplanOptions opts = {},
                 std::chrono::milliseconds period = std::chrono::milliseconds(250));
  ~PlannerService() override;
  PlannerService(const PlannerService&) = delete;
  PlannerService& operator=(const PlannerService&) = delete;

  std::shared_ptr<const GlobalPath> update(const Vec2& robot) override;
  bool degraded() const override { return degraded_.load(); }

  void setRobot(const Vec2& robot);
  std::shared_ptr<const GlobalPath> latest() const;
  /// Blocks until a path with stamp > `stamp` is published or `timeout` passes.
  std::shared_ptr<const GlobalPath> waitNewer(std::uint64_t stamp, std::chrono::milliseconds timeout) const;
  void stop();

private:
  void run();

  PlanRequest base_;
  ReplanOptions opts_;
  std::chrono::milliseconds period_;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::optional<Vec2> robot_;
  std::shared_ptr<const GlobalPath> latest_;
  std::atomic<bool> degraded_{false};
  bool stop_{false};
  std::thread worker_;
};

}  // namespace crowdnav::planner
