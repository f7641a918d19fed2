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

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crowdnav/geometry.hpp"
#include "crowdnav/world.hpp"

/// Receding-horizon position controller for an omnidirectional robot with
/// discrete-time control-barrier constraints against moving discs.
namespace crowdnav::mpc
{

struct MpcConfig
{
  int horizon{8};
  Eigen::Matrix2d Q{Eigen::Matrix2d::Identity() * 10.0};
  Eigen::Matrix2d R{Eigen::Matrix2d::Identity()};
  // Barrier decay rate in (0, 1].
  double xi{0.5};
  double dt{0.25};
  double v_max{1.0};
  Bounds state_bounds{{-5.7, -5.7}, {5.7, 5.7}};
  int sqp_iters{10};
  double slack_weight{1e4};
  // The speed disc is replaced by an inscribed polygon with this many sides.
  int speed_facets{16};
  double robot_radius{0.3};
  // Safety distance to a disc of radius r is robot_radius + r + safety_margin.
  double safety_margin{0.05};
};

/// Throws ConfigError on non-positive-definite weights or out-of-range values.
void validate(const MpcConfig& cfg);

/// Predicted centre of one obstacle at steps 0..N.
struct ObstacleTrack
{
  std::vector<Vec2> positions;
  double radius{0.3};
};

/// Constant-velocity prediction over `horizon` steps.
ObstacleTrack extrapolate(const Vec2& position, const Vec2& velocity, double radius, int horizon, double dt);

double safetyDistance(const ObstacleTrack& track, const MpcConfig& cfg);

/// Squared clearance minus the squared safety distance.
double psi(const Vec2& x, const Vec2& obstacle, double eta_safe);

/// psi(x_{t+1}) - psi(x_t) + xi * psi(x_t); the barrier condition holds iff >= 0.
double cbfResidual(
  const Vec2& x_t, const Vec2& x_t1, const Vec2& obs_t, const Vec2& obs_t1, double xi, double eta_safe);

struct MpcProblem
{
  Vec2 x0;
  Vec2 target;
  std::vector<ObstacleTrack> tracks;
  MpcConfig cfg;

  std::size_t controlCount() const { return 2 * static_cast<std::size_t>(cfg.horizon); }
  std::size_t cbfRowCount() const { return tracks.size() * static_cast<std::size_t>(cfg.horizon); }
};

/// Throws InvalidInput when a track does not cover steps 0..N.
MpcProblem buildProblem(
  const sim::RobotState& current, const Vec2& target, std::vector<ObstacleTrack> tracks,
  const MpcConfig& cfg);

enum class SolveStatus
{
  optimal,
  feasible_with_slack,
  infeasible
};

std::string toString(SolveStatus s);

struct MpcSolution
{
  std::vector<Vec2> states;    // N + 1, states[0] = x0
  std::vector<Vec2> controls;  // N
  SolveStatus status{SolveStatus::infeasible};
  double min_psi{0.0};
  // 0.5 |x_N - target|_Q^2 + 0.5 sum |u_t|_R^2
  double cost{0.0};
  // Largest barrier violation along the returned trajectory.
  double max_slack{0.0};
  int iterations{0};
  // residuals[k][t] for track k and step t.
  std::vector<std::vector<double>> residuals;
  std::string diagnostic;
};

/// Sequential linearisation of the barrier rows, each subproblem a strictly
/// convex QP with L1+L2-penalised slacks, globalised by a backtracking line
/// search on the exact-penalty merit function.
MpcSolution solve(const MpcProblem& problem, const MpcSolution* warm_start = nullptr);

/// Rolls x_{t+1} = x_t + u_t dt.
std::vector<Vec2> rollout(const Vec2& x0, const std::vector<Vec2>& controls, double dt);

}  // namespace crowdnav::mpc
