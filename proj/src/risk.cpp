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

#include "crowdnav/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

#include "crowdnav/errors.hpp"

namespace crowdnav::risk
{

void validate(const HeuristicParams& params)
{
  if (!(params.lambda_dist > 0.0 && params.eps_d > 0.0 && params.lambda_dir > 0.0 &&
        params.risk_max > 0.0)) {
    throw ConfigError("heuristic parameters must be positive");
  }
  if (params.samples_per_segment < 2) {
    throw ConfigError("heuristic samples_per_segment must be at least 2");
  }
}

std::vector<CandidateWaypoint> sampleCandidates(
  const sim::Snapshot& snap, int n_ring, std::span<const double> radii)
{
  std::vector<CandidateWaypoint> out;
  if (n_ring <= 0) {
    return out;
  }
  out.reserve(static_cast<std::size_t>(n_ring) * radii.size());
  for (double r : radii) {
    if (!(r > 0.0) || r > snap.robot.sensing_range) {
      throw InvalidInput("candidate radius must lie in (0, sensing_range]");
    }
    for (int k = 0; k < n_ring; ++k) {
      const double a = 2.0 * std::numbers::pi * k / n_ring;
      out.push_back({snap.robot.position + Vec2{std::cos(a), std::sin(a)} * r,
                     CandidateSource::local_sample, std::nullopt, std::nullopt});
    }
  }
  return out;
}

std::vector<Vec2> segmentSamples(const Vec2& from, const Vec2& to, int n)
{
  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) {
    const double t = static_cast<double>(k) / n;
    pts.push_back(from + (to - from) * t);
  }
  return pts;
}

double nearestClearance(const sim::Snapshot& snap, const Vec2& p)
{
  double best = kEmptyClearance;
  for (const auto& h : snap.visible_humans) {
    best = std::min(best, distance(p, h.position) - h.radius);
  }
  for (const auto& ob : snap.obstacles) {
    best = std::min(best, distance(p, ob.center) - ob.radius);
  }
  return best;
}

PathRisk pathRisk(const sim::Snapshot& snap, const Vec2& p, const HeuristicParams& params)
{
  PathRisk r;
  for (const Vec2& q : segmentSamples(snap.robot.position, p, params.samples_per_segment)) {
    const double d = nearestClearance(snap, q);
    if (d < 0.0) {
      r.collision = true;
      continue;
    }
    r.value = std::max(r.value, params.lambda_dist / (d + params.eps_d));
  }
  return r;
}

namespace
{

const sim::HumanAgent* nearestHuman(const sim::Snapshot& snap, const Vec2& q)
{
  const sim::HumanAgent* best = nullptr;
  double best_d = 0.0;
  for (const auto& h : snap.visible_humans) {
    const double d = distance(q, h.position) - h.radius;
    if (best == nullptr || d < best_d || (d == best_d && h.id < best->id)) {
      best = &h;
      best_d = d;
    }
  }
  return best;
}

}  // namespace

double orientationRisk(const sim::Snapshot& snap, const Vec2& p, const HeuristicParams& params)
{
  const Vec2 heading = p - snap.robot.position;
  if (squaredNorm(heading) == 0.0) {
    return 0.0;
  }
  double sum = 0.0;
  for (const Vec2& q : segmentSamples(snap.robot.position, p, params.samples_per_segment)) {
    if (const auto* h = nearestHuman(snap, q)) {
      // a standing human has no heading; cosAngle reports 0 for it
      sum += std::exp(-cosAngle(heading, h->velocity));
    }
  }
  return sum;
}

double goalDist(const Vec2& p, const Vec2& goal) { return distance(goal, p); }

double dirPenalty(const Vec2& robot_pos, const Vec2& p, const Vec2& goal, double lambda_dir)
{
  const Vec2 to_p = p - robot_pos;
  const Vec2 to_goal = goal - robot_pos;
  if (squaredNorm(to_p) == 0.0 || squaredNorm(to_goal) == 0.0) {
    return 0.0;
  }
  return lambda_dir * (1.0 - cosAngle(to_p, to_goal));
}

RiskBreakdown totalRisk(const sim::Snapshot& snap, const Vec2& p, const HeuristicParams& params)
{
  RiskBreakdown b;
  const PathRisk pr = pathRisk(snap, p, params);
  b.path = pr.value;
  b.orientation = orientationRisk(snap, p, params);
  b.goal_dist = goalDist(p, snap.goal);
  b.dir_penalty = dirPenalty(snap.robot.position, p, snap.goal, params.lambda_dir);
  b.collision = pr.collision;
  b.total = pr.collision ? params.risk_max : b.path + b.orientation + b.goal_dist + b.dir_penalty;
  return b;
}

FeatureVector featurize(const sim::Snapshot& snap, const Vec2& p)
{
  FeatureVector f{};
  const Vec2 robot = snap.robot.position;
  Vec2 axis = normalized(snap.goal - robot);
  if (squaredNorm(axis) == 0.0) {
    axis = {1.0, 0.0};
  }

  auto obstacleClearance = [&](const Vec2& q) {
    double best = kFeatureFarDistance;
    for (const auto& ob : snap.obstacles) {
      best = std::min(best, distance(q, ob.center) - ob.radius);
    }
    return best;
  };

  const Vec2 v = toFrame(snap.robot.velocity, axis);
  const Vec2 g = toFrame(snap.goal - robot, axis);
  const Vec2 c = toFrame(p - robot, axis);
  f[0] = v.x;
  f[1] = v.y;
  f[2] = g.x;
  f[3] = g.y;
  f[4] = c.x;
  f[5] = c.y;
  f[6] = distance(p, snap.goal);
  f[7] = obstacleClearance(robot);
  f[8] = obstacleClearance(p);

  struct Entry
  {
    double clearance;
    Vec2 pos;
    Vec2 vel;
  };
  std::vector<Entry> humans;
  humans.reserve(snap.visible_humans.size());
  for (const auto& h : snap.visible_humans) {
    humans.push_back({distance(h.position, robot) - h.radius - snap.robot.radius,
                      h.position - robot, h.velocity - snap.robot.velocity});
  }
  // full-key ordering so that the encoding does not depend on input order
  std::sort(humans.begin(), humans.end(), [](const Entry& a, const Entry& b) {
    return std::tie(a.clearance, a.pos.x, a.pos.y, a.vel.x, a.vel.y) <
           std::tie(b.clearance, b.pos.x, b.pos.y, b.vel.x, b.vel.y);
  });
  const std::size_t n = std::min(humans.size(), kFeatureHumans);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t o = 9 + k * kFeaturesPerHuman;
    const Vec2 rp = toFrame(humans[k].pos, axis);
    const Vec2 rv = toFrame(humans[k].vel, axis);
    f[o + 0] = rp.x;
    f[o + 1] = rp.y;
    f[o + 2] = rv.x;
    f[o + 3] = rv.y;
    f[o + 4] = humans[k].clearance;
    f[o + 5] = 1.0;
  }
  return f;
}

}  // namespace crowdnav::risk
