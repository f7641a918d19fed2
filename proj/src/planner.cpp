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

#include "crowdnav/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "crowdnav/errors.hpp"
#include "crowdnav/rng.hpp"

namespace crowdnav::planner
{

double GlobalPath::length() const
{
  double len = 0.0;
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    len += distance(waypoints[i - 1], waypoints[i]);
  }
  return len;
}

bool pointFree(const PlanRequest& req, const Vec2& p)
{
  if (!isFinite(p) || !req.bounds.contains(p, req.robot_radius)) {
    return false;
  }
  for (const auto& o : req.obstacles) {
    if (distance(p, o.center) < o.radius + req.robot_radius) {
      return false;
    }
  }
  return true;
}

bool segmentFree(const PlanRequest& req, const Vec2& a, const Vec2& b)
{
  // the shrunken arena is convex, so endpoint checks cover the walls
  if (!pointFree(req, a) || !pointFree(req, b)) {
    return false;
  }
  for (const auto& o : req.obstacles) {
    if (segmentDistance(o.center, a, b) < o.radius + req.robot_radius) {
      return false;
    }
  }
  return true;
}

Vec2 pushOut(const PlanRequest& req, const Vec2& p)
{
  const double m = req.robot_radius;
  Vec2 q{std::clamp(p.x, req.bounds.lo.x + m, req.bounds.hi.x - m),
         std::clamp(p.y, req.bounds.lo.y + m, req.bounds.hi.y - m)};
  // a few passes settle overlapping discs in practice
  for (int pass = 0; pass < 4; ++pass) {
    bool moved = false;
    for (const auto& o : req.obstacles) {
      const double need = o.radius + m + 1e-6;
      const Vec2 d = q - o.center;
      const double n = norm(d);
      if (n < need) {
        const Vec2 dir = n > 1e-12 ? d / n : Vec2{1.0, 0.0};
        q = o.center + dir * need;
        moved = true;
      }
    }
    if (!moved) break;
  }
  return q;
}

namespace
{

struct Node
{
  Vec2 p;
  int parent{-1};
};

using Tree = std::vector<Node>;

int nearest(const Tree& t, const Vec2& q)
{
  int best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double d = squaredNorm(t[i].p - q);
    if (d < bd) {
      bd = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

Vec2 steer(const Vec2& from, const Vec2& to, double step)
{
  const Vec2 d = to - from;
  const double n = norm(d);
  return n <= step ? to : from + d * (step / n);
}

// Attaches `sub`, re-rooted at node `at`, below node `parent` of `root`.
// Returns the index map from sub to root.
std::vector<int> graft(Tree& root, int parent, const Tree& sub, int at)
{
  // reverse parent pointers from `at` up to the old root
  std::vector<int> par(sub.size());
  for (std::size_t i = 0; i < sub.size(); ++i) par[i] = sub[i].parent;
  int prev = -1;
  int cur = at;
  while (cur != -1) {
    const int next = par[static_cast<std::size_t>(cur)];
    par[static_cast<std::size_t>(cur)] = prev;
    prev = cur;
    cur = next;
  }
  std::vector<int> map(sub.size());
  const int base = static_cast<int>(root.size());
  for (std::size_t i = 0; i < sub.size(); ++i) map[i] = base + static_cast<int>(i);
  for (std::size_t i = 0; i < sub.size(); ++i) {
    const int p = par[i];
    root.push_back({sub[i].p, p == -1 ? parent : map[static_cast<std::size_t>(p)]});
  }
  return map;
}

std::vector<Vec2> extract(const Tree& t, int leaf)
{
  std::vector<Vec2> out;
  for (int i = leaf; i != -1; i = t[static_cast<std::size_t>(i)].parent) {
    out.push_back(t[static_cast<std::size_t>(i)].p);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

void shortcut(const PlanRequest& req, std::vector<Vec2>& pts, int attempts, Rng& rng)
{
  for (int a = 0; a < attempts && pts.size() > 2; ++a) {
    std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
    std::size_t i = pick(rng);
    std::size_t j = pick(rng);
    if (i > j) std::swap(i, j);
    if (j - i < 2) continue;
    if (segmentFree(req, pts[i], pts[j])) {
      pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(i) + 1, pts.begin() + static_cast<std::ptrdiff_t>(j));
    }
  }
}

}  // namespace

GlobalPath plan(const PlanRequest& req, const PlannerParams& params)
{
  if (!pointFree(req, req.start)) {
    throw InvalidInput("plan start is outside the free space");
  }
  if (!pointFree(req, req.goal)) {
    throw NoPath("goal is outside the free space");
  }
  GlobalPath path;
  if (segmentFree(req, req.start, req.goal)) {
    path.waypoints = {req.start, req.goal};
    return path;
  }

  Rng rng(req.seed);
  const double m = req.robot_radius;
  std::uniform_real_distribution<double> ux(req.bounds.lo.x + m, req.bounds.hi.x - m);
  std::uniform_real_distribution<double> uy(req.bounds.lo.y + m, req.bounds.hi.y - m);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto freeSample = [&]() {
    for (int k = 0; k < 1000; ++k) {
      const Vec2 q{ux(rng), uy(rng)};
      if (pointFree(req, q)) return std::optional<Vec2>(q);
    }
    return std::optional<Vec2>();
  };

  std::vector<Tree> trees;
  trees.push_back({{req.start, -1}});
  for (int s = 0; s < params.subtrees; ++s) {
    if (auto q = freeSample()) trees.push_back({{*q, -1}});
  }
  Tree& root = trees[0];
  std::vector<bool> alive(trees.size(), true);

  // Returns true once `idx` in the root tree sees the goal.
  auto tryGoal = [&](int idx) {
    const Vec2 p = root[static_cast<std::size_t>(idx)].p;
    if (segmentFree(req, p, req.goal)) {
      root.push_back({req.goal, idx});
      return true;
    }
    return false;
  };

  std::size_t turn = 0;
  for (int it = 0; it < params.budget; ++it) {
    // round robin over the live trees
    std::size_t ti = turn++ % trees.size();
    while (!alive[ti]) ti = turn++ % trees.size();
    Tree& tree = trees[ti];

    const Vec2 q = u01(rng) < params.goal_bias ? req.goal : Vec2{ux(rng), uy(rng)};
    const int near = nearest(tree, q);
    const Vec2 from = tree[static_cast<std::size_t>(near)].p;
    const Vec2 to = steer(from, q, params.step);
    if (distance(from, to) < 1e-9 || !segmentFree(req, from, to)) continue;
    tree.push_back({to, near});
    const int added = static_cast<int>(tree.size()) - 1;

    if (ti == 0) {
      if (tryGoal(added)) {
        path.waypoints = extract(root, static_cast<int>(root.size()) - 1);
        break;
      }
      for (std::size_t k = 1; k < trees.size(); ++k) {
        if (!alive[k]) continue;
        const int j = nearest(trees[k], to);
        if (distance(trees[k][static_cast<std::size_t>(j)].p, to) <= params.step &&
            segmentFree(req, trees[k][static_cast<std::size_t>(j)].p, to)) {
          const auto map = graft(root, added, trees[k], j);
          alive[k] = false;
          trees[k].clear();
          for (int r : map) {
            if (tryGoal(r)) {
              path.waypoints = extract(root, static_cast<int>(root.size()) - 1);
              break;
            }
          }
          if (!path.waypoints.empty()) break;
        }
      }
      if (!path.waypoints.empty()) break;
    } else {
      const int j = nearest(root, to);
      if (distance(root[static_cast<std::size_t>(j)].p, to) <= params.step &&
          segmentFree(req, root[static_cast<std::size_t>(j)].p, to)) {
        const auto map = graft(root, j, tree, added);
        alive[ti] = false;
        tree.clear();
        for (int r : map) {
          if (tryGoal(r)) {
            path.waypoints = extract(root, static_cast<int>(root.size()) - 1);
            break;
          }
        }
        if (!path.waypoints.empty()) break;
      }
    }
  }
  if (path.waypoints.empty()) {
    throw NoPath("no connection within " + std::to_string(params.budget) + " iterations");
  }
  shortcut(req, path.waypoints, params.shortcut_attempts, rng);
  return path;
}

Vec2 currentGuidance(const GlobalPath& path, const Vec2& robot, double lookahead)
{
  const auto& w = path.waypoints;
  if (w.empty()) {
    throw InvalidInput("guidance requested on an empty path");
  }
  if (w.size() == 1) return w.front();
  // closest projection, earliest segment on ties
  double best = std::numeric_limits<double>::infinity();
  double s_proj = 0.0;
  double acc = 0.0;
  std::vector<double> cum(w.size(), 0.0);
  for (std::size_t i = 1; i < w.size(); ++i) {
    const Vec2 ab = w[i] - w[i - 1];
    const double len = norm(ab);
    double t = len > 0.0 ? dot(robot - w[i - 1], ab) / (len * len) : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double d = distance(robot, w[i - 1] + ab * t);
    if (d < best) {
      best = d;
      s_proj = acc + t * len;
    }
    acc += len;
    cum[i] = acc;
  }
  const double target = s_proj + lookahead;
  if (target >= acc) return w.back();
  for (std::size_t i = 1; i < w.size(); ++i) {
    if (cum[i] >= target) {
      const double len = cum[i] - cum[i - 1];
      const double t = len > 0.0 ? (target - cum[i - 1]) / len : 1.0;
      return w[i - 1] + (w[i] - w[i - 1]) * t;
    }
  }
  return w.back();
}

std::optional<GlobalPath> reanchor(const GlobalPath& prev, const PlanRequest& req)
{
  const auto& w = prev.waypoints;
  if (w.size() < 2) return std::nullopt;
  std::size_t seg = 1;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < w.size(); ++i) {
    const double d = segmentDistance(req.start, w[i - 1], w[i]);
    if (d < best) {
      best = d;
      seg = i;
    }
  }
  GlobalPath out;
  out.waypoints.push_back(req.start);
  out.waypoints.insert(out.waypoints.end(), w.begin() + static_cast<std::ptrdiff_t>(seg), w.end());
  if (!segmentFree(req, out.waypoints[0], out.waypoints[1])) return std::nullopt;
  return out;
}

GlobalPath choosePath(
  const std::shared_ptr<const GlobalPath>& prev, GlobalPath fresh, const PlanRequest& req,
  const ReplanOptions& opts)
{
  if (prev) {
    if (auto kept = reanchor(*prev, req)) {
      if (fresh.length() >= (1.0 - opts.switch_margin) * kept->length()) {
        return *kept;
      }
    }
  }
  return fresh;
}

LockstepPlanner::LockstepPlanner(PlanRequest base, ReplanOptions opts)
  : base_(std::move(base)), opts_(opts)
{
}

std::shared_ptr<const GlobalPath> LockstepPlanner::update(const Vec2& robot)
{
  PlanRequest req = base_;
  req.start = pushOut(req, robot);
  req.seed = deriveSeed(base_.seed, {stream::kPlanner, attempts_++});
  try {
    GlobalPath p = choosePath(latest_, plan(req, opts_.params), req, opts_);
    p.stamp = ++stamp_;
    latest_ = std::make_shared<const GlobalPath>(std::move(p));
    failures_ = 0;
  } catch (const NoPath&) {
    ++failures_;
  }
  return latest_;
}

PlannerService::PlannerService(PlanRequest base, ReplanOptions opts, std::chrono::milliseconds period)
  : base_(std::move(base)), opts_(opts), period_(period)
{
  worker_ = std::thread([this] { run(); });
}

PlannerService::~PlannerService() { stop(); }

void PlannerService::stop()
{
  {
    std::lock_guard<std::mutex> lk(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  if (worker_.joinable()) worker_.join();
}

void PlannerService::setRobot(const Vec2& robot)
{
  {
    std::lock_guard<std::mutex> lk(mu_);
    robot_ = robot;
  }
  cv_.notify_all();
}

std::shared_ptr<const GlobalPath> PlannerService::latest() const
{
  std::lock_guard<std::mutex> lk(mu_);
  return latest_;
}

std::shared_ptr<const GlobalPath> PlannerService::update(const Vec2& robot)
{
  setRobot(robot);
  return latest();
}

std::shared_ptr<const GlobalPath> PlannerService::waitNewer(
  std::uint64_t stamp, std::chrono::milliseconds timeout) const
{
  std::unique_lock<std::mutex> lk(mu_);
  cv_.wait_for(lk, timeout, [&] { return stop_ || (latest_ && latest_->stamp > stamp); });
  return latest_;
}

void PlannerService::run()
{
  std::uint64_t attempts = 0;
  std::uint64_t stamp = 0;
  int failures = 0;
  for (;;) {
    PlanRequest req = base_;
    {
      std::unique_lock<std::mutex> lk(mu_);
      cv_.wait(lk, [&] { return stop_ || robot_.has_value(); });
      if (stop_) return;
      req.start = *robot_;
    }
    const auto started = std::chrono::steady_clock::now();
    req.start = pushOut(req, req.start);
    req.seed = deriveSeed(base_.seed, {stream::kPlanner, attempts++});
    try {
      GlobalPath p = choosePath(latest(), plan(req, opts_.params), req, opts_);
      p.stamp = ++stamp;
      auto fresh = std::make_shared<const GlobalPath>(std::move(p));
      {
        std::lock_guard<std::mutex> lk(mu_);
        latest_ = std::move(fresh);
      }
      failures = 0;
      degraded_.store(false);
      cv_.notify_all();
    } catch (const NoPath&) {
      if (++failures >= opts_.degraded_after) degraded_.store(true);
    }
    std::unique_lock<std::mutex> lk(mu_);
    cv_.wait_until(lk, started + period_, [&] { return stop_; });
    if (stop_) return;
  }
}

}  // namespace crowdnav::planner
