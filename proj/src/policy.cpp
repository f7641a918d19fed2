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

#include "crowdnav/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crowdnav/errors.hpp"
#include "crowdnav/rng.hpp"

namespace crowdnav::policy
{

std::string toString(PolicyKind k)
{
  switch (k) {
    case PolicyKind::lr_mpc:
      return "lr_mpc";
    case PolicyKind::hr_mpc:
      return "hr_mpc";
    case PolicyKind::sf_baseline:
      return "sf_baseline";
  }
  return "unknown";
}

PolicyKind policyKindFromString(const std::string& s)
{
  if (s == "lr_mpc") return PolicyKind::lr_mpc;
  if (s == "hr_mpc") return PolicyKind::hr_mpc;
  if (s == "sf_baseline") return PolicyKind::sf_baseline;
  throw ConfigError("unknown policy '" + s + "' (expected lr_mpc, hr_mpc or sf_baseline)");
}

std::string toString(Fallback f)
{
  switch (f) {
    case Fallback::none:
      return "none";
    case Fallback::guidance:
      return "guidance";
    case Fallback::min_heuristic:
      return "min_heuristic";
    case Fallback::zero_velocity:
      return "zero_velocity";
    case Fallback::solver:
      return "solver";
  }
  return "unknown";
}

void validate(const PolicyConfig& cfg)
{
  risk::validate(cfg.heuristic);
  uncertainty::validate(cfg.thresholds);
  mpc::validate(cfg.mpc);
  if (cfg.candidates.per_ring <= 0 || cfg.candidates.radii.empty()) {
    throw ConfigError("policy.candidates: need at least one ring with a positive sample count");
  }
  for (double r : cfg.candidates.radii) {
    if (!(r > 0.0)) throw ConfigError("policy.ring_radii must be positive");
  }
  if (!(cfg.lookahead > 0.0)) throw ConfigError("policy.lookahead must be positive");
  if (cfg.tracked_humans < 0) throw ConfigError("policy.tracked_humans must be non-negative");
  if (!(cfg.slack_threshold >= 0.0)) throw ConfigError("policy.slack_threshold must be non-negative");
}

std::vector<mpc::ObstacleTrack> buildTracks(const sim::Snapshot& snap, const PolicyConfig& cfg)
{
  const int n = cfg.mpc.horizon;
  std::vector<mpc::ObstacleTrack> tracks;
  for (const auto& o : snap.obstacles) {
    tracks.push_back(mpc::extrapolate(o.center, {}, o.radius, n, cfg.mpc.dt));
  }
  std::vector<const sim::HumanAgent*> humans;
  for (const auto& h : snap.visible_humans) humans.push_back(&h);
  std::sort(humans.begin(), humans.end(), [&](const sim::HumanAgent* a, const sim::HumanAgent* b) {
    const double da = distance(a->position, snap.robot.position);
    const double db = distance(b->position, snap.robot.position);
    return da != db ? da < db : a->id < b->id;
  });
  const auto keep = std::min(humans.size(), static_cast<std::size_t>(cfg.tracked_humans));
  for (std::size_t i = 0; i < keep; ++i) {
    tracks.push_back(mpc::extrapolate(humans[i]->position, humans[i]->velocity, humans[i]->radius, n, cfg.mpc.dt));
  }
  return tracks;
}

std::vector<risk::CandidateWaypoint> makeCandidates(
  const sim::Snapshot& snap, const Vec2& guidance, const PolicyConfig& cfg)
{
  auto cands = risk::sampleCandidates(snap, cfg.candidates.per_ring, cfg.candidates.radii);
  if (cfg.candidates.include_guidance) {
    cands.push_back({guidance, risk::CandidateSource::global_guidance, std::nullopt, std::nullopt});
  }
  return cands;
}

std::size_t argminRisk(
  const std::vector<risk::CandidateWaypoint>& cands, const std::vector<risk::RiskBreakdown>& scores,
  const Vec2& goal)
{
  if (cands.empty() || cands.size() != scores.size()) {
    throw InvalidInput("argminRisk needs one score per candidate");
  }
  std::size_t best = 0;
  double best_gd = risk::goalDist(cands[0].position, goal);
  for (std::size_t i = 1; i < cands.size(); ++i) {
    const double gd = risk::goalDist(cands[i].position, goal);
    if (scores[i].total < scores[best].total || (scores[i].total == scores[best].total && gd < best_gd)) {
      best = i;
      best_gd = gd;
    }
  }
  return best;
}

namespace
{

// Runs the controller towards the trace target and fills control and telemetry.
void track(
  Decision& d, const sim::Snapshot& snap, const PolicyConfig& cfg, const mpc::MpcSolution* warm_start)
{
  DecisionTrace& tr = d.trace;
  if (!tr.target) {
    tr.control = {};
    d.control = {};
    return;
  }
  tr.tracks = buildTracks(snap, cfg);
  const auto problem = mpc::buildProblem(snap.robot, *tr.target, tr.tracks, cfg.mpc);
  mpc::MpcSolution sol = mpc::solve(problem, warm_start);
  tr.mpc_status = sol.status;
  tr.mpc_iterations = sol.iterations;
  tr.mpc_min_psi = sol.min_psi;
  tr.mpc_cost = sol.cost;
  tr.mpc_max_slack = sol.max_slack;
  tr.planned_states = sol.states;
  if (sol.status == mpc::SolveStatus::infeasible || sol.max_slack > cfg.slack_threshold) {
    tr.fallback = Fallback::solver;
    tr.control = {};
  } else {
    tr.control = clipNorm(sol.controls.front(), cfg.mpc.v_max);
  }
  d.control = tr.control;
  d.solution = std::move(sol);
}

std::vector<risk::RiskBreakdown> scoreAll(
  const sim::Snapshot& snap, const std::vector<risk::CandidateWaypoint>& cands,
  const risk::HeuristicParams& params)
{
  std::vector<risk::RiskBreakdown> out;
  out.reserve(cands.size());
  for (const auto& c : cands) out.push_back(risk::totalRisk(snap, c.position, params));
  return out;
}

}  // namespace

Decision decideHr(
  const sim::Snapshot& snap, const Vec2& guidance, const PolicyConfig& cfg,
  const mpc::MpcSolution* warm_start)
{
  Decision d;
  DecisionTrace& tr = d.trace;
  tr.time = snap.time;
  tr.guidance = guidance;
  tr.candidates = makeCandidates(snap, guidance, cfg);
  tr.heuristic = scoreAll(snap, tr.candidates, cfg.heuristic);
  for (std::size_t i = 0; i < tr.candidates.size(); ++i) {
    tr.candidates[i].risk = tr.heuristic[i].total;
  }
  const std::size_t best = argminRisk(tr.candidates, tr.heuristic, snap.goal);
  tr.selected = best;
  tr.target = tr.candidates[best].position;
  track(d, snap, cfg, warm_start);
  return d;
}

Decision decideLr(
  const sim::Snapshot& snap, const Vec2& guidance, const PolicyConfig& cfg,
  const penn::Ensemble& model, const mpc::MpcSolution* warm_start)
{
  Decision d;
  DecisionTrace& tr = d.trace;
  tr.time = snap.time;
  tr.guidance = guidance;
  tr.candidates = makeCandidates(snap, guidance, cfg);
  tr.predictions.reserve(tr.candidates.size());
  for (auto& c : tr.candidates) {
    const auto f = risk::featurize(snap, c.position);
    tr.predictions.push_back(penn::predict(model, f));
    c.risk = tr.predictions.back().mixture_mean;
  }
  tr.filter = uncertainty::filterCandidates(tr.candidates, tr.predictions, cfg.thresholds, snap.goal);
  for (std::size_t i = 0; i < tr.candidates.size(); ++i) {
    tr.candidates[i].passed_filters = tr.filter->candidates[i].passed();
  }
  if (tr.filter->selected) {
    tr.selected = tr.filter->selected;
    tr.target = tr.candidates[*tr.selected].position;
  } else {
    tr.heuristic = scoreAll(snap, tr.candidates, cfg.heuristic);
    const double rmax = cfg.heuristic.risk_max;
    const auto gi = std::find_if(tr.candidates.begin(), tr.candidates.end(), [](const auto& c) {
      return c.source == risk::CandidateSource::global_guidance;
    });
    if (gi != tr.candidates.end() && tr.heuristic[static_cast<std::size_t>(gi - tr.candidates.begin())].total < rmax) {
      tr.fallback = Fallback::guidance;
      tr.selected = static_cast<std::size_t>(gi - tr.candidates.begin());
    } else {
      const std::size_t best = argminRisk(tr.candidates, tr.heuristic, snap.goal);
      if (tr.heuristic[best].total < rmax) {
        tr.fallback = Fallback::min_heuristic;
        tr.selected = best;
      } else {
        tr.fallback = Fallback::zero_velocity;
      }
    }
    if (tr.selected) tr.target = tr.candidates[*tr.selected].position;
  }
  track(d, snap, cfg, warm_start);
  return d;
}

Vec2 decideSf(const sim::Snapshot& snap, const sim::SfParams& sf, double dt)
{
  const auto& r = snap.robot;
  Vec2 acc = sim::sfAccel(
    -1, r.position, r.velocity, snap.goal, r.radius, r.v_max, snap.visible_humans, snap.obstacles,
    nullptr, sf);
  // An exactly head-on human pushes straight back along the goal ray and the
  // robot would stall in front of it. Sidestep along the tie-break axis instead.
  const Vec2 heading = normalized(snap.goal - r.position);
  const Vec2 left{-heading.y, heading.x};
  for (const auto& h : snap.visible_humans) {
    const Vec2 off = h.position - r.position;
    const double along = off.x * heading.x + off.y * heading.y;
    const double across = off.x * left.x + off.y * left.y;
    if (along <= 0.0 || std::abs(across) > 1e-9 * std::max(1.0, along)) continue;
    const Vec2 axis = sim::tieBreakAxis(std::min(-1, h.id));
    const double side = axis.x * left.x + axis.y * left.y >= 0.0 ? 1.0 : -1.0;
    acc += left * (side * sf.human_A * std::exp(-(along - r.radius - h.radius) / sf.human_B));
  }
  return clipNorm(r.velocity + acc * dt, r.v_max);
}

mpc::MpcSolution shiftSolution(const mpc::MpcSolution& sol)
{
  mpc::MpcSolution out = sol;
  if (out.controls.size() > 1) {
    std::rotate(out.controls.begin(), out.controls.begin() + 1, out.controls.end());
    out.controls.back() = out.controls[out.controls.size() - 2];
  }
  return out;
}

RiskMpcPolicy::RiskMpcPolicy(PolicyConfig cfg, std::shared_ptr<const penn::Ensemble> model)
  : cfg_(std::move(cfg)), model_(std::move(model))
{
  validate(cfg_);
  if (cfg_.kind == PolicyKind::sf_baseline) {
    throw ConfigError("RiskMpcPolicy does not implement sf_baseline");
  }
  if (cfg_.kind == PolicyKind::lr_mpc && !model_) {
    throw ConfigError("lr_mpc requires a trained model");
  }
}

void RiskMpcPolicy::reset(const sim::WorldState& initial, std::uint64_t seed)
{
  planner::PlanRequest req;
  req.start = initial.robot.position;
  req.goal = initial.goal;
  req.obstacles = initial.obstacles;
  req.bounds = initial.arena;
  req.robot_radius = initial.robot.radius;
  req.seed = deriveSeed(seed, {stream::kPlanner});
  if (cfg_.async_planner) {
    planner_ = std::make_unique<planner::PlannerService>(req, cfg_.planner);
  } else {
    planner_ = std::make_unique<planner::LockstepPlanner>(req, cfg_.planner);
  }
  warm_.reset();
}

Vec2 RiskMpcPolicy::act(const sim::Snapshot& snap)
{
  if (!planner_) {
    throw std::logic_error("RiskMpcPolicy::act called before reset");
  }
  const auto path = planner_->update(snap.robot.position);
  // without any path yet, head straight for the goal
  const Vec2 guidance = path ? planner::currentGuidance(*path, snap.robot.position, cfg_.lookahead) : snap.goal;
  const mpc::MpcSolution* warm = warm_ ? &*warm_ : nullptr;
  Decision d = cfg_.kind == PolicyKind::lr_mpc ? decideLr(snap, guidance, cfg_, *model_, warm)
                                               : decideHr(snap, guidance, cfg_, warm);
  d.trace.path_stamp = path ? path->stamp : 0;
  d.trace.path = path;
  if (d.solution && d.trace.fallback != Fallback::solver) {
    warm_ = shiftSolution(*d.solution);
  } else {
    warm_.reset();
  }
  if (sink_) sink_(d.trace);
  return d.control;
}

std::shared_ptr<const penn::Ensemble> loadPolicyModel(const std::filesystem::path& path)
{
  penn::Ensemble ens;
  try {
    ens = penn::loadModel(path);
  } catch (const std::exception& e) {
    throw ConfigError("cannot load model '" + path.string() + "': " + e.what());
  }
  if (ens.featureDim() != risk::kFeatureDim) {
    throw ConfigError(
      "model feature dimension " + std::to_string(ens.featureDim()) + " does not match " +
      std::to_string(risk::kFeatureDim));
  }
  return std::make_shared<const penn::Ensemble>(std::move(ens));
}

std::unique_ptr<sim::NavigationPolicy> makePolicy(
  const PolicyConfig& cfg, std::shared_ptr<const penn::Ensemble> model)
{
  switch (cfg.kind) {
    case PolicyKind::sf_baseline:
      return std::make_unique<SocialForcePolicy>(cfg.sf);
    case PolicyKind::lr_mpc:
      if (!model) model = loadPolicyModel(cfg.model_path);
      return std::make_unique<RiskMpcPolicy>(cfg, std::move(model));
    case PolicyKind::hr_mpc:
      return std::make_unique<RiskMpcPolicy>(cfg, nullptr);
  }
  throw ConfigError("unknown policy kind");
}

}  // namespace crowdnav::policy
