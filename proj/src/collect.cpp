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

#include "crowdnav/collect.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#include "crowdnav/episode.hpp"
#include "crowdnav/errors.hpp"
#include "crowdnav/parallel.hpp"
#include "crowdnav/rng.hpp"

namespace crowdnav
{

int workersFromEnv(int fallback)
{
  if (const char* env = std::getenv("CROWDNAV_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return fallback;
}

namespace collect
{

namespace
{

policy::PolicyConfig heuristicConfig(policy::PolicyConfig cfg)
{
  cfg.kind = policy::PolicyKind::hr_mpc;
  cfg.async_planner = false;
  return cfg;
}

}  // namespace

RecordingPolicy::RecordingPolicy(const policy::PolicyConfig& cfg)
  : inner_(heuristicConfig(cfg)), risk_max_(cfg.heuristic.risk_max)
{
  inner_.setTraceSink([this](const policy::DecisionTrace& tr) { trace_ = tr; });
}

void RecordingPolicy::reset(const sim::WorldState& initial, std::uint64_t seed)
{
  inner_.reset(initial, seed);
}

Vec2 RecordingPolicy::act(const sim::Snapshot& snap)
{
  const Vec2 u = inner_.act(snap);
  ++decisions_;
  for (std::size_t i = 0; i < trace_.candidates.size(); ++i) {
    const auto f = risk::featurize(snap, trace_.candidates[i].position);
    const double label = std::clamp(trace_.heuristic[i].total, 0.0, risk_max_);
    samples_.push_back({std::vector<double>(f.begin(), f.end()), label});
  }
  return u;
}

std::uint64_t episodeSeed(std::uint64_t root, std::uint64_t cell, std::uint64_t index)
{
  return deriveSeed(root, {stream::kEpisode, cell, index});
}

data::Dataset collectDataset(
  const std::vector<sim::ScenarioConfig>& scenarios, const policy::PolicyConfig& cfg,
  long episodes, std::uint64_t seed, int workers, CollectStats* stats)
{
  if (scenarios.empty()) throw InvalidInput("collectDataset needs at least one scenario");
  if (episodes <= 0) throw InvalidInput("collectDataset needs a positive episode count");
  struct Slot
  {
    std::vector<data::RiskSample> samples;
    long decisions{0};
    bool success{false};
  };
  std::vector<Slot> slots(static_cast<std::size_t>(episodes));
  parallelFor(slots.size(), workers, [&](std::size_t k) {
    const std::size_t cell = k % scenarios.size();
    RecordingPolicy rec(cfg);
    sim::EpisodeOptions opts;
    opts.record_trajectory = false;
    const auto res = sim::runEpisode(rec, scenarios[cell], episodeSeed(seed, cell, k), opts);
    slots[k].samples = std::move(rec.samples());
    slots[k].decisions = rec.decisions();
    slots[k].success = res.success;
  });

  data::Dataset ds;
  ds.feature_dim = risk::kFeatureDim;
  CollectStats st;
  for (auto& s : slots) {
    st.decisions += s.decisions;
    st.successes += s.success ? 1 : 0;
    ds.samples.insert(
      ds.samples.end(), std::make_move_iterator(s.samples.begin()), std::make_move_iterator(s.samples.end()));
  }
  st.episodes = episodes;
  ds.meta.feature_dim = ds.feature_dim;
  ds.meta.sample_count = ds.samples.size();
  ds.meta.seed = seed;
  ds.meta.episodes = episodes;
  ds.meta.label_scale = cfg.heuristic.risk_max;
  if (stats) *stats = st;
  return ds;
}

}  // namespace collect
}  // namespace crowdnav
