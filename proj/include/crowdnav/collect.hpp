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
#include <vector>

#include "crowdnav/dataset.hpp"
#include "crowdnav/policy.hpp"
#include "crowdnav/world.hpp"

/// Offline risk-label generation from heuristic-risk MPC rollouts.
namespace crowdnav::collect
{

/// Wraps the heuristic policy and turns every decision into samples:
/// one (features, clamped total risk) pair per candidate.
class RecordingPolicy : public sim::NavigationPolicy
{
public:
  explicit RecordingPolicy(const policy::PolicyConfig& cfg);

  std::string name() const override { return inner_.name(); }
  void reset(const sim::WorldState& initial, std::uint64_t seed) override;
  Vec2 act(const sim::Snapshot& snap) override;

  std::vector<data::RiskSample>& samples() { return samples_; }
  long decisions() const { return decisions_; }

private:
  policy::RiskMpcPolicy inner_;
  double risk_max_;
  policy::DecisionTrace trace_;
  std::vector<data::RiskSample> samples_;
  long decisions_{0};
};

/// Seed of episode `index` within a batch rooted at `root`. `cell` keeps
/// scenario cells apart while staying identical across policies.
std::uint64_t episodeSeed(std::uint64_t root, std::uint64_t cell, std::uint64_t index);

struct CollectStats
{
  long episodes{0};
  long decisions{0};
  long successes{0};
};

/// Runs `episodes` heuristic-risk episodes, cycling through `scenarios`, and
/// merges their samples in episode order. The policy kind is forced to hr_mpc.
data::Dataset collectDataset(
  const std::vector<sim::ScenarioConfig>& scenarios, const policy::PolicyConfig& cfg,
  long episodes, std::uint64_t seed, int workers = 1, CollectStats* stats = nullptr);

}  // namespace crowdnav::collect
