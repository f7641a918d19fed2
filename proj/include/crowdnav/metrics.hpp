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

#include <array>
#include <optional>
#include <span>
#include <string>

#include "crowdnav/episode.hpp"
#include "crowdnav/zones.hpp"

namespace crowdnav::metrics
{

/// Navigation and proxemic statistics over a batch of episodes.
struct BatchMetrics
{
  long episodes{0};
  long successes{0};
  double success_rate{0.0};
  double avg_time{0.0};
  double avg_path_length{0.0};
  // Empty when no episode succeeded.
  std::optional<double> avg_time_success;
  std::optional<double> avg_path_length_success;
  // Fraction of humans that ever entered each zone.
  std::array<double, kZoneCount> zone_entry_ratio{};
  // Mean fraction of time a human spent in each zone.
  std::array<double, kZoneCount> zone_time_ratio{};
  long human_exposure{0};
};

/// Throws InvalidInput on an empty batch.
BatchMetrics aggregate(std::span<const sim::EpisodeResult> results);

inline constexpr int kMetricsCsvVersion = 1;

/// Column list of the metrics CSV (schema version kMetricsCsvVersion).
std::string metricsCsvHeader();
std::string metricsCsvRow(
  const std::string& scenario, const std::string& policy, const BatchMetrics& m);

/// Shortest round-trip decimal representation.
std::string formatDouble(double v);

}  // namespace crowdnav::metrics
