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
#include <cstddef>
#include <string_view>

#include "crowdnav/world.hpp"

namespace crowdnav::metrics
{

/// Hall proxemic zones, nearest first.
enum class Zone : std::size_t
{
  intimate = 0,
  personal = 1,
  social = 2,
  public_space = 3
};

inline constexpr std::size_t kZoneCount = 4;
inline constexpr std::array<Zone, kZoneCount> kAllZones{
  Zone::intimate, Zone::personal, Zone::social, Zone::public_space};

std::string_view zoneName(Zone z);

/// Upper edges of the first three bands (closed); the public band is unbounded.
struct ZoneBands
{
  double intimate{0.45};
  double personal{1.2};
  double social{3.6};
  // Surface-to-surface distance when true, centre-to-centre otherwise.
  bool surface_distance{true};
};

Zone zoneOfDistance(double d, const ZoneBands& bands);
Zone zoneOf(const sim::RobotState& robot, const sim::HumanAgent& human, const ZoneBands& bands);

/// Per-human zone occupancy over one episode.
struct ZoneStats
{
  std::array<long, kZoneCount> steps{};
  std::array<bool, kZoneCount> entered{};
  long total_steps{0};

  void record(Zone z)
  {
    const auto i = static_cast<std::size_t>(z);
    ++steps[i];
    entered[i] = true;
    ++total_steps;
  }
};

}  // namespace crowdnav::metrics
