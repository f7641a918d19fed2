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
#include <initializer_list>
#include <random>

namespace crowdnav
{

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z)
{
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent child seed from a root seed and a path of counters.
/// All randomness in the project is keyed this way so that, e.g., episode k of
/// a batch sees the same crowd regardless of which policy drives the robot.
constexpr std::uint64_t deriveSeed(std::uint64_t root, std::initializer_list<std::uint64_t> path)
{
  std::uint64_t s = mix64(root);
  for (std::uint64_t p : path) {
    s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
  }
  return s;
}

using Rng = std::mt19937_64;

inline Rng makeRng(std::uint64_t root, std::initializer_list<std::uint64_t> path = {})
{
  return Rng(deriveSeed(root, path));
}

// Stream tags used with deriveSeed.
namespace stream
{
inline constexpr std::uint64_t kScenario = 1;
inline constexpr std::uint64_t kGoalResample = 2;
inline constexpr std::uint64_t kPlanner = 3;
inline constexpr std::uint64_t kTraining = 4;
inline constexpr std::uint64_t kEpisode = 5;
}  // namespace stream

}  // namespace crowdnav
