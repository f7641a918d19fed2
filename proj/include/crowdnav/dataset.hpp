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
#include <filesystem>
#include <string>
#include <vector>

namespace crowdnav::data
{

/// One (features, heuristic risk label) pair.
struct RiskSample
{
  std::vector<double> features;
  double label{0.0};
};

struct DatasetMeta
{
  std::size_t feature_dim{0};
  std::size_t sample_count{0};
  std::uint64_t seed{0};
  long episodes{0};
  // Labels are divided by this before training.
  double label_scale{100.0};
};

struct Dataset
{
  std::size_t feature_dim{0};
  std::vector<RiskSample> samples;
  DatasetMeta meta;
};

/// Sidecar metadata path for a dataset CSV.
std::filesystem::path metaPath(const std::filesystem::path& csv);

/// Writes `csv` (header feature_0..feature_{d-1},label) and its JSON sidecar.
/// Throws std::runtime_error when either file cannot be written.
void writeDataset(const Dataset& ds, const std::filesystem::path& csv);

/// Reads a dataset CSV and, when present, its sidecar. Throws FormatError with the
/// offending line on malformed input.
Dataset readDataset(const std::filesystem::path& csv);

}  // namespace crowdnav::data
