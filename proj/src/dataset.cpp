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

#include "crowdnav/dataset.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "crowdnav/errors.hpp"
#include "crowdnav/metrics.hpp"

namespace crowdnav::data
{

std::filesystem::path metaPath(const std::filesystem::path& csv)
{
  std::filesystem::path p = csv;
  p += ".meta.json";
  return p;
}

void writeDataset(const Dataset& ds, const std::filesystem::path& csv)
{
  {
    std::ofstream os(csv, std::ios::binary | std::ios::trunc);
    if (!os) {
      throw std::runtime_error("cannot open " + csv.string() + " for writing");
    }
    for (std::size_t i = 0; i < ds.feature_dim; ++i) {
      os << "feature_" << i << ',';
    }
    os << "label\n";
    std::string line;
    for (const auto& s : ds.samples) {
      line.clear();
      for (double v : s.features) {
        line += metrics::formatDouble(v);
        line += ',';
      }
      line += metrics::formatDouble(s.label);
      line += '\n';
      os << line;
    }
    if (!os) {
      throw std::runtime_error("write failed for " + csv.string());
    }
  }
  nlohmann::ordered_json meta;
  meta["format"] = "crowdnav-risk-dataset";
  meta["version"] = 1;
  meta["feature_dim"] = ds.feature_dim;
  meta["sample_count"] = ds.samples.size();
  meta["seed"] = ds.meta.seed;
  meta["episodes"] = ds.meta.episodes;
  meta["label_scale"] = ds.meta.label_scale;
  std::ofstream ms(metaPath(csv), std::ios::binary | std::ios::trunc);
  ms << meta.dump(2) << '\n';
  if (!ms) {
    throw std::runtime_error("write failed for " + metaPath(csv).string());
  }
}

namespace
{

double parseNumber(std::string_view field, long line)
{
  double v = 0.0;
  const auto* end = field.data() + field.size();
  auto res = std::from_chars(field.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw FormatError("bad number '" + std::string(field) + "'", line);
  }
  return v;
}

}  // namespace

Dataset readDataset(const std::filesystem::path& csv)
{
  std::ifstream is(csv, std::ios::binary);
  if (!is) {
    throw ConfigError("cannot open dataset " + csv.string());
  }
  Dataset ds;
  std::string line;
  long line_no = 1;
  if (!std::getline(is, line)) {
    throw FormatError(csv.string() + ": empty dataset file", 1);
  }
  {
    std::size_t columns = 1;
    for (char c : line) columns += c == ',' ? 1 : 0;
    if (columns < 2 || line.substr(line.rfind(',') + 1) != "label") {
      throw FormatError(csv.string() + ": header must end in 'label'", 1);
    }
    ds.feature_dim = columns - 1;
  }
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    RiskSample s;
    s.features.reserve(ds.feature_dim);
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      const std::string_view field = rest.substr(0, comma);
      s.features.push_back(parseNumber(field, line_no));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (s.features.size() != ds.feature_dim + 1) {
      throw FormatError(
        csv.string() + ": expected " + std::to_string(ds.feature_dim + 1) + " columns, got " +
        std::to_string(s.features.size()), line_no);
    }
    s.label = s.features.back();
    s.features.pop_back();
    ds.samples.push_back(std::move(s));
  }
  ds.meta.feature_dim = ds.feature_dim;
  ds.meta.sample_count = ds.samples.size();
  if (std::filesystem::exists(metaPath(csv))) {
    std::ifstream ms(metaPath(csv));
    try {
      const auto meta = nlohmann::json::parse(ms);
      ds.meta.seed = meta.value("seed", std::uint64_t{0});
      ds.meta.episodes = meta.value("episodes", 0L);
      ds.meta.label_scale = meta.value("label_scale", 100.0);
      const auto dim = meta.value("feature_dim", ds.feature_dim);
      if (dim != ds.feature_dim) {
        throw FormatError(
          csv.string() + ": sidecar says feature dim " + std::to_string(dim) + ", CSV has " +
          std::to_string(ds.feature_dim));
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(metaPath(csv).string() + ": " + e.what());
    }
  }
  return ds;
}

}  // namespace crowdnav::data
