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

#include "crowdnav/metrics.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "crowdnav/errors.hpp"

namespace crowdnav::metrics
{

std::string_view zoneName(Zone z)
{
  switch (z) {
    case Zone::intimate:
      return "intimate";
    case Zone::personal:
      return "personal";
    case Zone::social:
      return "social";
    case Zone::public_space:
      return "public";
  }
  return "unknown";
}

Zone zoneOfDistance(double d, const ZoneBands& bands)
{
  if (d <= bands.intimate) return Zone::intimate;
  if (d <= bands.personal) return Zone::personal;
  if (d <= bands.social) return Zone::social;
  return Zone::public_space;
}

Zone zoneOf(const sim::RobotState& robot, const sim::HumanAgent& human, const ZoneBands& bands)
{
  double d = distance(robot.position, human.position);
  if (bands.surface_distance) {
    d -= robot.radius + human.radius;
  }
  return zoneOfDistance(d, bands);
}

BatchMetrics aggregate(std::span<const sim::EpisodeResult> results)
{
  if (results.empty()) {
    throw InvalidInput("aggregate: empty batch");
  }
  BatchMetrics m;
  m.episodes = static_cast<long>(results.size());
  double time_sum = 0.0;
  double length_sum = 0.0;
  double time_succ = 0.0;
  double length_succ = 0.0;
  std::array<double, kZoneCount> entered{};
  std::array<double, kZoneCount> time_frac{};
  for (const auto& r : results) {
    time_sum += r.duration;
    length_sum += r.path_length;
    if (r.success) {
      ++m.successes;
      time_succ += r.duration;
      length_succ += r.path_length;
    }
    for (const auto& h : r.per_human_zone_counts) {
      ++m.human_exposure;
      for (std::size_t z = 0; z < kZoneCount; ++z) {
        entered[z] += h.entered[z] ? 1.0 : 0.0;
        if (h.total_steps > 0) {
          time_frac[z] += static_cast<double>(h.steps[z]) / static_cast<double>(h.total_steps);
        }
      }
    }
  }
  const double n = static_cast<double>(m.episodes);
  m.success_rate = static_cast<double>(m.successes) / n;
  m.avg_time = time_sum / n;
  m.avg_path_length = length_sum / n;
  if (m.successes > 0) {
    m.avg_time_success = time_succ / static_cast<double>(m.successes);
    m.avg_path_length_success = length_succ / static_cast<double>(m.successes);
  }
  if (m.human_exposure > 0) {
    const double h = static_cast<double>(m.human_exposure);
    for (std::size_t z = 0; z < kZoneCount; ++z) {
      m.zone_entry_ratio[z] = entered[z] / h;
      m.zone_time_ratio[z] = time_frac[z] / h;
    }
  }
  return m;
}

std::string formatDouble(double v)
{
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string metricsCsvHeader()
{
  std::ostringstream os;
  os << "schema_version,scenario,policy,episodes,successes,human_exposure,success_rate,avg_time,"
        "avg_path_length,avg_time_success,avg_path_length_success";
  for (Zone z : kAllZones) os << ",entry_" << zoneName(z);
  for (Zone z : kAllZones) os << ",time_" << zoneName(z);
  return os.str();
}

std::string metricsCsvRow(const std::string& scenario, const std::string& policy, const BatchMetrics& m)
{
  auto opt = [](const std::optional<double>& v) { return v ? formatDouble(*v) : std::string("NA"); };
  std::ostringstream os;
  os << kMetricsCsvVersion << ',' << scenario << ',' << policy << ',' << m.episodes << ','
     << m.successes << ',' << m.human_exposure << ',' << formatDouble(m.success_rate) << ','
     << formatDouble(m.avg_time) << ',' << formatDouble(m.avg_path_length) << ','
     << opt(m.avg_time_success) << ',' << opt(m.avg_path_length_success);
  for (double v : m.zone_entry_ratio) os << ',' << formatDouble(v);
  for (double v : m.zone_time_ratio) os << ',' << formatDouble(v);
  return os.str();
}

}  // namespace crowdnav::metrics
