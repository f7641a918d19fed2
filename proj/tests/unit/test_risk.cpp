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

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "crowdnav/dataset.hpp"
#include "crowdnav/errors.hpp"
#include "crowdnav/risk.hpp"
#include "risk_oracle.hpp"

using namespace crowdnav;
using namespace crowdnav::risk;

namespace
{

sim::Snapshot bare()
{
  sim::Snapshot s;
  s.robot.position = {0.0, 0.0};
  s.goal = {5.0, 0.0};
  return s;
}

sim::HumanAgent human(int id, Vec2 p, Vec2 v)
{
  sim::HumanAgent h;
  h.id = id;
  h.position = p;
  h.velocity = v;
  return h;
}

sim::Snapshot shifted(sim::Snapshot s, Vec2 d)
{
  s.robot.position += d;
  s.goal += d;
  for (auto& h : s.visible_humans) h.position += d;
  for (auto& o : s.obstacles) o.center += d;
  return s;
}

std::filesystem::path scratch(const std::string& name)
{
  auto dir = std::filesystem::temp_directory_path() / "crowdnav_test_risk";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("candidate rings")
{
  const sim::Snapshot s = bare();
  const std::vector<double> radii{1.0, 2.0};
  const auto c = sampleCandidates(s, 8, radii);
  REQUIRE(c.size() == 16);
  for (const auto& w : c) {
    CHECK(distance(w.position, s.robot.position) <= 2.0 + 1e-12);
    CHECK((w.source == CandidateSource::local_sample));
  }
  const std::vector<double> one{1.0};
  const auto single = sampleCandidates(s, 1, one);
  REQUIRE(single.size() == 1);
  CHECK(single[0].position.x == doctest::Approx(1.0));
  CHECK(single[0].position.y == doctest::Approx(0.0));
  const std::vector<double> too_far{6.0};
  CHECK_THROWS_AS(sampleCandidates(s, 4, too_far), InvalidInput);
}

TEST_CASE("path risk of a lone obstacle")
{
  sim::Snapshot s = bare();
  s.robot.position = {-0.5, 0.0};
  s.obstacles.push_back({{1.0, 0.0}, 0.3});
  HeuristicParams hp;
  hp.samples_per_segment = 2;
  const PathRisk r = pathRisk(s, {0.0, 0.0}, hp);
  CHECK_FALSE(r.collision);
  CHECK(r.value == doctest::Approx(1.25).epsilon(1e-12));
}

TEST_CASE("path risk in an empty world is negligible")
{
  const PathRisk r = pathRisk(bare(), {1.0, 0.0}, HeuristicParams{});
  CHECK(r.value < 1e-5);
  CHECK_FALSE(r.collision);
}

TEST_CASE("a sample inside a disc saturates the total")
{
  sim::Snapshot s = bare();
  s.obstacles.push_back({{1.0, 0.0}, 0.5});
  const RiskBreakdown b = totalRisk(s, {2.0, 0.0}, HeuristicParams{});
  CHECK(b.collision);
  CHECK(b.total == 100.0);
}

TEST_CASE("orientation contributions")
{
  HeuristicParams hp;
  hp.samples_per_segment = 2;
  sim::Snapshot s = bare();
  SUBCASE("parallel")
  {
    s.visible_humans.push_back(human(0, {1.0, 1.0}, {0.8, 0.0}));
    CHECK(orientationRisk(s, {1.0, 0.0}, hp) == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-12));
  }
  SUBCASE("head-on")
  {
    s.visible_humans.push_back(human(0, {3.0, 0.0}, {-0.8, 0.0}));
    CHECK(orientationRisk(s, {1.0, 0.0}, hp) == doctest::Approx(2.0 * std::exp(1.0)).epsilon(1e-12));
  }
  SUBCASE("perpendicular")
  {
    s.visible_humans.push_back(human(0, {1.0, 2.0}, {0.0, -0.5}));
    CHECK(orientationRisk(s, {1.0, 0.0}, hp) == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("zero-length heading")
  {
    s.visible_humans.push_back(human(0, {1.0, 2.0}, {0.0, -0.5}));
    CHECK(orientationRisk(s, s.robot.position, hp) == 0.0);
  }
}

TEST_CASE("goal distance")
{
  CHECK(goalDist({0.0, 0.0}, {4.0, 3.0}) == doctest::Approx(5.0));
  CHECK(goalDist({2.0, 2.0}, {2.0, 2.0}) == 0.0);
  CHECK(goalDist({1.0, 1.0}, {1.0, 2.0}) == doctest::Approx(1.0));
}

TEST_CASE("direction penalty")
{
  CHECK(dirPenalty({0.0, 0.0}, {2.0, 0.0}, {5.0, 0.0}, 1.0) == doctest::Approx(0.0));
  CHECK(dirPenalty({0.0, 0.0}, {-2.0, 0.0}, {5.0, 0.0}, 1.0) == doctest::Approx(2.0));
  CHECK(dirPenalty({0.0, 0.0}, {0.0, 2.0}, {5.0, 0.0}, 0.5) == doctest::Approx(0.5));
}

TEST_CASE("empty world total is the goal term")
{
  HeuristicParams hp;
  const RiskBreakdown b = totalRisk(bare(), {1.0, 0.0}, hp);
  CHECK(b.goal_dist == doctest::Approx(4.0));
  CHECK(b.dir_penalty == doctest::Approx(0.0));
  CHECK(b.orientation == 0.0);
  CHECK(b.total == doctest::Approx(4.0).epsilon(1e-5));
}

TEST_CASE("random snapshots agree with the oracle")
{
  std::mt19937_64 g(2024);
  HeuristicParams hp;
  for (int k = 0; k < 300; ++k) {
    const sim::Snapshot s = oracle::randomSnapshot(g);
    for (const auto& c : sampleCandidates(s, 12, std::vector<double>{1.5, 3.0})) {
      const RiskBreakdown b = totalRisk(s, c.position, hp);
      const oracle::RiskTerms o = oracle::heuristicRisk(s, c.position.x, c.position.y, hp);
      REQUIRE(b.collision == o.collision);
      CHECK(std::abs(b.total - o.total) <= 1e-9);
      CHECK(std::abs(b.orientation - o.orientation) <= 1e-9);
      CHECK(std::abs(b.dir_penalty - o.dir) <= 1e-9);
      if (!b.collision) {
        CHECK(std::abs(b.path - o.path) <= 1e-9);
        // additivity is exact, not approximate
        CHECK(b.total == b.path + b.orientation + b.goal_dist + b.dir_penalty);
      }
    }
  }
}

TEST_CASE("term bounds")
{
  std::mt19937_64 g(7);
  HeuristicParams hp;
  for (int k = 0; k < 200; ++k) {
    const sim::Snapshot s = oracle::randomSnapshot(g);
    for (const auto& c : sampleCandidates(s, 12, std::vector<double>{1.5, 3.0})) {
      const RiskBreakdown b = totalRisk(s, c.position, hp);
      CHECK(b.dir_penalty >= 0.0);
      CHECK(b.dir_penalty <= 2.0 * hp.lambda_dir + 1e-12);
      if (!s.visible_humans.empty()) {
        const double n = hp.samples_per_segment;
        CHECK(b.orientation >= n * std::exp(-1.0) - 1e-12);
        CHECK(b.orientation <= n * std::exp(1.0) + 1e-12);
      }
    }
  }
}

TEST_CASE("translation invariance")
{
  std::mt19937_64 g(11);
  std::uniform_real_distribution<double> d(-20.0, 20.0);
  HeuristicParams hp;
  for (int k = 0; k < 200; ++k) {
    const sim::Snapshot s = oracle::randomSnapshot(g);
    const Vec2 shift{d(g), d(g)};
    const sim::Snapshot t = shifted(s, shift);
    for (const auto& c : sampleCandidates(s, 6, std::vector<double>{2.0})) {
      const RiskBreakdown a = totalRisk(s, c.position, hp);
      const RiskBreakdown b = totalRisk(t, c.position + shift, hp);
      CHECK(a.collision == b.collision);
      CHECK(std::abs(a.path - b.path) <= 1e-9);
      CHECK(std::abs(a.orientation - b.orientation) <= 1e-9);
      CHECK(std::abs(a.goal_dist - b.goal_dist) <= 1e-9);
      CHECK(std::abs(a.dir_penalty - b.dir_penalty) <= 1e-9);
    }
  }
}

TEST_CASE("path risk is monotone in the clearance at its worst point")
{
  HeuristicParams hp;
  double last = 0.0;
  // obstacle slides toward the segment; the closest sample is the candidate itself
  for (double gap = 2.0; gap >= 0.0; gap -= 0.05) {
    sim::Snapshot s = bare();
    s.obstacles.push_back({{2.0, 0.5 + gap}, 0.5});
    const PathRisk r = pathRisk(s, {2.0, 0.0}, hp);
    CHECK(r.value >= last);
    last = r.value;
  }
}

TEST_CASE("feature layout")
{
  sim::Snapshot s = bare();
  const FeatureVector empty = featurize(s, {1.0, 0.0});
  for (std::size_t i = 9; i < kFeatureDim; ++i) {
    CHECK(empty[i] == 0.0);
  }
  CHECK(empty[2] == doctest::Approx(5.0));
  CHECK(empty[6] == doctest::Approx(4.0));
  CHECK(empty[7] == kFeatureFarDistance);

  for (int i = 0; i < 7; ++i) {
    s.visible_humans.push_back(human(i, {0.0, 0.8 + 0.5 * i}, {0.1 * i, 0.0}));
  }
  const FeatureVector f = featurize(s, {1.0, 0.0});
  for (std::size_t k = 0; k < kFeatureHumans; ++k) {
    const std::size_t o = 9 + k * kFeaturesPerHuman;
    CHECK(f[o + 5] == 1.0);
    // nearest five, in order of clearance
    CHECK(f[o + 4] == doctest::Approx(0.8 + 0.5 * static_cast<double>(k) - 0.6));
  }
}

TEST_CASE("featurize ignores input order of humans")
{
  std::mt19937_64 g(3);
  for (int k = 0; k < 100; ++k) {
    sim::Snapshot s = oracle::randomSnapshot(g);
    const Vec2 p = s.robot.position + Vec2{1.0, 0.5};
    const FeatureVector a = featurize(s, p);
    std::shuffle(s.visible_humans.begin(), s.visible_humans.end(), g);
    const FeatureVector b = featurize(s, p);
    CHECK(a == b);
  }
}

TEST_CASE("parameter validation")
{
  HeuristicParams hp;
  hp.samples_per_segment = 1;
  CHECK_THROWS_AS(validate(hp), ConfigError);
  hp = {};
  hp.eps_d = 0.0;
  CHECK_THROWS_AS(validate(hp), ConfigError);
}

TEST_CASE("dataset round trip")
{
  data::Dataset ds;
  ds.feature_dim = 3;
  ds.meta.seed = 99;
  ds.meta.episodes = 2;
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    ds.samples.push_back({{u(g), u(g) * 1e-7, u(g) * 1e9}, std::abs(u(g)) * 100.0});
  }
  const auto path = scratch("round.csv");
  data::writeDataset(ds, path);
  const data::Dataset back = data::readDataset(path);
  CHECK(back.feature_dim == 3);
  CHECK(back.meta.seed == 99);
  CHECK(back.meta.sample_count == 50);
  REQUIRE(back.samples.size() == ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    CHECK(back.samples[i].features == ds.samples[i].features);
    CHECK(back.samples[i].label == ds.samples[i].label);
  }
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "feature_0,feature_1,feature_2,label");
}

TEST_CASE("dataset format errors carry line numbers")
{
  const auto path = scratch("bad.csv");
  {
    std::ofstream out(path);
    out << "feature_0,feature_1,label\n1,2,3\n1,zz,3\n";
  }
  try {
    (void)data::readDataset(path);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(e.line() == 3);
  }
  {
    std::ofstream out(path);
    out << "feature_0,feature_1,label\n1,2,3\n1,2\n";
  }
  CHECK_THROWS_AS(data::readDataset(path), FormatError);
}
