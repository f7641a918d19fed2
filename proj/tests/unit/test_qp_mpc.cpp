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
#include <limits>
#include <random>

#include "crowdnav/errors.hpp"
#include "crowdnav/mpc.hpp"
#include "crowdnav/qp.hpp"

using namespace crowdnav;
using namespace crowdnav::mpc;

namespace
{

// Exhaustive active-set enumeration for min 0.5 x'Gx + g'x s.t. Ax >= b.
Eigen::VectorXd bruteForceQp(const Eigen::MatrixXd& G, const Eigen::VectorXd& g, const Eigen::MatrixXd& A, const Eigen::VectorXd& b)
{
  const int n = static_cast<int>(G.rows());
  const int m = static_cast<int>(A.rows());
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x;
  for (int mask = 0; mask < (1 << m); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < m; ++i) if (mask & (1 << i)) act.push_back(i);
    if (static_cast<int>(act.size()) > n) continue;
    const int k = static_cast<int>(act.size());
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd rhs(n + k);
    K.topLeftCorner(n, n) = G;
    rhs.head(n) = -g;
    for (int j = 0; j < k; ++j) {
      K.block(0, n + j, n, 1) = -A.row(act[j]).transpose();
      K.block(n + j, 0, 1, n) = A.row(act[j]);
      rhs(n + j) = b(act[j]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (lu.rank() < n + k) continue;
    const Eigen::VectorXd s = lu.solve(rhs);
    const Eigen::VectorXd x = s.head(n);
    if (((A * x - b).array() < -1e-9).any()) continue;
    if ((s.tail(k).array() < -1e-9).any()) continue;
    const double f = 0.5 * x.dot(G * x) + g.dot(x);
    if (f < best) {
      best = f;
      best_x = x;
    }
  }
  return best_x;
}

MpcConfig defaults()
{
  MpcConfig c;
  c.state_bounds = {{-50.0, -50.0}, {50.0, 50.0}};
  return c;
}

MpcProblem freeProblem(Vec2 x0, Vec2 target)
{
  sim::RobotState r;
  r.position = x0;
  return buildProblem(r, target, {}, defaults());
}

ObstacleTrack still(Vec2 p, double radius, int horizon)
{
  return extrapolate(p, {0.0, 0.0}, radius, horizon, 0.25);
}

double merit(const MpcSolution& s, double w)
{
  double v = 0.0;
  for (const auto& row : s.residuals)
    for (double r : row) v += std::max(0.0, -r);
  return s.cost + w * v;
}

}  // namespace

TEST_CASE("qp matches exhaustive enumeration")
{
  std::mt19937_64 g(5);
  std::normal_distribution<double> nd(0.0, 1.0);
  int constrained = 0;
  for (int k = 0; k < 300; ++k) {
    const int n = 3;
    const int m = 5;
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i) for (int j = 0; j < n; ++j) M(i, j) = nd(g);
    const Eigen::MatrixXd G = M * M.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd gv(n);
    for (int i = 0; i < n; ++i) gv(i) = 3.0 * nd(g);
    Eigen::MatrixXd A(m, n);
    Eigen::VectorXd b(m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) A(i, j) = nd(g);
      // x = 0 is always feasible
      b(i) = -std::abs(nd(g));
    }
    const qp::QpResult r = qp::solveQp(G, gv, A, b);
    REQUIRE((r.status == qp::QpStatus::solved));
    const Eigen::VectorXd ref = bruteForceQp(G, gv, A, b);
    REQUIRE(ref.size() == n);
    CHECK((r.x - ref).norm() <= 1e-8);
    CHECK(((A * r.x - b).array() >= -1e-9).all());
    CHECK((r.multipliers.array() >= -1e-12).all());
    constrained += r.active.empty() ? 0 : 1;
  }
  CHECK(constrained > 50);
}

TEST_CASE("qp reports infeasible and singular problems")
{
  Eigen::MatrixXd G = Eigen::MatrixXd::Identity(1, 1);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(1);
  Eigen::MatrixXd A(2, 1);
  A << 1.0, -1.0;
  Eigen::VectorXd b(2);
  b << 1.0, 0.0;  // x >= 1 and x <= 0
  CHECK((qp::solveQp(G, g, A, b).status == qp::QpStatus::infeasible));
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(1, 1);
  CHECK((qp::solveQp(S, g, A, b).status == qp::QpStatus::singular));
}

TEST_CASE("barrier function values")
{
  CHECK(psi({1.0, 0.0}, {0.0, 0.0}, 0.6) == doctest::Approx(0.64));
  CHECK(psi({0.6, 0.0}, {0.0, 0.0}, 0.6) == doctest::Approx(0.0));
  CHECK(psi({0.0, 0.0}, {0.0, 0.0}, 0.6) == doctest::Approx(-0.36));
  CHECK(cbfResidual({1, 0}, {1, 0}, {0, 0}, {0, 0}, 0.5, 0.6) == doctest::Approx(0.32));
  // moving obstacle: positions are indexed per step
  CHECK(cbfResidual({1, 0}, {1, 0}, {0, 0}, {0.5, 0}, 0.5, 0.6) ==
        doctest::Approx(psi({1, 0}, {0.5, 0}, 0.6) - 0.64 + 0.32));
}

TEST_CASE("problem shape")
{
  const MpcProblem p0 = freeProblem({0.3, -0.2}, {1.0, 0.0});
  CHECK(p0.controlCount() == 16);
  CHECK(p0.cbfRowCount() == 0);
  CHECK(p0.x0 == Vec2{0.3, -0.2});
  sim::RobotState r;
  std::vector<ObstacleTrack> tracks{still({2, 0}, 0.3, 8), still({0, 2}, 0.3, 8), still({-2, 0}, 0.3, 8)};
  const MpcProblem p3 = buildProblem(r, {1, 0}, tracks, defaults());
  CHECK(p3.cbfRowCount() == 24);
  tracks[1].positions.pop_back();
  CHECK_THROWS_AS(buildProblem(r, {1, 0}, tracks, defaults()), InvalidInput);
}

TEST_CASE("extrapolation and safety distance")
{
  const ObstacleTrack t = extrapolate({1, 1}, {0.4, -0.2}, 0.3, 8, 0.25);
  REQUIRE(t.positions.size() == 9);
  CHECK(t.positions[8].x == doctest::Approx(1.8));
  CHECK(t.positions[8].y == doctest::Approx(0.6));
  CHECK(safetyDistance(t, defaults()) == doctest::Approx(0.65));
}

TEST_CASE("straight line optimum")
{
  // with u constant, x_N = N dt u; the minimiser of 0.5 q |N dt u - d|^2 + 0.5 N r |u|^2
  const double T = 8 * 0.25;
  const double u_star = 10.0 * T * 1.0 / (10.0 * T * T + 8 * 1.0);
  const MpcSolution s = solve(freeProblem({0, 0}, {1, 0}));
  CHECK((s.status == SolveStatus::optimal));
  CHECK(std::abs(s.controls[0].x - u_star) <= 1e-6);
  CHECK(std::abs(s.controls[0].y) <= 1e-6);
  CHECK(distance(s.states.back(), {T * u_star, 0.0}) <= 1e-3);
  CHECK(u_star == doctest::Approx(0.4167).epsilon(1e-4));

  const MpcSolution far = solve(freeProblem({0, 0}, {5, 0}));
  CHECK(std::abs(far.controls[0].x - 1.0) <= 1e-6);
  CHECK(std::abs(far.controls[0].y) <= 1e-6);
}

TEST_CASE("speed limit holds in every direction")
{
  for (int k = 0; k < 36; ++k) {
    const double a = k * 10.0 * std::acos(-1.0) / 180.0;
    const MpcSolution s = solve(freeProblem({0, 0}, {8 * std::cos(a), 8 * std::sin(a)}));
    for (const Vec2& u : s.controls) {
      CHECK(norm(u) <= 1.0 + 1e-9);
      CHECK(std::abs(u.x) <= 1.0 + 1e-9);
      CHECK(std::abs(u.y) <= 1.0 + 1e-9);
    }
    // the polygon keeps at least cos(pi/16) of the full speed
    CHECK(norm(s.controls[0]) >= std::cos(std::acos(-1.0) / 16) - 1e-9);
  }
}

TEST_CASE("obstacle on the straight line")
{
  sim::RobotState r;
  std::vector<ObstacleTrack> tracks{still({1.5, 0.0}, 0.3, 8)};
  const MpcProblem p = buildProblem(r, {3.0, 0.0}, tracks, defaults());
  const MpcSolution s = solve(p);
  REQUIRE((s.status == SolveStatus::optimal));
  CHECK(s.min_psi >= -1e-6);
  const double eta = safetyDistance(tracks[0], p.cfg);
  for (std::size_t t = 0; t < 8; ++t) {
    const double res = cbfResidual(s.states[t], s.states[t + 1], tracks[0].positions[t],
                                   tracks[0].positions[t + 1], p.cfg.xi, eta);
    CHECK(res >= -1e-6);
    CHECK(res == doctest::Approx(s.residuals[0][t]).epsilon(1e-12));
  }
}

TEST_CASE("warm start at the optimum is a fixed point")
{
  sim::RobotState r;
  std::vector<ObstacleTrack> tracks{still({1.5, 0.1}, 0.3, 8)};
  const MpcProblem p = buildProblem(r, {3.0, 0.0}, tracks, defaults());
  MpcSolution s = solve(p);
  // converge fully first
  for (int k = 0; k < 5; ++k) s = solve(p, &s);
  const MpcSolution again = solve(p, &s);
  CHECK(again.iterations == 1);
  for (std::size_t t = 0; t < 8; ++t) {
    CHECK(distance(again.controls[t], s.controls[t]) <= 1e-6);
  }
}

TEST_CASE("random problems: dynamics, bounds, invariance, merit")
{
  std::mt19937_64 g(17);
  std::uniform_real_distribution<double> pos(-4.0, 4.0);
  std::uniform_real_distribution<double> vel(-0.8, 0.8);
  int optimal = 0;
  for (int k = 0; k < 60; ++k) {
    sim::RobotState r;
    r.position = {pos(g), pos(g)};
    const Vec2 target = r.position + Vec2{vel(g) * 4, vel(g) * 4};
    std::vector<ObstacleTrack> tracks;
    for (int i = 0; i < 4; ++i) {
      Vec2 c{pos(g), pos(g)};
      if (distance(c, r.position) < 1.0) c = r.position + Vec2{1.2, 0.4};
      tracks.push_back(extrapolate(c, {vel(g), vel(g)}, 0.3, 8, 0.25));
    }
    const MpcProblem p = buildProblem(r, target, tracks, defaults());
    const MpcSolution s = solve(p);
    REQUIRE(s.states.size() == 9);
    const auto rolled = rollout(p.x0, s.controls, p.cfg.dt);
    for (std::size_t t = 0; t < rolled.size(); ++t) {
      CHECK(distance(rolled[t], s.states[t]) <= 1e-12);
    }
    if (s.status != SolveStatus::infeasible) {
      for (const Vec2& u : s.controls) CHECK(norm(u) <= p.cfg.v_max + 1e-9);
    }
    if (s.status == SolveStatus::optimal) {
      ++optimal;
      for (const auto& tr : tracks) {
        const double eta = safetyDistance(tr, p.cfg);
        const double before = psi(s.states[0], tr.positions[0], eta);
        const double after = psi(s.states[1], tr.positions[1], eta);
        CHECK(after >= (1.0 - p.cfg.xi) * before - 1e-6);
      }
    }

    // relabelling the obstacles changes nothing
    std::vector<ObstacleTrack> reversed(tracks.rbegin(), tracks.rend());
    const MpcSolution s2 = solve(buildProblem(r, target, reversed, defaults()));
    CHECK((s2.status == s.status));
    for (std::size_t t = 0; t < s.controls.size(); ++t) {
      CHECK(distance(s.controls[t], s2.controls[t]) <= 1e-7);
    }

    // merit never increases with more iterations
    double last = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= 6; ++it) {
      MpcProblem q = p;
      q.cfg.sqp_iters = it;
      const double m = merit(solve(q), p.cfg.slack_weight);
      CHECK(m <= last + 1e-9 * (1.0 + std::abs(last)));
      last = m;
    }
  }
  CHECK(optimal >= 40);
}

TEST_CASE("config validation")
{
  MpcConfig c = defaults();
  c.xi = 0.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = defaults();
  c.Q(0, 1) = 100.0;
  c.Q(1, 0) = 100.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = defaults();
  c.horizon = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
}
