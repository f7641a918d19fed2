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

#include "crowdnav/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "crowdnav/errors.hpp"
#include "crowdnav/qp.hpp"

namespace crowdnav::mpc
{

void validate(const MpcConfig& cfg)
{
  auto pd = [](const Eigen::Matrix2d& m) {
    return m.isApprox(m.transpose()) && Eigen::LLT<Eigen::Matrix2d>(m).info() == Eigen::Success;
  };
  if (cfg.horizon <= 0) throw ConfigError("mpc.horizon must be positive");
  if (!pd(cfg.Q)) throw ConfigError("mpc.Q must be symmetric positive definite");
  if (!pd(cfg.R)) throw ConfigError("mpc.R must be symmetric positive definite");
  if (!(cfg.xi > 0.0 && cfg.xi <= 1.0)) throw ConfigError("mpc.xi must lie in (0, 1]");
  if (!(cfg.dt > 0.0)) throw ConfigError("mpc.dt must be positive");
  if (!(cfg.v_max > 0.0)) throw ConfigError("mpc.v_max must be positive");
  if (cfg.sqp_iters <= 0) throw ConfigError("mpc.sqp_iters must be positive");
  if (!(cfg.slack_weight > 0.0)) throw ConfigError("mpc.slack_weight must be positive");
  if (cfg.speed_facets < 4) throw ConfigError("mpc.speed_facets must be at least 4");
  if (!(cfg.robot_radius > 0.0) || cfg.safety_margin < 0.0) {
    throw ConfigError("mpc.robot_radius must be positive and safety_margin non-negative");
  }
}

ObstacleTrack extrapolate(const Vec2& position, const Vec2& velocity, double radius, int horizon, double dt)
{
  ObstacleTrack t;
  t.radius = radius;
  t.positions.reserve(static_cast<std::size_t>(horizon) + 1);
  for (int k = 0; k <= horizon; ++k) {
    t.positions.push_back(position + velocity * (dt * k));
  }
  return t;
}

double safetyDistance(const ObstacleTrack& track, const MpcConfig& cfg)
{
  return cfg.robot_radius + track.radius + cfg.safety_margin;
}

double psi(const Vec2& x, const Vec2& obstacle, double eta_safe)
{
  return squaredNorm(x - obstacle) - eta_safe * eta_safe;
}

double cbfResidual(
  const Vec2& x_t, const Vec2& x_t1, const Vec2& obs_t, const Vec2& obs_t1, double xi, double eta_safe)
{
  const double p0 = psi(x_t, obs_t, eta_safe);
  const double p1 = psi(x_t1, obs_t1, eta_safe);
  return p1 - p0 + xi * p0;
}

std::string toString(SolveStatus s)
{
  switch (s) {
    case SolveStatus::optimal:
      return "optimal";
    case SolveStatus::feasible_with_slack:
      return "feasible_with_slack";
    case SolveStatus::infeasible:
      return "infeasible";
  }
  return "unknown";
}

MpcProblem buildProblem(
  const sim::RobotState& current, const Vec2& target, std::vector<ObstacleTrack> tracks,
  const MpcConfig& cfg)
{
  validate(cfg);
  for (const auto& t : tracks) {
    if (t.positions.size() != static_cast<std::size_t>(cfg.horizon) + 1) {
      throw InvalidInput("obstacle track must hold horizon + 1 positions");
    }
  }
  return MpcProblem{current.position, target, std::move(tracks), cfg};
}

std::vector<Vec2> rollout(const Vec2& x0, const std::vector<Vec2>& controls, double dt)
{
  std::vector<Vec2> xs;
  xs.reserve(controls.size() + 1);
  xs.push_back(x0);
  for (const auto& u : controls) {
    xs.push_back(xs.back() + u * dt);
  }
  return xs;
}

namespace
{

struct Evaluation
{
  std::vector<Vec2> states;
  double cost{0.0};
  double violation{0.0};
  double max_violation{0.0};
  double min_psi{std::numeric_limits<double>::infinity()};
  std::vector<std::vector<double>> residuals;

  double merit(double w) const { return cost + w * violation; }
};

double quad(const Vec2& v, const Eigen::Matrix2d& H)
{
  const Eigen::Vector2d e(v.x, v.y);
  return 0.5 * e.dot(H * e);
}

Evaluation evaluate(const MpcProblem& p, const std::vector<Vec2>& u)
{
  const auto& cfg = p.cfg;
  Evaluation ev;
  ev.states = rollout(p.x0, u, cfg.dt);
  ev.cost = quad(ev.states.back() - p.target, cfg.Q);
  for (const auto& ut : u) ev.cost += quad(ut, cfg.R);
  ev.residuals.resize(p.tracks.size());
  for (std::size_t k = 0; k < p.tracks.size(); ++k) {
    const auto& tr = p.tracks[k];
    const double eta = safetyDistance(tr, cfg);
    for (int t = 0; t < cfg.horizon; ++t) {
      const auto ti = static_cast<std::size_t>(t);
      const double r = cbfResidual(
        ev.states[ti], ev.states[ti + 1], tr.positions[ti], tr.positions[ti + 1], cfg.xi, eta);
      ev.residuals[k].push_back(r);
      if (r < 0.0) {
        ev.violation -= r;
        ev.max_violation = std::max(ev.max_violation, -r);
      }
    }
    for (std::size_t t = 0; t < ev.states.size(); ++t) {
      ev.min_psi = std::min(ev.min_psi, psi(ev.states[t], tr.positions[t], eta));
    }
  }
  return ev;
}

struct QpData
{
  Eigen::MatrixXd G;
  Eigen::VectorXd g;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::Index fixed_rows{0};  // speed polygon + state box rows
};

// Rows that do not depend on the linearisation point.
QpData buildFixed(const MpcProblem& p)
{
  const auto& cfg = p.cfg;
  const int N = cfg.horizon;
  const Eigen::Index nu = 2 * N;
  const Eigen::Index K = static_cast<Eigen::Index>(p.cbfRowCount());
  const Eigen::Index nz = nu + K;
  const int F = cfg.speed_facets;
  const Eigen::Index rows = static_cast<Eigen::Index>(F) * N + 4 * N + 2 * K;
  const double dt = cfg.dt;

  QpData qp;
  qp.G = Eigen::MatrixXd::Zero(nz, nz);
  qp.g = Eigen::VectorXd::Zero(nz);
  for (int s = 0; s < N; ++s) {
    for (int t = 0; t < N; ++t) {
      qp.G.block<2, 2>(2 * s, 2 * t) = dt * dt * cfg.Q;
    }
    qp.G.block<2, 2>(2 * s, 2 * s) += cfg.R;
    const Eigen::Vector2d off(p.x0.x - p.target.x, p.x0.y - p.target.y);
    qp.g.segment<2>(2 * s) = dt * (cfg.Q * off);
  }
  for (Eigen::Index i = nu; i < nz; ++i) {
    qp.G(i, i) = cfg.slack_weight;
    qp.g(i) = cfg.slack_weight;
  }

  qp.A = Eigen::MatrixXd::Zero(rows, nz);
  qp.b = Eigen::VectorXd::Zero(rows);
  Eigen::Index row = 0;
  // inscribed polygon with a vertex on each axis direction
  const double apothem = cfg.v_max * std::cos(std::numbers::pi / F);
  for (int t = 0; t < N; ++t) {
    for (int f = 0; f < F; ++f) {
      const double a = (2 * f + 1) * std::numbers::pi / F;
      qp.A(row, 2 * t) = -std::cos(a);
      qp.A(row, 2 * t + 1) = -std::sin(a);
      qp.b(row) = -apothem;
      ++row;
    }
  }
  const Vec2 lo{std::min(cfg.state_bounds.lo.x, p.x0.x), std::min(cfg.state_bounds.lo.y, p.x0.y)};
  const Vec2 hi{std::max(cfg.state_bounds.hi.x, p.x0.x), std::max(cfg.state_bounds.hi.y, p.x0.y)};
  for (int t = 1; t <= N; ++t) {
    for (int c = 0; c < 2; ++c) {
      const double x0c = c == 0 ? p.x0.x : p.x0.y;
      const double loc = c == 0 ? lo.x : lo.y;
      const double hic = c == 0 ? hi.x : hi.y;
      for (int s = 0; s < t; ++s) {
        qp.A(row, 2 * s + c) = dt;
        qp.A(row + 1, 2 * s + c) = -dt;
      }
      qp.b(row) = loc - x0c;
      qp.b(row + 1) = x0c - hic;
      row += 2;
    }
  }
  qp.fixed_rows = row;
  for (Eigen::Index k = 0; k < K; ++k) {
    qp.A(row + K + k, nu + k) = 1.0;  // slack >= 0
  }
  return qp;
}

// Fills the linearised barrier rows around controls `u`.
void linearise(const MpcProblem& p, const std::vector<Vec2>& u, const Evaluation& ev, QpData& qp)
{
  const auto& cfg = p.cfg;
  const int N = cfg.horizon;
  const Eigen::Index nu = 2 * N;
  const double dt = cfg.dt;
  Eigen::Index row = qp.fixed_rows;
  for (std::size_t k = 0; k < p.tracks.size(); ++k) {
    const auto& tr = p.tracks[k];
    for (int t = 0; t < N; ++t) {
      const auto ti = static_cast<std::size_t>(t);
      const Vec2 g1 = (ev.states[ti + 1] - tr.positions[ti + 1]) * 2.0;
      const Vec2 g0 = (ev.states[ti] - tr.positions[ti]) * (2.0 * (1.0 - cfg.xi));
      auto a = qp.A.row(row);
      a.head(nu).setZero();
      double a_dot_u = 0.0;
      for (int s = 0; s <= t; ++s) {
        Vec2 c = g1 * dt;
        if (s < t) {
          c -= g0 * dt;
        }
        a(2 * s) = c.x;
        a(2 * s + 1) = c.y;
        a_dot_u += dot(c, u[static_cast<std::size_t>(s)]);
      }
      const Eigen::Index slack = row - qp.fixed_rows;
      a.segment(nu, static_cast<Eigen::Index>(p.cbfRowCount())).setZero();
      a(nu + slack) = 1.0;
      qp.b(row) = -ev.residuals[k][ti] + a_dot_u;
      ++row;
    }
  }
}

bool withinFixedRows(const QpData& qp, const std::vector<Vec2>& u)
{
  Eigen::VectorXd z = Eigen::VectorXd::Zero(qp.G.rows());
  for (std::size_t t = 0; t < u.size(); ++t) {
    z(static_cast<Eigen::Index>(2 * t)) = u[t].x;
    z(static_cast<Eigen::Index>(2 * t + 1)) = u[t].y;
  }
  const Eigen::VectorXd s = qp.A.topRows(qp.fixed_rows) * z - qp.b.head(qp.fixed_rows);
  return s.minCoeff() >= -1e-12;
}

}  // namespace

MpcSolution solve(const MpcProblem& problem, const MpcSolution* warm_start)
{
  const auto& cfg = problem.cfg;
  const auto N = static_cast<std::size_t>(cfg.horizon);
  const double w = cfg.slack_weight;
  QpData qp = buildFixed(problem);

  std::vector<Vec2> u(N);
  if (warm_start != nullptr && warm_start->controls.size() == N &&
      withinFixedRows(qp, warm_start->controls)) {
    u = warm_start->controls;
  }
  Evaluation ev = evaluate(problem, u);

  MpcSolution sol;
  for (int iter = 1; iter <= cfg.sqp_iters; ++iter) {
    sol.iterations = iter;
    linearise(problem, u, ev, qp);
    const qp::QpResult res = qp::solveQp(qp.G, qp.g, qp.A, qp.b);
    if (res.status != qp::QpStatus::solved) {
      sol.status = SolveStatus::infeasible;
      sol.diagnostic = res.status == qp::QpStatus::singular ? "QP Hessian not positive definite"
                                                            : "QP subproblem failed";
      sol.controls = u;
      sol.states = ev.states;
      sol.cost = ev.cost;
      sol.min_psi = ev.min_psi;
      sol.max_slack = ev.max_violation;
      sol.residuals = ev.residuals;
      return sol;
    }
    std::vector<Vec2> dir(N);
    double dir_norm2 = 0.0;
    for (std::size_t t = 0; t < N; ++t) {
      dir[t] = Vec2{res.x(static_cast<Eigen::Index>(2 * t)), res.x(static_cast<Eigen::Index>(2 * t + 1))} - u[t];
      dir_norm2 += squaredNorm(dir[t]);
    }
    const double dir_norm = std::sqrt(dir_norm2);
    if (dir_norm < 1e-6) {
      for (std::size_t t = 0; t < N; ++t) u[t] += dir[t];
      ev = evaluate(problem, u);
      break;
    }
    const double m0 = ev.merit(w);
    double alpha = 1.0;
    bool accepted = false;
    std::vector<Vec2> trial(N);
    for (int ls = 0; ls < 8; ++ls, alpha *= 0.5) {
      for (std::size_t t = 0; t < N; ++t) trial[t] = u[t] + dir[t] * alpha;
      Evaluation tev = evaluate(problem, trial);
      if (tev.merit(w) <= m0 + 1e-12 * (1.0 + std::abs(m0))) {
        u = trial;
        ev = std::move(tev);
        accepted = true;
        break;
      }
    }
    if (!accepted || alpha * dir_norm < 1e-6) {
      break;
    }
  }

  sol.controls = u;
  sol.states = ev.states;
  sol.cost = ev.cost;
  sol.min_psi = problem.tracks.empty() ? std::numeric_limits<double>::infinity() : ev.min_psi;
  sol.max_slack = ev.max_violation;
  sol.residuals = ev.residuals;
  sol.status = ev.max_violation <= 1e-8 ? SolveStatus::optimal : SolveStatus::feasible_with_slack;
  return sol;
}

}  // namespace crowdnav::mpc
