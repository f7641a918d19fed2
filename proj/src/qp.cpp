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

#include "crowdnav/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace crowdnav::qp
{

namespace
{

constexpr double kInf = std::numeric_limits<double>::infinity();

// Appends the constraint whose transformed normal is d (= J' n) to the
// factorisation. Returns false when it is linearly dependent on the active set.
bool addConstraint(Eigen::MatrixXd& R, Eigen::MatrixXd& J, Eigen::VectorXd& d, int& q, double& r_norm)
{
  const Eigen::Index n = J.rows();
  for (Eigen::Index j = n - 1; j >= q + 1; --j) {
    double cc = d(j - 1);
    double ss = d(j);
    const double h = std::hypot(cc, ss);
    if (h == 0.0) {
      continue;
    }
    d(j) = 0.0;
    ss /= h;
    cc /= h;
    if (cc < 0.0) {
      cc = -cc;
      ss = -ss;
      d(j - 1) = -h;
    } else {
      d(j - 1) = h;
    }
    const double xny = ss / (1.0 + cc);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double t1 = J(k, j - 1);
      const double t2 = J(k, j);
      J(k, j - 1) = t1 * cc + t2 * ss;
      J(k, j) = xny * (t1 + J(k, j - 1)) - t2;
    }
  }
  ++q;
  R.col(q - 1).head(q) = d.head(q);
  if (std::abs(d(q - 1)) <= std::numeric_limits<double>::epsilon() * r_norm) {
    return false;
  }
  r_norm = std::max(r_norm, std::abs(d(q - 1)));
  return true;
}

// Removes active constraint at position `pos` and restores R to upper-triangular form.
void deleteConstraint(
  Eigen::MatrixXd& R, Eigen::MatrixXd& J, std::vector<int>& active, std::vector<double>& u, int& q,
  int pos)
{
  const Eigen::Index n = J.rows();
  for (int i = pos; i < q - 1; ++i) {
    active[static_cast<std::size_t>(i)] = active[static_cast<std::size_t>(i + 1)];
    u[static_cast<std::size_t>(i)] = u[static_cast<std::size_t>(i + 1)];
    R.col(i) = R.col(i + 1);
  }
  active.pop_back();
  u.pop_back();
  R.col(q - 1).head(q).setZero();
  --q;
  for (int j = pos; j < q; ++j) {
    double cc = R(j, j);
    double ss = R(j + 1, j);
    const double h = std::hypot(cc, ss);
    if (h == 0.0) {
      continue;
    }
    cc /= h;
    ss /= h;
    R(j + 1, j) = 0.0;
    if (cc < 0.0) {
      R(j, j) = -h;
      cc = -cc;
      ss = -ss;
    } else {
      R(j, j) = h;
    }
    const double xny = ss / (1.0 + cc);
    for (int k = j + 1; k < q; ++k) {
      const double t1 = R(j, k);
      const double t2 = R(j + 1, k);
      R(j, k) = t1 * cc + t2 * ss;
      R(j + 1, k) = xny * (t1 + R(j, k)) - t2;
    }
    for (Eigen::Index k = 0; k < n; ++k) {
      const double t1 = J(k, j);
      const double t2 = J(k, j + 1);
      J(k, j) = t1 * cc + t2 * ss;
      J(k, j + 1) = xny * (J(k, j) + t1) - t2;
    }
  }
}

}  // namespace

QpResult solveQp(
  const Eigen::MatrixXd& G, const Eigen::VectorXd& g, const Eigen::MatrixXd& A,
  const Eigen::VectorXd& b, double feasibility_tol)
{
  const Eigen::Index n = G.rows();
  const Eigen::Index m = A.rows();
  QpResult res;
  res.multipliers = Eigen::VectorXd::Zero(m);

  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) {
    res.status = QpStatus::singular;
    res.x = Eigen::VectorXd::Zero(n);
    return res;
  }
  // J = L^{-T}, so that G^{-1} = J J'.
  Eigen::MatrixXd J = llt.matrixU().solve(Eigen::MatrixXd::Identity(n, n));
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, n);
  double r_norm = 1.0;

  Eigen::VectorXd x = -(J * (J.transpose() * g));
  int q = 0;
  std::vector<int> active;
  std::vector<double> u;
  std::vector<char> is_active(static_cast<std::size_t>(m), 0);
  Eigen::VectorXd d(n), z(n), r(n), np(n);

  const int max_iter = static_cast<int>(10 * (n + m) + 100);
  auto finish = [&](QpStatus status) {
    res.status = status;
    res.x = x;
    res.objective = 0.5 * x.dot(G * x) + g.dot(x);
    for (int k = 0; k < q; ++k) {
      res.multipliers(active[static_cast<std::size_t>(k)]) = u[static_cast<std::size_t>(k)];
    }
    res.active = active;
    return res;
  };

  while (true) {
    if (++res.iterations > max_iter) {
      return finish(QpStatus::iteration_limit);
    }
    // most violated inactive constraint
    int p = -1;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (is_active[static_cast<std::size_t>(i)]) {
        continue;
      }
      const double s = A.row(i).dot(x) - b(i);
      const double tol = feasibility_tol * (1.0 + std::abs(b(i)));
      if (s < -tol && s < worst) {
        worst = s;
        p = static_cast<int>(i);
      }
    }
    if (p < 0) {
      return finish(QpStatus::solved);
    }
    np = A.row(p).transpose();
    double sp = worst;
    double u_plus = 0.0;

    while (true) {
      d.noalias() = J.transpose() * np;
      z.noalias() = J.rightCols(n - q) * d.tail(n - q);
      if (q > 0) {
        r.head(q) = R.topLeftCorner(q, q).triangularView<Eigen::Upper>().solve(d.head(q));
      }
      // largest dual step keeping active multipliers non-negative
      double t1 = kInf;
      int l = -1;
      for (int k = 0; k < q; ++k) {
        if (r(k) > 0.0) {
          const double ratio = u[static_cast<std::size_t>(k)] / r(k);
          if (ratio < t1) {
            t1 = ratio;
            l = k;
          }
        }
      }
      // full step that makes constraint p active
      const double znp = z.dot(np);
      const double t2 = std::abs(znp) > std::numeric_limits<double>::epsilon() * (1.0 + np.norm())
                          ? -sp / znp
                          : kInf;
      const double t = std::min(t1, t2);
      if (t == kInf) {
        return finish(QpStatus::infeasible);
      }
      if (t2 == kInf) {
        // dual-only step
        for (int k = 0; k < q; ++k) u[static_cast<std::size_t>(k)] -= t * r(k);
        u_plus += t;
        is_active[static_cast<std::size_t>(active[static_cast<std::size_t>(l)])] = 0;
        deleteConstraint(R, J, active, u, q, l);
        continue;
      }
      x += t * z;
      for (int k = 0; k < q; ++k) u[static_cast<std::size_t>(k)] -= t * r(k);
      u_plus += t;
      if (t == t2) {
        if (!addConstraint(R, J, d, q, r_norm)) {
          return finish(QpStatus::infeasible);
        }
        active.push_back(p);
        u.push_back(u_plus);
        is_active[static_cast<std::size_t>(p)] = 1;
        break;
      }
      is_active[static_cast<std::size_t>(active[static_cast<std::size_t>(l)])] = 0;
      deleteConstraint(R, J, active, u, q, l);
      sp = A.row(p).dot(x) - b(p);
    }
  }
}

}  // namespace crowdnav::qp
