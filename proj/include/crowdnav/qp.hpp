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

#include <vector>

#include <Eigen/Dense>

namespace crowdnav::qp
{

enum class QpStatus
{
  solved,
  infeasible,
  // Hessian not positive definite.
  singular,
  iteration_limit
};

struct QpResult
{
  QpStatus status{QpStatus::solved};
  Eigen::VectorXd x;
  // One multiplier per constraint row; zero for inactive rows.
  Eigen::VectorXd multipliers;
  double objective{0.0};
  int iterations{0};
  std::vector<int> active;
};

/// Dual active-set method of Goldfarb and Idnani for
///
///   min 0.5 x'Gx + g'x   s.t.   A x >= b
///
/// with G symmetric positive definite. Constraints are added one at a time
/// from the unconstrained minimiser, so the iteration count is roughly the
/// size of the final active set.
QpResult solveQp(
  const Eigen::MatrixXd& G, const Eigen::VectorXd& g, const Eigen::MatrixXd& A,
  const Eigen::VectorXd& b, double feasibility_tol = 1e-12);

}  // namespace crowdnav::qp
