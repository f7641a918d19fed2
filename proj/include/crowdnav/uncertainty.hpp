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

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "crowdnav/geometry.hpp"
#include "crowdnav/penn.hpp"
#include "crowdnav/risk.hpp"

/// Epistemic (ensemble disagreement) and aleatoric (tail risk) screening of
/// ensemble predictions, followed by minimum-risk selection.
namespace crowdnav::uncertainty
{

using penn::EnsemblePrediction;
using penn::GaussianPrediction;

struct FilterThresholds
{
  // Largest admissible ensemble disagreement.
  double epistemic_max{1.0};
  // Tail probability of the risk measures, in (0, 0.5].
  double risk_tolerance{0.1};
  // Largest admissible worst-member CVaR, in label units.
  double cvar_bound{70.0};
};

void validate(const FilterThresholds& th);

/// Standard normal quantile (Wichura's AS241, relative accuracy ~1e-16).
double normalQuantile(double p);

/// Standard normal density.
double normalPdf(double z);

/// Similarity of two Gaussians: exp(-d^2 / (2 s)) / sqrt(s), s = var_a + var_b.
double pairwiseTerm(const GaussianPrediction& a, const GaussianPrediction& b);

/// Quadratic-Renyi Jensen divergence of the uniform mixture, unclamped. With
/// unequal member variances this can be negative.
double epistemicJrdRaw(std::span<const GaussianPrediction> members);

/// epistemicJrdRaw clamped at zero.
double epistemicJrd(std::span<const GaussianPrediction> members);
double epistemicJrd(const EnsemblePrediction& pred);

/// Upper-tail value at risk: mean + sd * z_{1-eps}.
double varGaussian(const GaussianPrediction& g, double eps);

/// Upper-tail conditional value at risk: mean + sd * pdf(z_{1-eps}) / eps.
double cvarGaussian(const GaussianPrediction& g, double eps);

struct CandidateScore
{
  double epistemic{0.0};
  std::vector<double> var;
  std::vector<double> cvar;
  double sup_cvar{0.0};
  double mixture_mean{0.0};
  bool passed_epistemic{false};
  bool passed_aleatoric{false};

  bool passed() const { return passed_epistemic && passed_aleatoric; }
};

struct FilterReport
{
  std::vector<CandidateScore> candidates;
  std::optional<std::size_t> selected;
};

/// Drops candidates whose epistemic score exceeds the threshold, then those
/// whose worst-member CVaR exceeds the bound, and selects the survivor with the
/// smallest mixture mean (ties: closer to `goal`, then lower index).
/// Throws InvalidInput when the spans differ in length.
FilterReport filterCandidates(
  std::span<const risk::CandidateWaypoint> cands, std::span<const EnsemblePrediction> preds,
  const FilterThresholds& th, const Vec2& goal);

}  // namespace crowdnav::uncertainty
