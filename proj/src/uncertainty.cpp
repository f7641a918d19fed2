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

#include "crowdnav/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "crowdnav/errors.hpp"

namespace crowdnav::uncertainty
{

void validate(const FilterThresholds& th)
{
  if (!(th.epistemic_max > 0.0)) {
    throw ConfigError("thresholds.epistemic_max must be positive");
  }
  if (!(th.risk_tolerance > 0.0 && th.risk_tolerance <= 0.5)) {
    throw ConfigError("thresholds.risk_tolerance must lie in (0, 0.5]");
  }
}

double normalQuantile(double p)
{
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  }
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
      (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
            6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
          1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
        1.3314166789178437745e+2) * r + 3.3871328727963666080e+0);
    const double den =
      (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
            3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
          5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
        4.2313330701600911252e+1) * r + 1.0);
    return q * num / den;
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val = 0.0;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
      (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
            2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
          3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
        4.63033784615654529590e+0) * r + 1.42343711074968357734e+0);
    const double den =
      (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
            1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
          6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
        2.05319162663775882187e+0) * r + 1.0);
    val = num / den;
  } else {
    r -= 5.0;
    const double num =
      (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
            1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
          2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
        5.46378491116411436990e+0) * r + 6.65790464350110377720e+0);
    const double den =
      (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
            1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
          1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
        5.99832206555887937690e-1) * r + 1.0);
    val = num / den;
  }
  return q < 0.0 ? -val : val;
}

double normalPdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double pairwiseTerm(const GaussianPrediction& a, const GaussianPrediction& b)
{
  const double s = a.variance + b.variance;
  const double d = a.mean - b.mean;
  return std::exp(-0.5 * d * d / s) / std::sqrt(s);
}

double epistemicJrdRaw(std::span<const GaussianPrediction> members)
{
  const std::size_t m = members.size();
  if (m == 0) {
    return 0.0;
  }
  double cross = 0.0;
  double self_log = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < m; ++k) {
      cross += pairwiseTerm(members[j], members[k]);
    }
    self_log += std::log(pairwiseTerm(members[j], members[j]));
  }
  const double md = static_cast<double>(m);
  return -std::log(cross / (md * md)) + self_log / md;
}

double epistemicJrd(std::span<const GaussianPrediction> members)
{
  return std::max(0.0, epistemicJrdRaw(members));
}

double epistemicJrd(const EnsemblePrediction& pred) { return epistemicJrd(pred.members); }

double varGaussian(const GaussianPrediction& g, double eps)
{
  return g.mean + std::sqrt(g.variance) * normalQuantile(1.0 - eps);
}

double cvarGaussian(const GaussianPrediction& g, double eps)
{
  return g.mean + std::sqrt(g.variance) * normalPdf(normalQuantile(1.0 - eps)) / eps;
}

FilterReport filterCandidates(
  std::span<const risk::CandidateWaypoint> cands, std::span<const EnsemblePrediction> preds,
  const FilterThresholds& th, const Vec2& goal)
{
  if (cands.size() != preds.size()) {
    throw InvalidInput(
      "filterCandidates: " + std::to_string(cands.size()) + " candidates but " +
      std::to_string(preds.size()) + " predictions");
  }
  FilterReport report;
  report.candidates.reserve(cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const auto& p = preds[i];
    CandidateScore s;
    s.epistemic = epistemicJrd(p);
    s.mixture_mean = p.mixture_mean;
    s.sup_cvar = -std::numeric_limits<double>::infinity();
    for (const auto& g : p.members) {
      s.var.push_back(varGaussian(g, th.risk_tolerance));
      s.cvar.push_back(cvarGaussian(g, th.risk_tolerance));
      s.sup_cvar = std::max(s.sup_cvar, s.cvar.back());
    }
    s.passed_epistemic = s.epistemic <= th.epistemic_max;
    s.passed_aleatoric = s.passed_epistemic && s.sup_cvar <= th.cvar_bound;
    report.candidates.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (!report.candidates[i].passed()) {
      continue;
    }
    if (!report.selected) {
      report.selected = i;
      continue;
    }
    const std::size_t b = *report.selected;
    const double mi = report.candidates[i].mixture_mean;
    const double mb = report.candidates[b].mixture_mean;
    if (mi < mb || (mi == mb && risk::goalDist(cands[i].position, goal) < risk::goalDist(cands[b].position, goal))) {
      report.selected = i;
    }
  }
  return report;
}

}  // namespace crowdnav::uncertainty
