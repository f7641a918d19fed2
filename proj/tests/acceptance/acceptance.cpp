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

// Acceptance run. Prints one PASS/FAIL line per criterion and exits non-zero
// when any criterion fails. Artifacts (dataset, model, metrics) go to --out.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "crowdnav/collect.hpp"
#include "crowdnav/config.hpp"
#include "crowdnav/evaluate.hpp"
#include "crowdnav/metrics.hpp"
#include "crowdnav/mpc.hpp"
#include "crowdnav/penn.hpp"
#include "crowdnav/policy.hpp"
#include "crowdnav/risk.hpp"
#include "crowdnav/uncertainty.hpp"
#include "gradcheck.hpp"
#include "risk_oracle.hpp"

using namespace crowdnav;
namespace fs = std::filesystem;

namespace
{

struct Verdict
{
  bool pass{false};
  std::string detail;
};

std::string fmt(const char* f, double v)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------

Verdict heuristicOracle()
{
  std::mt19937_64 g(20261);
  std::uniform_real_distribution<double> u(-5.5, 5.5);
  const risk::HeuristicParams hp;
  double worst = 0.0;
  long evaluated = 0;
  long flag_mismatch = 0;
  for (int k = 0; k < 1000; ++k) {
    const sim::Snapshot s = oracle::randomSnapshot(g);
    auto cands = risk::sampleCandidates(s, 12, std::vector<double>{1.5, 3.0});
    for (int j = 0; j < 4; ++j) cands.push_back({{u(g), u(g)}, risk::CandidateSource::local_sample, {}, {}});
    for (const auto& c : cands) {
      const auto lib = risk::totalRisk(s, c.position, hp);
      const auto ref = oracle::heuristicRisk(s, c.position.x, c.position.y, hp);
      worst = std::max(worst, std::abs(lib.total - ref.total));
      flag_mismatch += lib.collision != ref.collision ? 1 : 0;
      ++evaluated;
    }
  }
  return {worst <= 1e-9 && flag_mismatch == 0,
          std::to_string(evaluated) + " candidate evaluations on 1000 snapshots, max |delta| " +
            fmt("%.3g", worst) + " (tol 1e-9), collision flag mismatches " + std::to_string(flag_mismatch)};
}

Verdict gradients()
{
  const auto pts = oracle::gradientCheck(penn::kDefaultWidths, 200, 777, 1e-4);
  double worst = 0.0;
  long live = 0;
  for (const auto& p : pts) {
    worst = std::max(worst, p.rel_error);
    live += std::abs(p.analytic) > 1e-10 ? 1 : 0;
  }
  return {worst <= 1e-4 && live >= 100,
          std::to_string(pts.size()) + " points (" + std::to_string(live) + " with non-zero gradient), h 1e-4, max rel error " +
            fmt("%.3g", worst) + " (tol 1e-4)"};
}

Verdict training(const penn::TrainReport& rep, std::size_t samples, double seconds)
{
  bool ok = samples >= 20000 && rep.initial_val_nll.size() == 3;
  std::string d = std::to_string(samples) + " samples;";
  for (std::size_t j = 0; j < rep.initial_val_nll.size(); ++j) {
    const double init = rep.initial_val_nll[j];
    const double fin = rep.final_val_nll[j];
    ok = ok && fin <= 0.7 * init;
    d += " member " + std::to_string(j) + " " + fmt("%.4f", init) + " -> " + fmt("%.4f", fin) + " (" +
         std::to_string(rep.epochs_run[j]) + " epochs);";
  }
  ok = ok && seconds < 1800.0;
  return {ok, d + " bound final <= 0.7 x initial, wall " + fmt("%.0f", seconds) + " s (limit 1800)"};
}

Verdict riskMeasures()
{
  std::mt19937_64 g(4444);
  std::uniform_real_distribution<double> mean(-50.0, 100.0);
  std::uniform_real_distribution<double> sd(0.1, 30.0);
  const std::vector<double> eps{0.5, 0.1, 0.05, 0.01};
  constexpr std::size_t kSamples = 10'000'000;
  std::vector<double> xs(kSamples);
  double worst = 0.0;
  bool ordered = true;
  for (int k = 0; k < 20; ++k) {
    const penn::GaussianPrediction gp{mean(g), std::pow(sd(g), 2)};
    const double s = std::sqrt(gp.variance);
    std::normal_distribution<double> nd(gp.mean, s);
    for (double& x : xs) x = nd(g);
    for (double e : eps) {
      // upper tail: VaR is the (1 - eps) quantile, CVaR the mean beyond it
      const auto cut = static_cast<std::size_t>(std::floor((1.0 - e) * kSamples));
      std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(cut), xs.end());
      const double var_mc = xs[cut];
      double tail = 0.0;
      for (std::size_t i = cut; i < kSamples; ++i) tail += xs[i];
      const double cvar_mc = tail / static_cast<double>(kSamples - cut);
      const double var_cf = uncertainty::varGaussian(gp, e);
      const double cvar_cf = uncertainty::cvarGaussian(gp, e);
      // relative to the value, floored at one standard deviation so near-zero
      // quantiles do not turn sampling noise into huge ratios
      worst = std::max(worst, std::abs(var_mc - var_cf) / std::max(std::abs(var_cf), s));
      worst = std::max(worst, std::abs(cvar_mc - cvar_cf) / std::max(std::abs(cvar_cf), s));
      ordered = ordered && cvar_cf >= var_cf && var_cf >= gp.mean - 1e-12;
    }
  }
  return {worst <= 0.01 && ordered,
          "20 Gaussians x eps {0.5,0.1,0.05,0.01}, 1e7 samples each, max relative gap " + fmt("%.2e", worst) +
            " (tol 1e-2, scale max(|value|, sd)); CVaR >= VaR >= mean " + (ordered ? "holds" : "violated")};
}

Verdict jrd()
{
  using penn::GaussianPrediction;
  std::mt19937_64 g(5555);
  std::uniform_real_distribution<double> mu(-3.0, 3.0);
  std::uniform_real_distribution<double> lv(std::log(0.05), std::log(5.0));
  double identical = 0.0;
  double lowest = 1e300;
  double lowest_raw = 1e300;
  for (int k = 0; k < 100000; ++k) {
    std::array<GaussianPrediction, 3> m;
    for (auto& x : m) x = {mu(g), std::exp(lv(g))};
    lowest = std::min(lowest, uncertainty::epistemicJrd(m));
    lowest_raw = std::min(lowest_raw, uncertainty::epistemicJrdRaw(m));
    const std::array<GaussianPrediction, 3> same{m[0], m[0], m[0]};
    identical = std::max(identical, std::abs(uncertainty::epistemicJrd(same)));
  }
  bool increasing = true;
  for (int k = 0; k < 50; ++k) {
    const double v = std::exp(lv(g));
    double prev = -1.0;
    // separations up to 3 sd between neighbours; far beyond that the overlap
    // terms underflow and the score is flat in double precision
    for (int step = 0; step <= 30; ++step) {
      const double d = 0.1 * step * std::sqrt(v);
      const std::array<GaussianPrediction, 3> m{GaussianPrediction{-d, v}, GaussianPrediction{0.0, v},
                                                 GaussianPrediction{d, v}};
      const double j = uncertainty::epistemicJrd(m);
      if (step > 0 && !(j > prev)) increasing = false;
      prev = j;
    }
  }
  const std::array<GaussianPrediction, 2> pair{GaussianPrediction{0.0, 1.0}, GaussianPrediction{1.0, 1.0}};
  const double hand = uncertainty::epistemicJrd(pair);
  const bool ok = identical <= 1e-9 && lowest >= -1e-9 && increasing && std::abs(hand - 0.1172) <= 1e-3;
  return {ok, "identical-member max |JRD| " + fmt("%.2e", identical) + ", min over 1e5 random ensembles " +
                fmt("%.3e", lowest) + " (unclamped " + fmt("%.3e", lowest_raw) + "), sweeps " + (increasing ? "strictly increasing" : "NOT increasing") +
                ", N(0,1)/N(1,1) " + fmt("%.5f", hand) + " (expect 0.1172 +- 1e-3)"};
}

// Per-step barrier audit of executed LR-MPC steps.
class CbfAudit : public sim::EpisodeObserver
{
public:
  explicit CbfAudit(const mpc::MpcConfig& cfg) : cfg_(cfg) {}

  void onTrace(const policy::DecisionTrace& tr) { pending_ = tr; }

  void onStep(const sim::Snapshot& snap, const Vec2& /*cmd*/, const sim::WorldState& after) override
  {
    for (const auto& ob : after.obstacles) {
      if (distance(after.robot.position, ob.center) < after.robot.radius + ob.radius) ++static_overlaps;
    }
    if (!pending_) return;
    const policy::DecisionTrace tr = *pending_;
    pending_.reset();
    if (!tr.mpc_status || *tr.mpc_status != mpc::SolveStatus::optimal || tr.fallback == policy::Fallback::solver) {
      ++skipped;
      return;
    }
    ++steps;
    const Vec2 x0 = snap.robot.position;
    const Vec2 x1 = after.robot.position;
    for (const auto& track : tr.tracks) {
      const double eta = mpc::safetyDistance(track, cfg_);
      const double lhs = mpc::psi(x1, track.positions[1], eta);
      const double rhs = (1.0 - cfg_.xi) * mpc::psi(x0, track.positions[0], eta);
      worst = std::min(worst, lhs - rhs);
      if (lhs < rhs - 1e-6) ++violations;
      ++checks;
    }
  }

  long steps{0};
  long skipped{0};
  long checks{0};
  long violations{0};
  long static_overlaps{0};
  double worst{1e300};

private:
  mpc::MpcConfig cfg_;
  std::optional<policy::DecisionTrace> pending_;
};

Verdict cbfSafety(const config::AppConfig& cfg, std::shared_ptr<const penn::Ensemble> model, long episodes)
{
  policy::PolicyConfig pc = cfg.policy;
  pc.kind = policy::PolicyKind::lr_mpc;
  const auto scenario = config::cellScenario(cfg, "obstacle_unaware");
  CbfAudit audit(pc.mpc);
  long collisions = 0;
  for (long k = 0; k < episodes; ++k) {
    policy::RiskMpcPolicy pol(pc, model);
    pol.setTraceSink([&audit](const policy::DecisionTrace& tr) { audit.onTrace(tr); });
    sim::EpisodeOptions eo;
    eo.bands = cfg.bands;
    eo.observer = &audit;
    eo.record_trajectory = false;
    const auto seed = collect::episodeSeed(cfg.seed, config::cellIndex("obstacle_unaware"), static_cast<std::uint64_t>(k));
    const auto r = sim::runEpisode(pol, scenario, seed, eo);
    collisions += r.outcome == sim::Outcome::collision ? 1 : 0;
  }
  return {audit.violations == 0 && audit.static_overlaps == 0 && audit.steps > 0,
          std::to_string(episodes) + " episodes, " + std::to_string(audit.steps) + " optimal steps (" +
            std::to_string(audit.skipped) + " other), " + std::to_string(audit.checks) + " barrier checks, " +
            std::to_string(audit.violations) + " violations (tol 1e-6), worst margin " + fmt("%.3g", audit.worst) +
            ", static-obstacle overlaps " + std::to_string(audit.static_overlaps) + " (human collisions " +
            std::to_string(collisions) + ", not part of this check)"};
}

Verdict mpcSanity()
{
  mpc::MpcConfig c;
  sim::RobotState r;
  const double T = c.horizon * c.dt;
  // constant control is optimal by symmetry: minimise 0.5 q |N dt u - d|^2 + 0.5 N r |u|^2
  const double u_star = 10.0 * T * 1.0 / (10.0 * T * T + c.horizon * 1.0);
  const auto s = mpc::solve(mpc::buildProblem(r, {1.0, 0.0}, {}, c));
  const double first = std::hypot(s.controls[0].x - u_star, s.controls[0].y);
  const double terminal = distance(s.states.back(), {T * u_star, 0.0});
  const auto far = mpc::solve(mpc::buildProblem(r, {5.0, 0.0}, {}, c));
  const double sat = std::hypot(far.controls[0].x - 1.0, far.controls[0].y);
  const bool ok = s.status == mpc::SolveStatus::optimal && first <= 1e-6 && terminal <= 1e-3 && sat <= 1e-6;
  return {ok, "target (1,0): u0 error " + fmt("%.2e", first) + " vs closed form " + fmt("%.4f", u_star) +
                " (tol 1e-6), terminal error " + fmt("%.2e", terminal) + " (tol 1e-3); target (5,0) saturated u0 error " +
                fmt("%.2e", sat)};
}

Verdict comparison(const std::vector<evaluate::BatchResult>& results)
{
  auto find = [&](const std::string& cell, policy::PolicyKind k) -> const metrics::BatchMetrics& {
    for (const auto& r : results) {
      if (r.cell == cell && r.policy == k) return r.metrics;
    }
    throw std::runtime_error("missing batch " + cell);
  };
  bool ok = true;
  std::string d;
  for (const auto& cell : config::kMatrixCells) {
    const auto& lr = find(cell, policy::PolicyKind::lr_mpc);
    const auto& hr = find(cell, policy::PolicyKind::hr_mpc);
    const auto& sf = find(cell, policy::PolicyKind::sf_baseline);
    const bool vs_hr = lr.success_rate >= hr.success_rate - 0.05 - 1e-12;
    const bool unaware = cell.find("unaware") != std::string::npos;
    const bool vs_sf = !unaware || lr.success_rate > sf.success_rate;
    ok = ok && vs_hr && vs_sf;
    d += cell + " SR lr/hr/sf " + fmt("%.2f", lr.success_rate) + "/" + fmt("%.2f", hr.success_rate) + "/" +
         fmt("%.2f", sf.success_rate) + (vs_hr ? "" : " [lr < hr-5]") + (vs_sf ? "" : " [lr <= sf]") + "; ";
    if (cell == "obstacle_unaware") {
      const double li = lr.zone_entry_ratio[0];
      const double si = sf.zone_entry_ratio[0];
      ok = ok && li <= si;
      d += "intimate entry lr " + fmt("%.3f", li) + " vs sf " + fmt("%.3f", si) + (li <= si ? "" : " [lr > sf]") + "; ";
    }
  }
  return {ok, d};
}

Verdict metricsArithmetic(const std::vector<evaluate::BatchResult>& results)
{
  auto human = [](std::array<long, 4> steps) {
    metrics::ZoneStats z;
    for (std::size_t i = 0; i < 4; ++i) {
      for (long k = 0; k < steps[i]; ++k) z.record(metrics::kAllZones[i]);
    }
    return z;
  };
  std::vector<sim::EpisodeResult> toy(3);
  toy[0].success = true;
  toy[0].outcome = sim::Outcome::reached;
  toy[0].duration = 10.0;
  toy[0].path_length = 12.0;
  toy[0].per_human_zone_counts = {human({2, 3, 0, 5}), human({0, 0, 4, 6})};
  toy[1].outcome = sim::Outcome::collision;
  toy[1].duration = 4.0;
  toy[1].path_length = 3.0;
  toy[1].per_human_zone_counts = {human({1, 0, 0, 3})};
  toy[2].success = true;
  toy[2].outcome = sim::Outcome::reached;
  toy[2].duration = 20.0;
  toy[2].path_length = 18.0;
  toy[2].per_human_zone_counts = {human({0, 0, 0, 8}), human({0, 2, 2, 4}), human({0, 0, 0, 8})};
  const auto m = metrics::aggregate(toy);
  // counted by hand: 6 humans; entries 2,2,2,6; time shares 0.45, 0.55, 0.65, 4.35 over 6
  auto near = [](double a, double b) { return std::abs(a - b) <= 1e-12; };
  bool toy_ok = m.successes == 2 && near(m.success_rate, 2.0 / 3.0) && near(m.avg_time, 34.0 / 3.0) &&
                near(m.avg_path_length, 11.0) && m.avg_time_success && near(*m.avg_time_success, 15.0) &&
                m.avg_path_length_success && near(*m.avg_path_length_success, 15.0) && m.human_exposure == 6 &&
                near(m.zone_entry_ratio[0], 2.0 / 6.0) && near(m.zone_entry_ratio[1], 2.0 / 6.0) &&
                near(m.zone_entry_ratio[2], 2.0 / 6.0) && near(m.zone_entry_ratio[3], 1.0) &&
                near(m.zone_time_ratio[0], 0.45 / 6.0) && near(m.zone_time_ratio[1], 0.55 / 6.0) &&
                near(m.zone_time_ratio[2], 0.65 / 6.0) && near(m.zone_time_ratio[3], 4.35 / 6.0);
  // no successes: the success-only averages are absent
  std::vector<sim::EpisodeResult> none{toy[1]};
  const auto n = metrics::aggregate(none);
  toy_ok = toy_ok && n.successes == 0 && !n.avg_time_success && !n.avg_path_length_success &&
           near(n.zone_entry_ratio[0], 1.0) && near(n.zone_time_ratio[3], 0.75);
  double worst = 0.0;
  for (const auto& r : results) {
    double sum = 0.0;
    for (double t : r.metrics.zone_time_ratio) sum += t;
    if (r.metrics.human_exposure > 0) worst = std::max(worst, std::abs(sum - 1.0));
  }
  return {toy_ok && worst <= 1e-9 && !results.empty(),
          std::string("3-episode toy batch ") + (toy_ok ? "matches" : "DOES NOT match") + " hand counts; " +
            std::to_string(results.size()) + " evaluation batches, max |sum time ratio - 1| " + fmt("%.2e", worst)};
}

Verdict determinism(const fs::path& out, const fs::path& config, const fs::path& model)
{
  std::vector<std::string> csv;
  for (const char* run : {"det_a", "det_b"}) {
    const fs::path dir = out / run;
    fs::remove_all(dir);
    const std::string cmd = std::string("\"") + CROWDNAV_CLI + "\" eval --config \"" + config.string() +
                            "\" --episodes 4 --no-logs --model \"" + model.string() + "\" --out \"" + dir.string() +
                            "\" > \"" + (out / (std::string(run) + ".log")).string() + "\" 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, "crowdnav eval failed, see " + (out / run).string() + ".log"};
    csv.push_back(slurp(dir / "metrics.csv"));
  }
  const bool same = csv[0] == csv[1] && !csv[0].empty();
  return {same, "two `crowdnav eval` runs (4 episodes x 12 batches, fixed root seed): metrics.csv " +
                  std::to_string(csv[0].size()) + " bytes, " + (same ? "byte-identical" : "DIFFERENT")};
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"crowdnav acceptance run"};
  fs::path out = "acceptance_artifacts";
  fs::path config_path = fs::path(CROWDNAV_CONFIG_DIR) / "desk.ini";
  fs::path model_path;
  long collect_episodes = 48;
  long eval_episodes = 50;
  std::vector<int> only;
  app.add_option("--out", out, "artifact directory");
  app.add_option("--config", config_path, "desk configuration");
  app.add_option("--model", model_path, "reuse a trained model (criterion 3 is then not run)");
  app.add_option("--collect-episodes", collect_episodes, "episodes for the training dataset");
  app.add_option("--eval-episodes", eval_episodes, "paired episodes per cell");
  app.add_option("--only", only, "criteria to run");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(out);
  const auto cfg = config::loadConfig(config_path);
  auto wanted = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };

  int failures = 0;
  auto report = [&](int id, const std::string& name, const std::function<Verdict()>& fn) {
    if (!wanted(id)) return;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += v.pass ? 0 : 1;
    std::cout << "criterion " << id << " " << (v.pass ? "PASS" : "FAIL") << " [" << name << "] " << v.detail << " ("
              << fmt("%.1f", s) << " s)" << std::endl;
  };

  report(1, "heuristic-risk oracle", heuristicOracle);
  report(2, "PENN gradients", gradients);

  // criterion 3 also produces the model the closed-loop criteria use
  std::shared_ptr<const penn::Ensemble> model;
  const bool need_model = wanted(3) || wanted(6) || wanted(8) || wanted(10);
  if (need_model && model_path.empty()) {
    report(3, "training efficacy", [&] {
      const auto t0 = std::chrono::steady_clock::now();
      std::vector<sim::ScenarioConfig> cells;
      for (const auto& name : config::kMatrixCells) cells.push_back(config::cellScenario(cfg, name));
      const auto ds = collect::collectDataset(cells, cfg.policy, collect_episodes, cfg.seed);
      data::writeDataset(ds, out / "dataset.csv");
      penn::TrainConfig tc = cfg.train;
      penn::TrainReport rep;
      const auto ens = penn::train(ds, tc, &rep);
      model_path = out / "model.json";
      penn::saveModel(ens, model_path);
      model = std::make_shared<const penn::Ensemble>(ens);
      const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      return training(rep, ds.samples.size(), s);
    });
  } else if (need_model) {
    model = policy::loadPolicyModel(model_path);
    if (wanted(3)) {
      ++failures;
      std::cout << "criterion 3 FAIL [training efficacy] not run: --model supplied" << std::endl;
    }
  }

  report(4, "VaR/CVaR vs Monte Carlo", riskMeasures);
  report(5, "JRD properties", jrd);
  report(6, "CBF safety", [&] {
    if (!model) return Verdict{false, "no trained model"};
    return cbfSafety(cfg, model, 50);
  });
  report(7, "MPC sanity", mpcSanity);

  std::vector<evaluate::BatchResult> results;
  if (wanted(8) || wanted(9)) {
    auto opts = evaluate::defaultOptions(cfg);
    opts.episodes = eval_episodes;
    if (!model) opts.policies = {policy::PolicyKind::hr_mpc, policy::PolicyKind::sf_baseline};
    const auto t0 = std::chrono::steady_clock::now();
    results = evaluate::runEvaluation(cfg, opts, model);
    evaluate::writeFileAtomic(out / "metrics.csv", evaluate::metricsCsv(results));
    std::cout << "paired evaluation: " << eval_episodes << " episodes per batch, "
              << fmt("%.1f", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count())
              << " s, metrics in " << (out / "metrics.csv").string() << std::endl;
  }
  report(8, "paired comparison", [&] {
    if (!model) return Verdict{false, "no trained model"};
    return comparison(results);
  });
  report(9, "metrics arithmetic", [&] { return metricsArithmetic(results); });
  report(10, "determinism", [&] {
    if (model_path.empty()) return Verdict{false, "no trained model"};
    return determinism(out, config_path, model_path);
  });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
