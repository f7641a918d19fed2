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

#include "crowdnav/runlog.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "crowdnav/errors.hpp"
#include "crowdnav/metrics.hpp"

namespace crowdnav::runlog
{

using nlohmann::json;
using nlohmann::ordered_json;

namespace
{

ordered_json vec(const Vec2& v) { return ordered_json::array({v.x, v.y}); }

Vec2 toVec(const json& j)
{
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw std::invalid_argument("expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

bool sameBits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

}  // namespace

ordered_json toJson(const policy::DecisionTrace& tr)
{
  ordered_json j;
  j["type"] = "decision";
  j["time"] = tr.time;
  j["guidance"] = vec(tr.guidance);
  j["path_stamp"] = tr.path_stamp;
  ordered_json cands = ordered_json::array();
  for (std::size_t i = 0; i < tr.candidates.size(); ++i) {
    const auto& c = tr.candidates[i];
    ordered_json cj;
    cj["p"] = vec(c.position);
    cj["src"] = c.source == risk::CandidateSource::global_guidance ? "global" : "local";
    if (c.risk) cj["risk"] = *c.risk;
    if (c.passed_filters) cj["passed"] = *c.passed_filters;
    if (tr.filter) {
      const auto& s = tr.filter->candidates[i];
      cj["epistemic"] = s.epistemic;
      cj["sup_cvar"] = s.sup_cvar;
    }
    cands.push_back(std::move(cj));
  }
  j["candidates"] = std::move(cands);
  j["selected"] = tr.selected ? ordered_json(*tr.selected) : ordered_json(nullptr);
  j["target"] = tr.target ? vec(*tr.target) : ordered_json(nullptr);
  j["fallback"] = policy::toString(tr.fallback);
  if (tr.mpc_status) {
    j["mpc"] = {
      {"status", mpc::toString(*tr.mpc_status)},
      {"iterations", tr.mpc_iterations},
      {"min_psi", tr.mpc_min_psi},
      {"cost", tr.mpc_cost},
      {"max_slack", tr.mpc_max_slack}};
  }
  j["control"] = vec(tr.control);
  return j;
}

EpisodeLogger::EpisodeLogger(std::ostream& out, LogHeader header) : out_(out), header_(std::move(header)) {}

policy::TraceSink EpisodeLogger::sink()
{
  return [this](const policy::DecisionTrace& tr) { pending_ = tr; };
}

void EpisodeLogger::write(const ordered_json& j)
{
  out_ << j.dump() << '\n';
}

void EpisodeLogger::onStart(const sim::WorldState& initial)
{
  ordered_json h;
  h["type"] = "header";
  h["format"] = kLogFormat;
  h["version"] = kLogVersion;
  h["cell"] = header_.cell;
  h["policy"] = policy::toString(header_.policy);
  h["episode"] = header_.episode;
  h["seed"] = header_.seed;
  h["config_source"] = header_.config_source;
  h["model"] = header_.model_path;
  h["config"] = header_.config_text;
  write(h);
  ordered_json s;
  s["type"] = "start";
  s["robot"] = vec(initial.robot.position);
  s["goal"] = vec(initial.goal);
  ordered_json humans = ordered_json::array();
  for (const auto& hu : initial.humans) {
    humans.push_back({{"id", hu.id}, {"p", vec(hu.position)}, {"goal", vec(hu.goal)}, {"aware", hu.aware_of_robot}});
  }
  s["humans"] = std::move(humans);
  ordered_json obs = ordered_json::array();
  for (const auto& o : initial.obstacles) obs.push_back({o.center.x, o.center.y, o.radius});
  s["obstacles"] = std::move(obs);
  write(s);
}

void EpisodeLogger::onStep(const sim::Snapshot& /*snap*/, const Vec2& cmd, const sim::WorldState& after)
{
  if (pending_) {
    if (pending_->path && pending_->path->stamp != last_stamp_) {
      last_stamp_ = pending_->path->stamp;
      ordered_json p;
      p["type"] = "path";
      p["stamp"] = last_stamp_;
      ordered_json w = ordered_json::array();
      for (const auto& q : pending_->path->waypoints) w.push_back(vec(q));
      p["waypoints"] = std::move(w);
      write(p);
    }
    write(toJson(*pending_));
    pending_.reset();
  }
  ordered_json s;
  s["type"] = "step";
  s["step"] = after.step;
  s["time"] = after.time;
  s["cmd"] = vec(cmd);
  s["robot"] = vec(after.robot.position);
  write(s);
}

void EpisodeLogger::onEnd(const sim::EpisodeResult& result)
{
  ordered_json r;
  r["type"] = "result";
  r["outcome"] = sim::toString(result.outcome);
  r["success"] = result.success;
  r["steps"] = result.steps;
  r["duration"] = result.duration;
  r["path_length"] = result.path_length;
  r["diagnostic"] = result.diagnostic;
  write(r);
  out_.flush();
}

ParsedLog readLog(std::istream& in)
{
  ParsedLog log;
  std::string line;
  int n = 0;
  bool have_header = false;
  bool have_result = false;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    if (have_result) throw FormatError("content after the result record", n);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(std::string("malformed JSON: ") + e.what(), n);
    }
    try {
      const std::string type = j.at("type").get<std::string>();
      if (!have_header) {
        if (type != "header") throw std::invalid_argument("first record must be the header");
        if (j.at("format").get<std::string>() != kLogFormat) throw std::invalid_argument("not an episode log");
        const int version = j.at("version").get<int>();
        if (version != kLogVersion) {
          throw UnsupportedVersion("unsupported log version " + std::to_string(version), n);
        }
        auto& h = log.header;
        h.cell = j.at("cell").get<std::string>();
        h.policy = policy::policyKindFromString(j.at("policy").get<std::string>());
        h.episode = j.at("episode").get<long>();
        h.seed = j.at("seed").get<std::uint64_t>();
        h.config_source = j.at("config_source").get<std::string>();
        h.model_path = j.at("model").get<std::string>();
        h.config_text = j.at("config").get<std::string>();
        have_header = true;
      } else if (type == "step") {
        LoggedStep s;
        s.step = j.at("step").get<long>();
        s.time = j.at("time").get<double>();
        s.cmd = toVec(j.at("cmd"));
        s.robot = toVec(j.at("robot"));
        s.line = n;
        if (s.step != static_cast<long>(log.steps.size()) + 1) throw std::invalid_argument("step out of sequence");
        log.steps.push_back(s);
      } else if (type == "decision") {
        log.decisions.push_back(std::move(j));
      } else if (type == "result") {
        (void)j.at("outcome").get<std::string>();
        (void)j.at("steps").get<long>();
        log.result = std::move(j);
        have_result = true;
      } else if (type != "start" && type != "path") {
        throw std::invalid_argument("unknown record type '" + type + "'");
      }
    } catch (const FormatError&) {
      throw;
    } catch (const std::exception& e) {
      throw FormatError(e.what(), n);
    }
  }
  if (!have_header) throw FormatError("empty log", n + 1);
  if (!have_result) throw FormatError("log truncated: no result record", n + 1);
  return log;
}

ParsedLog readLog(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open log '" + path.string() + "'");
  try {
    return readLog(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

namespace
{

class Comparer : public sim::EpisodeObserver
{
public:
  Comparer(const ParsedLog& log, ReplayReport& rep) : log_(log), rep_(rep) {}

  void onStep(const sim::Snapshot& /*snap*/, const Vec2& cmd, const sim::WorldState& after) override
  {
    const auto k = static_cast<std::size_t>(after.step - 1);
    ++rep_.steps_checked;
    const bool ok = k < log_.steps.size() && sameBits(cmd.x, log_.steps[k].cmd.x) &&
                    sameBits(cmd.y, log_.steps[k].cmd.y);
    if (!ok && !rep_.first_mismatch_step) {
      rep_.equal = false;
      rep_.first_mismatch_step = after.step;
      if (k < log_.steps.size()) rep_.first_mismatch_line = log_.steps[k].line;
    }
  }

private:
  const ParsedLog& log_;
  ReplayReport& rep_;
};

}  // namespace

ReplayReport replay(const ParsedLog& log, std::shared_ptr<const penn::Ensemble> model)
{
  const auto cfg = config::parseConfig(log.header.config_text, log.header.config_source);
  const auto scenario = config::cellScenario(cfg, log.header.cell);
  policy::PolicyConfig pc = cfg.policy;
  pc.kind = log.header.policy;
  if (pc.kind == policy::PolicyKind::lr_mpc && !model) {
    model = policy::loadPolicyModel(log.header.model_path);
  }
  auto pol = policy::makePolicy(pc, model);
  ReplayReport rep;
  if (auto* rp = dynamic_cast<policy::RiskMpcPolicy*>(pol.get())) {
    rp->setTraceSink([&rep](const policy::DecisionTrace& tr) { rep.traces.push_back(tr); });
  }
  Comparer cmp(log, rep);
  sim::EpisodeOptions opts;
  opts.bands = cfg.bands;
  opts.observer = &cmp;
  rep.result = sim::runEpisode(*pol, scenario, log.header.seed, opts);
  rep.outcome = sim::toString(rep.result.outcome);
  const bool same_end = rep.result.steps == log.result.at("steps").get<long>() &&
                        rep.outcome == log.result.at("outcome").get<std::string>();
  if (!same_end || static_cast<std::size_t>(rep.result.steps) != log.steps.size()) {
    rep.equal = false;
    if (!rep.first_mismatch_step) {
      rep.first_mismatch_step = std::min<long>(rep.result.steps, static_cast<long>(log.steps.size())) + 1;
    }
  }
  return rep;
}

void writeTraceCsv(std::ostream& out, const std::vector<policy::DecisionTrace>& traces)
{
  using metrics::formatDouble;
  out << "time,guidance_x,guidance_y,selected,target_x,target_y,fallback,mpc_status,mpc_iterations,"
         "mpc_min_psi,mpc_cost,control_x,control_y\n";
  for (const auto& t : traces) {
    out << formatDouble(t.time) << ',' << formatDouble(t.guidance.x) << ',' << formatDouble(t.guidance.y) << ',';
    out << (t.selected ? std::to_string(*t.selected) : "NA") << ',';
    out << (t.target ? formatDouble(t.target->x) : "NA") << ',' << (t.target ? formatDouble(t.target->y) : "NA") << ',';
    out << policy::toString(t.fallback) << ',' << (t.mpc_status ? mpc::toString(*t.mpc_status) : "NA") << ',';
    out << t.mpc_iterations << ',' << formatDouble(t.mpc_min_psi) << ',' << formatDouble(t.mpc_cost) << ',';
    out << formatDouble(t.control.x) << ',' << formatDouble(t.control.y) << '\n';
  }
}

void writeTrajectoryCsv(
  std::ostream& out, const sim::EpisodeResult& result, const sim::WorldState& initial,
  const metrics::ZoneBands& bands)
{
  using metrics::formatDouble;
  out << "step,time,agent,id,x,y,zone\n";
  for (std::size_t k = 0; k < result.trajectory.size(); ++k) {
    const auto& p = result.trajectory[k];
    out << k << ',' << formatDouble(p.time) << ",robot,-1," << formatDouble(p.robot.x) << ','
        << formatDouble(p.robot.y) << ",NA\n";
    sim::RobotState r = initial.robot;
    r.position = p.robot;
    for (std::size_t i = 0; i < p.humans.size(); ++i) {
      sim::HumanAgent h = initial.humans[i];
      h.position = p.humans[i];
      out << k << ',' << formatDouble(p.time) << ",human," << h.id << ',' << formatDouble(h.position.x) << ','
          << formatDouble(h.position.y) << ',' << metrics::zoneName(metrics::zoneOf(r, h, bands)) << '\n';
    }
  }
}

std::filesystem::path logPath(
  const std::filesystem::path& dir, const std::string& cell, policy::PolicyKind policy, long episode)
{
  return dir / cell / policy::toString(policy) / ("episode_" + std::to_string(episode) + ".jsonl");
}

}  // namespace crowdnav::runlog
