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

#include "crowdnav/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "crowdnav/errors.hpp"

namespace crowdnav::config
{

namespace
{

std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Line numbers of "section.key" entries, for diagnostics.
std::map<std::string, int> keyLines(const std::string& text)
{
  std::map<std::string, int> out;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string t = trim(line);
    if (t.empty() || t[0] == ';' || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq != std::string::npos) {
      out.emplace(section + "." + trim(t.substr(0, eq)), n);
    }
  }
  return out;
}

std::vector<std::string> splitWords(const std::string& s, char extra_sep = ',')
{
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == extra_sep) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

double toDouble(const std::string& s)
{
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) throw std::invalid_argument("expected a number, got '" + s + "'");
  return v;
}

long toLong(const std::string& s)
{
  long v = 0;
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) throw std::invalid_argument("expected an integer, got '" + s + "'");
  return v;
}

std::uint64_t toU64(const std::string& s)
{
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) throw std::invalid_argument("expected an unsigned integer, got '" + s + "'");
  return v;
}

bool toBool(const std::string& s)
{
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw std::invalid_argument("expected a boolean, got '" + s + "'");
}

std::vector<double> toDoubles(const std::string& s, std::size_t expected = 0)
{
  std::vector<double> out;
  for (const auto& w : splitWords(s)) out.push_back(toDouble(w));
  if (expected != 0 && out.size() != expected) {
    throw std::invalid_argument("expected " + std::to_string(expected) + " numbers, got " + std::to_string(out.size()));
  }
  return out;
}

Vec2 toVec2(const std::string& s)
{
  const auto v = toDoubles(s, 2);
  return {v[0], v[1]};
}

// "x y r" groups separated by '|' or ';'.
std::vector<sim::StaticObstacle> toObstacles(const std::string& s)
{
  std::vector<sim::StaticObstacle> out;
  std::string cur;
  auto flush = [&] {
    if (!trim(cur).empty()) {
      const auto v = toDoubles(cur, 3);
      out.push_back({{v[0], v[1]}, v[2]});
    }
    cur.clear();
  };
  for (char c : s) {
    if (c == '|' || c == ';') {
      flush();
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

Eigen::Matrix2d toWeight(const std::string& s)
{
  const auto v = toDoubles(s);
  if (v.size() == 1) return Eigen::Matrix2d::Identity() * v[0];
  if (v.size() == 2) return Eigen::Vector2d(v[0], v[1]).asDiagonal();
  if (v.size() == 4) {
    Eigen::Matrix2d m;
    m << v[0], v[1], v[2], v[3];
    return m;
  }
  throw std::invalid_argument("expected 1 (scalar), 2 (diagonal) or 4 (row-major) numbers");
}

using Setter = std::function<void(AppConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters()
{
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    // seeds
    t["seeds.root"] = [](AppConfig& c, const std::string& v) { c.seed = toU64(v); };
    // scenario
    t["scenario.arena"] = [](AppConfig& c, const std::string& v) {
      const auto a = toDoubles(v, 4);
      c.scenario.arena = {{a[0], a[1]}, {a[2], a[3]}};
    };
    t["scenario.robot_start"] = [](AppConfig& c, const std::string& v) { c.scenario.robot_start = toVec2(v); };
    t["scenario.robot_goal"] = [](AppConfig& c, const std::string& v) { c.scenario.robot_goal = toVec2(v); };
    t["scenario.robot_radius"] = [](AppConfig& c, const std::string& v) { c.scenario.robot_radius = toDouble(v); };
    t["scenario.robot_v_max"] = [](AppConfig& c, const std::string& v) { c.scenario.robot_v_max = toDouble(v); };
    t["scenario.sensing_range"] = [](AppConfig& c, const std::string& v) { c.scenario.sensing_range = toDouble(v); };
    t["scenario.humans_min"] = [](AppConfig& c, const std::string& v) { c.scenario.humans_min = static_cast<int>(toLong(v)); };
    t["scenario.humans_max"] = [](AppConfig& c, const std::string& v) { c.scenario.humans_max = static_cast<int>(toLong(v)); };
    t["scenario.human_radius"] = [](AppConfig& c, const std::string& v) { c.scenario.human_radius = toDouble(v); };
    t["scenario.human_v_max"] = [](AppConfig& c, const std::string& v) { c.scenario.human_v_max = toDouble(v); };
    t["scenario.aware"] = [](AppConfig& c, const std::string& v) { c.scenario.aware = toBool(v); };
    t["scenario.obstacles"] = [](AppConfig& c, const std::string& v) { c.scenario.obstacles = toObstacles(v); };
    t["scenario.dt"] = [](AppConfig& c, const std::string& v) { c.scenario.dt = toDouble(v); };
    t["scenario.timeout"] = [](AppConfig& c, const std::string& v) { c.scenario.timeout = toDouble(v); };
    t["scenario.goal_tolerance"] = [](AppConfig& c, const std::string& v) { c.scenario.goal_tolerance = toDouble(v); };
    t["scenario.spawn_separation"] = [](AppConfig& c, const std::string& v) { c.scenario.spawn_separation = toDouble(v); };
    // social force
    t["social_force.tau"] = [](AppConfig& c, const std::string& v) { c.scenario.sf.tau = toDouble(v); };
    t["social_force.human_A"] = [](AppConfig& c, const std::string& v) { c.scenario.sf.human_A = toDouble(v); };
    t["social_force.human_B"] = [](AppConfig& c, const std::string& v) { c.scenario.sf.human_B = toDouble(v); };
    t["social_force.obstacle_A"] = [](AppConfig& c, const std::string& v) { c.scenario.sf.obstacle_A = toDouble(v); };
    t["social_force.obstacle_B"] = [](AppConfig& c, const std::string& v) { c.scenario.sf.obstacle_B = toDouble(v); };
    // zones
    t["zones.intimate"] = [](AppConfig& c, const std::string& v) { c.bands.intimate = toDouble(v); };
    t["zones.personal"] = [](AppConfig& c, const std::string& v) { c.bands.personal = toDouble(v); };
    t["zones.social"] = [](AppConfig& c, const std::string& v) { c.bands.social = toDouble(v); };
    t["zones.surface_distance"] = [](AppConfig& c, const std::string& v) { c.bands.surface_distance = toBool(v); };
    // heuristic risk
    t["risk.lambda_dist"] = [](AppConfig& c, const std::string& v) { c.policy.heuristic.lambda_dist = toDouble(v); };
    t["risk.eps_d"] = [](AppConfig& c, const std::string& v) { c.policy.heuristic.eps_d = toDouble(v); };
    t["risk.lambda_dir"] = [](AppConfig& c, const std::string& v) { c.policy.heuristic.lambda_dir = toDouble(v); };
    t["risk.samples_per_segment"] = [](AppConfig& c, const std::string& v) {
      c.policy.heuristic.samples_per_segment = static_cast<int>(toLong(v));
    };
    t["risk.risk_max"] = [](AppConfig& c, const std::string& v) { c.policy.heuristic.risk_max = toDouble(v); };
    // candidates
    t["candidates.radii"] = [](AppConfig& c, const std::string& v) { c.policy.candidates.radii = toDoubles(v); };
    t["candidates.per_ring"] = [](AppConfig& c, const std::string& v) { c.policy.candidates.per_ring = static_cast<int>(toLong(v)); };
    t["candidates.include_guidance"] = [](AppConfig& c, const std::string& v) { c.policy.candidates.include_guidance = toBool(v); };
    t["candidates.lookahead"] = [](AppConfig& c, const std::string& v) { c.policy.lookahead = toDouble(v); };
    // uncertainty filters
    t["filter.epistemic_max"] = [](AppConfig& c, const std::string& v) { c.policy.thresholds.epistemic_max = toDouble(v); };
    t["filter.risk_tolerance"] = [](AppConfig& c, const std::string& v) { c.policy.thresholds.risk_tolerance = toDouble(v); };
    t["filter.cvar_bound"] = [](AppConfig& c, const std::string& v) { c.policy.thresholds.cvar_bound = toDouble(v); };
    // mpc
    t["mpc.horizon"] = [](AppConfig& c, const std::string& v) { c.policy.mpc.horizon = static_cast<int>(toLong(v)); };
    t["mpc.q"] = [](AppConfig& c, const std::string& v) { c.policy.mpc.Q = toWeight(v); };
    t["mpc.r"] = [](AppConfig& c, const std::string& v) { c.policy.mpc.R = toWeight(v); };
    t["mpc.xi"] = [](AppConfig& c, const std::string& v) { c.policy.mpc.xi = toDouble(v); };
    t["mpc.safety_margin"] = [](AppConfig& c, const std::string& v) { c.policy.mpc.safety_margin = toDouble(v); };
    t["mpc.sqp_iters"] = [](AppConfig& c, const std::string& v) { c.policy.mpc.sqp_iters = static_cast<int>(toLong(v)); };
    t["mpc.slack_weight"] = [](AppConfig& c, const std::string& v) { c.policy.mpc.slack_weight = toDouble(v); };
    t["mpc.speed_facets"] = [](AppConfig& c, const std::string& v) { c.policy.mpc.speed_facets = static_cast<int>(toLong(v)); };
    t["mpc.tracked_humans"] = [](AppConfig& c, const std::string& v) { c.policy.tracked_humans = static_cast<int>(toLong(v)); };
    t["mpc.slack_threshold"] = [](AppConfig& c, const std::string& v) { c.policy.slack_threshold = toDouble(v); };
    // planner
    t["planner.subtrees"] = [](AppConfig& c, const std::string& v) { c.policy.planner.params.subtrees = static_cast<int>(toLong(v)); };
    t["planner.goal_bias"] = [](AppConfig& c, const std::string& v) { c.policy.planner.params.goal_bias = toDouble(v); };
    t["planner.step"] = [](AppConfig& c, const std::string& v) { c.policy.planner.params.step = toDouble(v); };
    t["planner.shortcut_attempts"] = [](AppConfig& c, const std::string& v) {
      c.policy.planner.params.shortcut_attempts = static_cast<int>(toLong(v));
    };
    t["planner.budget"] = [](AppConfig& c, const std::string& v) { c.policy.planner.params.budget = static_cast<int>(toLong(v)); };
    t["planner.switch_margin"] = [](AppConfig& c, const std::string& v) { c.policy.planner.switch_margin = toDouble(v); };
    t["planner.degraded_after"] = [](AppConfig& c, const std::string& v) {
      c.policy.planner.degraded_after = static_cast<int>(toLong(v));
    };
    t["planner.async"] = [](AppConfig& c, const std::string& v) { c.policy.async_planner = toBool(v); };
    // training
    t["train.lr"] = [](AppConfig& c, const std::string& v) { c.train.lr = toDouble(v); };
    t["train.batch"] = [](AppConfig& c, const std::string& v) { c.train.batch = static_cast<int>(toLong(v)); };
    t["train.max_epochs"] = [](AppConfig& c, const std::string& v) { c.train.max_epochs = static_cast<int>(toLong(v)); };
    t["train.lr_factor"] = [](AppConfig& c, const std::string& v) { c.train.lr_factor = toDouble(v); };
    t["train.scheduler_patience"] = [](AppConfig& c, const std::string& v) {
      c.train.scheduler_patience = static_cast<int>(toLong(v));
    };
    t["train.early_stop_patience"] = [](AppConfig& c, const std::string& v) {
      c.train.early_stop_patience = static_cast<int>(toLong(v));
    };
    t["train.noise_std_frac"] = [](AppConfig& c, const std::string& v) { c.train.noise_std_frac = toDouble(v); };
    t["train.val_split"] = [](AppConfig& c, const std::string& v) { c.train.val_split = toDouble(v); };
    t["train.min_improvement"] = [](AppConfig& c, const std::string& v) { c.train.min_improvement = toDouble(v); };
    t["train.members"] = [](AppConfig& c, const std::string& v) { c.train.members = static_cast<int>(toLong(v)); };
    t["train.widths"] = [](AppConfig& c, const std::string& v) {
      c.train.widths.clear();
      for (double w : toDoubles(v)) c.train.widths.push_back(static_cast<int>(w));
    };
    // collection and evaluation
    t["collect.episodes"] = [](AppConfig& c, const std::string& v) { c.collect.episodes = toLong(v); };
    t["eval.episodes"] = [](AppConfig& c, const std::string& v) { c.eval.episodes = toLong(v); };
    t["eval.cells"] = [](AppConfig& c, const std::string& v) {
      c.eval.cells = splitWords(v);
      for (const auto& cell : c.eval.cells) (void)cellIndex(cell);
    };
    t["eval.policies"] = [](AppConfig& c, const std::string& v) { c.eval.policies = parsePolicyList(v); };
    t["eval.model"] = [](AppConfig& c, const std::string& v) { c.policy.model_path = v; };
    t["eval.central_obstacle"] = [](AppConfig& c, const std::string& v) {
      const auto o = toObstacles(v);
      if (o.size() != 1) throw std::invalid_argument("expected one 'x y r' triple");
      c.eval.central = o.front();
    };
    t["eval.write_logs"] = [](AppConfig& c, const std::string& v) { c.eval.write_logs = toBool(v); };
    return t;
  }();
  return table;
}

std::string where(const std::map<std::string, int>& lines, const std::string& key)
{
  const auto it = lines.find(key);
  return it == lines.end() ? "" : " (line " + std::to_string(it->second) + ")";
}

// Values derived from other sections.
void link(AppConfig& c)
{
  auto& m = c.policy.mpc;
  m.dt = c.scenario.dt;
  m.v_max = c.scenario.robot_v_max;
  m.robot_radius = c.scenario.robot_radius;
  m.state_bounds = {
    c.scenario.arena.lo + Vec2{c.scenario.robot_radius, c.scenario.robot_radius},
    c.scenario.arena.hi - Vec2{c.scenario.robot_radius, c.scenario.robot_radius}};
  c.policy.sf = c.scenario.sf;
  c.train.seed = c.seed;
}

}  // namespace

std::vector<policy::PolicyKind> parsePolicyList(const std::string& s)
{
  std::vector<policy::PolicyKind> out;
  for (const auto& w : splitWords(s)) {
    const auto k = policy::policyKindFromString(w);
    if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
  }
  if (out.empty()) throw ConfigError("policy list is empty");
  return out;
}

std::size_t cellIndex(const std::string& cell)
{
  const auto it = std::find(kMatrixCells.begin(), kMatrixCells.end(), cell);
  if (it == kMatrixCells.end()) {
    throw ConfigError(
      "unknown scenario cell '" + cell + "' (expected open_aware, open_unaware, obstacle_aware or obstacle_unaware)");
  }
  return static_cast<std::size_t>(it - kMatrixCells.begin());
}

sim::ScenarioConfig cellScenario(const AppConfig& cfg, const std::string& cell)
{
  const std::size_t idx = cellIndex(cell);
  sim::ScenarioConfig s = cfg.scenario;
  s.name = cell;
  s.aware = idx % 2 == 0;
  if (idx >= 2) s.obstacles.push_back(cfg.eval.central);
  return s;
}

AppConfig parseConfig(const std::string& text, const std::string& source)
{
  boost::property_tree::ptree tree;
  try {
    std::istringstream in(text);
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(source + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  const auto lines = keyLines(text);
  AppConfig cfg;
  cfg.source = source;
  cfg.text = text;
  const auto& table = setters();
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError(source + ": key '" + section + "' outside any section" + where(lines, "." + section));
    }
    for (const auto& [key, node] : body) {
      const std::string full = section + "." + key;
      const auto it = table.find(full);
      if (it == table.end()) {
        throw ConfigError(source + ": unknown key '" + full + "'" + where(lines, full));
      }
      try {
        it->second(cfg, trim(node.data()));
      } catch (const ConfigError& e) {
        throw ConfigError(source + ": " + full + ": " + e.what() + where(lines, full));
      } catch (const std::exception& e) {
        throw ConfigError(source + ": " + full + ": " + e.what() + where(lines, full));
      }
    }
  }
  link(cfg);
  // semantic checks; messages already name the key
  try {
    sim::validate(cfg.scenario);
    policy::validate(cfg.policy);
    penn::validate(cfg.train);
  } catch (const std::exception& e) {
    throw ConfigError(source + ": " + e.what());
  }
  if (cfg.collect.episodes <= 0) throw ConfigError(source + ": collect.episodes must be positive");
  if (cfg.eval.episodes <= 0) throw ConfigError(source + ": eval.episodes must be positive");
  for (double r : cfg.policy.candidates.radii) {
    if (r > cfg.scenario.sensing_range) {
      throw ConfigError(source + ": candidates.radii must not exceed scenario.sensing_range" + where(lines, "candidates.radii"));
    }
  }
  return cfg;
}

AppConfig loadConfig(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot read config file '" + path.string() + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parseConfig(ss.str(), path.string());
}

}  // namespace crowdnav::config
