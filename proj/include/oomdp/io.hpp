// Copyright 2026 The OOMDP Lab Authors
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

// Text map format, run configuration and output artifacts.
//
// Map legend: '#' wall, '.' free, 'B' box spawn, 'D' destination,
// 'A' agent start. Lines starting with '%' before the grid are comments.
// The first grid row is the north edge.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "oomdp/grid_map.hpp"
#include "oomdp/learner.hpp"
#include "oomdp/localization.hpp"
#include "oomdp/planner.hpp"
#include "oomdp/state.hpp"
#include "oomdp/warehouse.hpp"

namespace oomdp {

using json = nlohmann::json;

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column)
      : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                           ": " + message),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string_view rstrip(std::string_view s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::string_view strip(std::string_view s) {
  s = rstrip(s);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    const std::size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) {
      if (begin < text.size()) lines.push_back(text.substr(begin));
      break;
    }
    lines.push_back(text.substr(begin, end - begin));
    begin = end + 1;
  }
  return lines;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Maps

inline GridMap parse_map(std::string_view text) {
  const std::vector<std::string_view> lines = detail::split_lines(text);
  std::size_t first = 0;
  while (first < lines.size()) {
    const std::string_view l = detail::rstrip(lines[first]);
    if (!l.empty() && l.front() != '%') break;
    ++first;
  }
  std::size_t last = lines.size();
  while (last > first && detail::rstrip(lines[last - 1]).empty()) --last;
  if (first == last) throw ParseError("map contains no grid rows", lines.size() + 1, 1);

  const std::size_t width = detail::rstrip(lines[first]).size();
  const std::size_t height = last - first;
  if (width > 100000 || height > 100000) throw ParseError("map too large", first + 1, 1);

  GridMap map(static_cast<int>(width), static_cast<int>(height));
  std::optional<Cell> agent, destination;
  for (std::size_t r = first; r < last; ++r) {
    const std::string_view row = detail::rstrip(lines[r]);
    const std::size_t line_no = r + 1;
    if (row.size() != width)
      throw ParseError("ragged row: expected " + std::to_string(width) + " cells, found " +
                           std::to_string(row.size()),
                       line_no, std::min(row.size(), width) + 1);
    const int y = static_cast<int>(height - 1 - (r - first));
    for (std::size_t col = 0; col < row.size(); ++col) {
      const Cell c{static_cast<int>(col), y};
      switch (row[col]) {
        case '#': map.set_wall(c); break;
        case '.': break;
        case 'B': map.box_spawns.push_back(c); break;
        case 'D':
          if (destination) throw ParseError("duplicate destination 'D'", line_no, col + 1);
          destination = c;
          break;
        case 'A':
          if (agent) throw ParseError("duplicate agent start 'A'", line_no, col + 1);
          agent = c;
          break;
        default: {
          const unsigned char ch = static_cast<unsigned char>(row[col]);
          char buf[8];
          std::snprintf(buf, sizeof buf, "0x%02x", ch);
          throw ParseError(std::string("unknown glyph ") + buf, line_no, col + 1);
        }
      }
    }
  }
  if (!agent) throw ParseError("missing agent start 'A'", last, 1);
  if (!destination) throw ParseError("missing destination 'D'", last, 1);
  map.agent_start = *agent;
  map.destination = *destination;
  return map;
}

inline GridMap load_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open map file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_map(buf.str());
}

/// Canonical text, one newline-terminated row per line, north row first.
/// When landmarks share a cell the glyph priority is A, D, B.
inline std::string render_map(const GridMap& map) {
  std::string out;
  out.reserve(static_cast<std::size_t>((map.width() + 1) * map.height()));
  for (int y = map.height() - 1; y >= 0; --y) {
    for (int x = 0; x < map.width(); ++x) {
      const Cell c{x, y};
      char g = map.is_wall(c) ? '#' : '.';
      for (const Cell& b : map.box_spawns)
        if (b == c) g = 'B';
      if (map.destination == c) g = 'D';
      if (map.agent_start == c) g = 'A';
      out += g;
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Number formatting

/// Six significant digits, as used by every CSV artifact.
inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

/// v rounded to six significant digits, for JSON output.
inline double round6(double v) { return std::strtod(format_number(v).c_str(), nullptr); }

// ---------------------------------------------------------------------------
// JSON renderings

inline json state_to_json(const OOState& s) {
  json boxes = json::array();
  for (const BoxObject& b : s.boxes)
    boxes.push_back({{"id", b.id}, {"x", b.pos.x}, {"y", b.pos.y}, {"in_bot", b.in_bot}});
  return {{"agent", {{"x", s.agent.x}, {"y", s.agent.y}}},
          {"boxes", boxes},
          {"destination", {{"x", s.destination.x}, {"y", s.destination.y}}},
          {"target_box", s.has_target() ? json(s.target().id) : json(nullptr)}};
}

inline json effect_to_json(const Effect& e) {
  json operand = attribute_kind(e.attribute) == AttributeKind::kBoolean ? json(e.operand != 0)
                                                                         : json(e.operand);
  return {{"type", effect_type_name(e.type)}, {"operand", operand}};
}

/// Prediction store and failure conditions; keys in declaration order,
/// failure conditions sorted.
inline json model_to_json(const DoormaxLearner& learner) {
  json terms = json::array();
  for (const TermDescriptor& t : learner.schema().terms()) terms.push_back(t.to_string());
  json keys = json::array();
  for (const PredictionKey& key : all_prediction_keys()) {
    const auto& entry = learner.store().entry(key);
    json preds = json::array();
    for (const Prediction& p : entry.predictions)
      preds.push_back({{"model", p.model.to_string()}, {"effect", effect_to_json(p.effect)}});
    keys.push_back({{"action", action_name(key.action)},
                    {"attribute", attribute_name(key.attribute)},
                    {"type", effect_type_name(key.type)},
                    {"predictions", preds},
                    {"blacklisted", entry.blacklisted}});
  }
  json failures = json::object();
  for (Action a : kAllActions) {
    json list = json::array();
    for (const Condition& c : learner.failures().of(a)) list.push_back(c.to_string());
    std::vector<std::string> sorted = list.get<std::vector<std::string>>();
    std::sort(sorted.begin(), sorted.end());
    failures[std::string(action_name(a))] = sorted;
  }
  return {{"k", learner.store().k()}, {"schema", terms}, {"keys", keys}, {"failures", failures}};
}

inline DoormaxLearner model_from_json(const json& j) {
  try {
    const auto k = j.at("k").get<std::size_t>();
    DoormaxLearner learner(warehouse_schema(), k);
    const auto terms = j.at("schema").get<std::vector<std::string>>();
    std::vector<std::string> expected;
    for (const TermDescriptor& t : learner.schema().terms()) expected.push_back(t.to_string());
    if (terms != expected) throw ConfigError("model schema differs from the warehouse schema");
    for (const json& entry : j.at("keys")) {
      const auto action = action_from_name(entry.at("action").get<std::string>());
      const auto attribute = attribute_from_name(entry.at("attribute").get<std::string>());
      const auto type = effect_type_from_name(entry.at("type").get<std::string>());
      if (!action || !attribute || !type) throw ConfigError("unknown prediction key in model");
      auto& slot = learner.store().entry({*action, *attribute, *type});
      slot.blacklisted = entry.at("blacklisted").get<bool>();
      for (const json& p : entry.at("predictions")) {
        const json& e = p.at("effect");
        const auto etype = effect_type_from_name(e.at("type").get<std::string>());
        if (!etype) throw ConfigError("unknown effect type in model");
        const json& op = e.at("operand");
        const int operand = op.is_boolean() ? (op.get<bool>() ? 1 : 0) : op.get<int>();
        Effect effect{*attribute, *etype, operand};
        check_effect(effect);
        Condition model = Condition::from_string(p.at("model").get<std::string>());
        if (model.size() != learner.schema().size())
          throw ConfigError("model condition length differs from schema");
        slot.predictions.push_back({model, effect});
      }
    }
    for (const auto& [name, list] : j.at("failures").items()) {
      const auto action = action_from_name(name);
      if (!action) throw ConfigError("unknown action in failure conditions: " + name);
      for (const json& c : list)
        learner.failures().record(*action, Condition::from_string(c.get<std::string>()));
    }
    return learner;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed model file: ") + e.what());
  } catch (const ConditionError& e) {
    throw ConfigError(std::string("malformed model file: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("malformed model file: ") + e.what());
  }
}

/// One JSON object per step.
inline std::string episode_to_jsonl(const EpisodeRecord& rec) {
  std::string out;
  for (const EpisodeStep& st : rec.steps) {
    json line = {{"episode", rec.episode},
                 {"t", st.t},
                 {"state", state_to_json(st.state)},
                 {"action", action_name(st.action)},
                 {"reward", round6(st.reward)},
                 {"prediction", prediction_kind_name(st.prediction)}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

inline std::string summary_csv(const std::vector<EpisodeRecord>& episodes) {
  std::string out = "episode,steps,reward,unknown_predictions,converged\n";
  for (const EpisodeRecord& e : episodes) {
    const bool converged = e.complete && e.unknown_predictions == 0;
    out += std::to_string(e.episode) + "," + std::to_string(e.step_count()) + "," +
           format_number(e.total_reward) + "," + std::to_string(e.unknown_predictions) + "," +
           (converged ? "1" : "0") + "\n";
  }
  return out;
}

inline std::string scan_csv(const Scan& scan) {
  std::string out = "bearing_rad,range_cells\n";
  for (const Beam& b : scan.beams)
    out += format_number(b.bearing) + "," + format_number(b.range) + "\n";
  return out;
}

inline std::string pose_trace_csv(const std::vector<TraceRow>& trace) {
  std::string out = "t,true_x,true_y,true_theta,est_x,est_y,est_theta,n_particles,modes,rmse\n";
  for (const TraceRow& r : trace) {
    out += std::to_string(r.t) + "," + format_number(r.truth.x) + "," + format_number(r.truth.y) +
           "," + format_number(r.truth.theta) + "," + format_number(r.estimate.x) + "," +
           format_number(r.estimate.y) + "," + format_number(r.estimate.theta) + "," +
           std::to_string(r.particles) + "," + std::to_string(r.modes) + "," +
           format_number(r.rmse) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scripted trajectories

struct Trajectory {
  Pose start;
  std::vector<OdometryDelta> moves;
};

/// Lines `start X Y THETA` (once, first) and `move DX DY DTHETA`;
/// '%' starts a comment.
inline Trajectory parse_trajectory(std::string_view text) {
  Trajectory out;
  bool have_start = false;
  const auto lines = detail::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    if (const auto pct = line.find('%'); pct != std::string_view::npos) line = line.substr(0, pct);
    line = detail::strip(line);
    if (line.empty()) continue;
    std::istringstream in{std::string(line)};
    std::string word;
    double a = 0, b = 0, c = 0;
    in >> word >> a >> b >> c;
    std::string rest;
    if (in.fail() || (in >> rest))
      throw ParseError("expected '<start|move> number number number'", i + 1, 1);
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c))
      throw ParseError("non-finite number", i + 1, 1);
    if (word == "start") {
      if (have_start || !out.moves.empty())
        throw ParseError("'start' must appear once, before any move", i + 1, 1);
      out.start = {a, b, normalize_angle(c)};
      have_start = true;
    } else if (word == "move") {
      if (!have_start) throw ParseError("'move' before 'start'", i + 1, 1);
      out.moves.push_back({a, b, c});
    } else {
      throw ParseError("unknown directive '" + word + "'", i + 1, 1);
    }
  }
  if (!have_start) throw ParseError("trajectory has no 'start' line", lines.size() + 1, 1);
  return out;
}

inline std::string render_trajectory(const Trajectory& t) {
  std::string out = "start " + format_number(t.start.x) + " " + format_number(t.start.y) + " " +
                    format_number(t.start.theta) + "\n";
  for (const OdometryDelta& d : t.moves)
    out += "move " + format_number(d.dx) + " " + format_number(d.dy) + " " +
           format_number(d.dtheta) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Run configuration

/// Every tunable of a run. Keys of the config file and the CLI flags are
/// the same strings (see RunConfig::keys()).
struct RunConfig {
  std::string map;
  std::string out;
  std::string model;
  std::string trajectory;
  std::size_t episodes = 30;
  std::uint64_t seed = 0;
  std::size_t k = 2;
  std::size_t steps = 20;
  PlannerConfig planner;
  MclConfig mcl;

  static const std::vector<std::string>& keys() {
    static const std::vector<std::string> k = {
        "map",           "out",           "model",         "trajectory",   "episodes",
        "seed",          "k",             "steps",         "gamma",        "epsilon",
        "rmax",          "horizon",       "reward-step",   "reward-delivery",
        "reward-illegal", "particles-min", "particles-max", "beams",        "max-range",
        "sigma-trans",   "sigma-rot",     "sigma-range",   "z-hit",        "z-rand",
        "kld-epsilon",   "kld-delta",     "bin-xy",        "bin-theta",    "mode-distance"};
    return k;
  }

  /// Current value of a key as text (used for --help defaults).
  std::string get(const std::string& key) const {
    if (key == "map") return map;
    if (key == "out") return out;
    if (key == "model") return model;
    if (key == "trajectory") return trajectory;
    if (key == "episodes") return std::to_string(episodes);
    if (key == "seed") return std::to_string(seed);
    if (key == "k") return std::to_string(k);
    if (key == "steps") return std::to_string(steps);
    if (key == "gamma") return format_number(planner.gamma);
    if (key == "epsilon") return format_number(planner.epsilon);
    if (key == "rmax") return format_number(planner.r_max);
    if (key == "horizon") return std::to_string(planner.horizon);
    if (key == "reward-step") return format_number(planner.rewards.step);
    if (key == "reward-delivery") return format_number(planner.rewards.delivery);
    if (key == "reward-illegal") return format_number(planner.rewards.illegal);
    if (key == "particles-min") return std::to_string(mcl.kld.min_particles);
    if (key == "particles-max") return std::to_string(mcl.kld.max_particles);
    if (key == "beams") return std::to_string(mcl.beams);
    if (key == "max-range") return format_number(mcl.max_range);
    if (key == "sigma-trans") return format_number(mcl.motion.sigma_trans);
    if (key == "sigma-rot") return format_number(mcl.motion.sigma_rot);
    if (key == "sigma-range") return format_number(mcl.sensor.sigma_range);
    if (key == "z-hit") return format_number(mcl.sensor.z_hit);
    if (key == "z-rand") return format_number(mcl.sensor.z_rand);
    if (key == "kld-epsilon") return format_number(mcl.kld.epsilon);
    if (key == "kld-delta") return format_number(mcl.kld.delta);
    if (key == "bin-xy") return format_number(mcl.kld.bin_xy);
    if (key == "bin-theta") return format_number(mcl.kld.bin_theta);
    if (key == "mode-distance") return format_number(mcl.modes.link_distance);
    throw ConfigError("unknown configuration key: " + key);
  }

  void set(const std::string& key, const std::string& value) {
    auto as_double = [&]() {
      char* end = nullptr;
      const double v = std::strtod(value.c_str(), &end);
      if (value.empty() || *end != '\0' || !std::isfinite(v))
        throw ConfigError("invalid number for " + key + ": '" + value + "'");
      return v;
    };
    auto as_count = [&]() -> std::uint64_t {
      if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos)
        throw ConfigError("invalid non-negative integer for " + key + ": '" + value + "'");
      try {
        return std::stoull(value);
      } catch (const std::exception&) {
        throw ConfigError("integer out of range for " + key + ": '" + value + "'");
      }
    };
    if (key == "map") map = value;
    else if (key == "out") out = value;
    else if (key == "model") model = value;
    else if (key == "trajectory") trajectory = value;
    else if (key == "episodes") episodes = as_count();
    else if (key == "seed") seed = as_count();
    else if (key == "k") k = as_count();
    else if (key == "steps") steps = as_count();
    else if (key == "gamma") planner.gamma = as_double();
    else if (key == "epsilon") planner.epsilon = as_double();
    else if (key == "rmax") planner.r_max = as_double();
    else if (key == "horizon") planner.horizon = static_cast<int>(as_count());
    else if (key == "reward-step") planner.rewards.step = as_double();
    else if (key == "reward-delivery") planner.rewards.delivery = as_double();
    else if (key == "reward-illegal") planner.rewards.illegal = as_double();
    else if (key == "particles-min") mcl.kld.min_particles = as_count();
    else if (key == "particles-max") mcl.kld.max_particles = as_count();
    else if (key == "beams") mcl.beams = static_cast<int>(as_count());
    else if (key == "max-range") mcl.max_range = as_double();
    else if (key == "sigma-trans") mcl.motion.sigma_trans = as_double();
    else if (key == "sigma-rot") mcl.motion.sigma_rot = as_double();
    else if (key == "sigma-range") mcl.sensor.sigma_range = as_double();
    else if (key == "z-hit") mcl.sensor.z_hit = as_double();
    else if (key == "z-rand") mcl.sensor.z_rand = as_double();
    else if (key == "kld-epsilon") mcl.kld.epsilon = as_double();
    else if (key == "kld-delta") mcl.kld.delta = as_double();
    else if (key == "bin-xy") mcl.kld.bin_xy = as_double();
    else if (key == "bin-theta") mcl.kld.bin_theta = as_double();
    else if (key == "mode-distance") mcl.modes.link_distance = as_double();
    else throw ConfigError("unknown configuration key: " + key);
  }

  /// Range checks owned by the individual modules.
  void validate() const {
    try {
      planner.validate();
      mcl.kld.validate();
      mcl.sensor.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (k == 0) throw ConfigError("k must be positive");
    if (mcl.beams < 4) throw ConfigError("beams must be at least 4");
    if (!(mcl.max_range > 0)) throw ConfigError("max-range must be positive");
    if (mcl.motion.sigma_trans < 0 || mcl.motion.sigma_rot < 0)
      throw ConfigError("motion noise must be nonnegative");
  }
};

/// `key = value` lines; '#' starts a comment.
inline std::map<std::string, std::string> parse_config_text(std::string_view text) {
  std::map<std::string, std::string> out;
  const auto lines = detail::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::strip(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(i + 1) + ": expected 'key = value'");
    const std::string key(detail::strip(line.substr(0, eq)));
    const std::string value(detail::strip(line.substr(eq + 1)));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(i + 1) + ": empty key");
    out[key] = value;
  }
  return out;
}

inline void apply_config(RunConfig& cfg, const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) cfg.set(key, value);
}

}  // namespace oomdp
