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

// The `oomdp` command: learn, plan, localize, eval and map subcommands
// sharing one set of flags (the RunConfig keys).

#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oomdp/io.hpp"

namespace oomdp::cli {

enum class ExitCode : int { kOk = 0, kUsage = 1, kRuntime = 2 };

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

/// OOMDP_LOG value; unset or unrecognised means warn.
inline LogLevel log_level_from(const char* value) {
  if (value == nullptr) return LogLevel::kWarn;
  const std::string v(value);
  if (v == "error") return LogLevel::kError;
  if (v == "warn") return LogLevel::kWarn;
  if (v == "info") return LogLevel::kInfo;
  if (v == "debug") return LogLevel::kDebug;
  return LogLevel::kWarn;
}

class Logger {
 public:
  Logger(std::ostream& sink, LogLevel level) : sink_(sink), level_(level) {}

  void error(const std::string& m) const { write(LogLevel::kError, "error", m); }
  void warn(const std::string& m) const { write(LogLevel::kWarn, "warn", m); }
  void info(const std::string& m) const { write(LogLevel::kInfo, "info", m); }
  void debug(const std::string& m) const { write(LogLevel::kDebug, "debug", m); }

 private:
  void write(LogLevel at, const char* tag, const std::string& m) const {
    if (static_cast<int>(at) <= static_cast<int>(level_)) sink_ << "[" << tag << "] " << m << "\n";
  }
  std::ostream& sink_;
  LogLevel level_;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string describe(const std::string& key) {
  static const std::map<std::string, std::string> text = {
      {"map", "map file"},
      {"out", "artifact directory (created if missing)"},
      {"model", "model file for plan (default <out>/model.json)"},
      {"trajectory", "scripted odometry file for localize (default: seeded random walk)"},
      {"episodes", "training episodes"},
      {"seed", "random seed"},
      {"k", "max predictions per (action, attribute, type)"},
      {"steps", "random-walk length for localize"},
      {"gamma", "discount factor"},
      {"epsilon", "value iteration stopping residual"},
      {"rmax", "optimistic reward for unknown transitions"},
      {"horizon", "max steps per episode"},
      {"reward-step", "reward per step"},
      {"reward-delivery", "reward for delivering the box"},
      {"reward-illegal", "reward for an illegal PICKUP or DROPOFF"},
      {"particles-min", "min particles"},
      {"particles-max", "max particles"},
      {"beams", "beams per scan"},
      {"max-range", "max beam range in cells"},
      {"sigma-trans", "odometry translation noise"},
      {"sigma-rot", "odometry rotation noise"},
      {"sigma-range", "beam range noise"},
      {"z-hit", "beam model hit weight"},
      {"z-rand", "beam model random weight"},
      {"kld-epsilon", "KLD sampling error bound"},
      {"kld-delta", "KLD sampling confidence"},
      {"bin-xy", "KLD histogram bin size in cells"},
      {"bin-theta", "KLD histogram bin size in radians"},
      {"mode-distance", "cluster link distance for mode counting"}};
  const auto it = text.find(key);
  return it == text.end() ? key : it->second;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << content;
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline std::filesystem::path out_dir(const RunConfig& cfg) {
  std::filesystem::path dir(cfg.out);
  std::filesystem::create_directories(dir);
  return dir;
}

inline GridMap require_map(const RunConfig& cfg) {
  if (cfg.map.empty()) throw UsageError("--map is required");
  return load_map(cfg.map);
}

inline std::size_t count_mispredictions(const std::vector<EpisodeRecord>& episodes) {
  std::size_t bad = 0;
  for (const EpisodeRecord& e : episodes) {
    for (const EpisodeStep& st : e.steps) {
      if (const auto* k = std::get_if<KnownTransition>(&st.prediction); k && k->next != st.next)
        ++bad;
      if (is_failure(st.prediction) && st.next != st.state) ++bad;
    }
  }
  return bad;
}

inline std::string optional_text(const std::optional<int>& v) {
  return v ? std::to_string(*v) : "none";
}

inline std::string optional_text(const std::optional<std::size_t>& v) {
  return v ? std::to_string(*v) : "none";
}

inline int cmd_learn(const RunConfig& cfg, std::ostream& out, const Logger& log) {
  const GridMap map = require_map(cfg);
  log.info("training " + std::to_string(cfg.episodes) + " episodes on " + cfg.map);
  const TrainingResult tr = train(map, cfg.planner, cfg.k, cfg.seed, cfg.episodes);
  for (const EpisodeRecord& e : tr.episodes)
    log.debug("episode " + std::to_string(e.episode) + ": " + std::to_string(e.step_count()) +
              " steps, " + std::to_string(e.unknown_predictions) + " unknown");
  std::string episodes;
  for (const EpisodeRecord& e : tr.episodes) episodes += episode_to_jsonl(e);
  const std::string summary = summary_csv(tr.episodes);
  if (!cfg.out.empty()) {
    const auto dir = out_dir(cfg);
    write_file(dir / "model.json", model_to_json(tr.learner).dump(2) + "\n");
    write_file(dir / "episodes.jsonl", episodes);
    write_file(dir / "summary.csv", summary);
    log.info("wrote model.json, episodes.jsonl, summary.csv to " + dir.string());
  } else {
    log.warn("no --out given; artifacts are not saved");
  }
  out << summary;
  return 0;
}

inline int cmd_plan(const RunConfig& cfg, std::ostream& out, const Logger& log) {
  const GridMap map = require_map(cfg);
  std::string model_path = cfg.model;
  if (model_path.empty()) {
    if (cfg.out.empty()) throw UsageError("plan needs --model or --out");
    model_path = (std::filesystem::path(cfg.out) / "model.json").string();
  }
  json j;
  try {
    j = json::parse(read_file(model_path));
  } catch (const json::parse_error& e) {
    throw ConfigError("model file is not valid JSON: " + std::string(e.what()));
  }
  const DoormaxLearner learner = model_from_json(j);
  const std::size_t target = choose_target_box(map, cfg.seed);
  EpisodeRecord rec = rollout(map, learner, cfg.planner, target);
  rec.episode = 1;
  const auto optimal = bfs_optimal_steps(map, initial_state(map, target));
  if (!cfg.out.empty()) write_file(out_dir(cfg) / "rollout.jsonl", episode_to_jsonl(rec));
  if (rec.unknown_predictions > 0) log.warn("the model left some transitions unknown");
  out << "target_box=" << target << "\n"
      << "steps=" << rec.step_count() << "\n"
      << "reward=" << format_number(rec.total_reward) << "\n"
      << "complete=" << (rec.complete ? 1 : 0) << "\n"
      << "unknown_predictions=" << rec.unknown_predictions << "\n"
      << "optimal_steps=" << optional_text(optimal) << "\n";
  return 0;
}

inline int cmd_localize(const RunConfig& cfg, std::ostream& out, const Logger& log) {
  const GridMap map = require_map(cfg);
  Trajectory traj;
  if (!cfg.trajectory.empty()) {
    traj = parse_trajectory(read_file(cfg.trajectory));
  } else {
    const Cell s = map.agent_start;
    traj.start = {s.x + 0.5, s.y + 0.5, 0.0};
    traj.moves = odometry_for_path(random_walk(map, s, cfg.steps, cfg.seed), 0.0);
    log.info("random walk of " + std::to_string(traj.moves.size()) + " steps");
  }
  if (!pose_in_free_space(map, traj.start))
    throw std::invalid_argument("trajectory starts inside a wall");
  const auto trace = run_localization(map, traj.start, traj.moves, cfg.mcl, cfg.seed);
  const std::string csv = pose_trace_csv(trace);
  if (!cfg.out.empty()) {
    const auto dir = out_dir(cfg);
    write_file(dir / "poses.csv", csv);
    write_file(dir / "trajectory.txt", render_trajectory(traj));
  }
  for (const TraceRow& r : trace)
    if (r.diverged) log.warn("filter diverged at t=" + std::to_string(r.t) + "; reinitialised");
  out << csv;
  return 0;
}

inline int cmd_eval(const RunConfig& cfg, std::ostream& out, const Logger& log) {
  const GridMap map = require_map(cfg);
  const TrainingResult tr = train(map, cfg.planner, cfg.k, cfg.seed, cfg.episodes);
  const EpisodeRecord greedy = rollout(map, tr.learner, cfg.planner, tr.target_box);
  const auto counts = unknown_count(tr.learner.store(), tr.learner.counters());
  std::size_t max_count = 0;
  for (const auto& [key, c] : counts) max_count = std::max(max_count, c);
  std::ostringstream text;
  text << "target_box=" << tr.target_box << "\n"
       << "optimal_steps=" << optional_text(tr.optimal_steps) << "\n"
       << "greedy_steps=" << (greedy.complete ? std::to_string(greedy.step_count()) : "none")
       << "\n"
       << "converged_episode=" << optional_text(tr.converged_episode) << "\n"
       << "mispredictions=" << count_mispredictions(tr.episodes) << "\n"
       << "kwik_bound=" << tr.learner.bound() << "\n"
       << "max_unknown_count=" << max_count << "\n";
  for (const auto& [key, c] : counts) text << "unknown_count[" << to_string(key) << "]=" << c << "\n";
  for (const auto& [a, c] : tr.learner.counters().failure_memory)
    text << "failure_unknown_count[" << action_name(a) << "]=" << c << "\n";
  if (max_count > tr.learner.bound()) log.error("KWIK bound exceeded");
  if (!cfg.out.empty()) write_file(out_dir(cfg) / "eval.txt", text.str());
  out << text.str();
  return 0;
}

inline int cmd_map(const RunConfig& cfg, std::ostream& out, const Logger& log) {
  const GridMap map = require_map(cfg);
  const std::string canonical = render_map(map);
  if (!cfg.out.empty()) {
    const auto dir = out_dir(cfg);
    write_file(dir / "map.txt", canonical);
    if (!map.box_spawns.empty()) {
      const OOState s = initial_state(map, 0);
      write_file(dir / "scan.csv", scan_csv(simulate_scan(s, map, cfg.mcl.beams, cfg.mcl.max_range)));
    }
  }
  log.info("map is valid: " + std::to_string(map.width()) + "x" + std::to_string(map.height()));
  out << canonical;
  return 0;
}

}  // namespace detail

/// Runs one invocation. args excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
               LogLevel level = log_level_from(std::getenv("OOMDP_LOG"))) {
  const Logger log(err, level);
  const RunConfig defaults;
  CLI::App app{"Object-oriented MDP warehouse lab", "oomdp"};
  app.require_subcommand(1, 1);
  app.failure_message(CLI::FailureMessage::help);

  struct Command {
    CLI::App* app;
    std::string config;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
    int (*handler)(const RunConfig&, std::ostream&, const Logger&);
  };
  const std::vector<std::tuple<std::string, std::string, int (*)(const RunConfig&, std::ostream&,
                                                                 const Logger&)>>
      table = {{"learn", "train the model over repeated episodes", detail::cmd_learn},
               {"plan", "plan on a saved model and roll out greedily", detail::cmd_plan},
               {"localize", "run Monte Carlo localization along a trajectory",
                detail::cmd_localize},
               {"eval", "train, then compare with the shortest-path oracle and KWIK bound",
                detail::cmd_eval},
               {"map", "validate a map and print its canonical form", detail::cmd_map}};
  std::vector<std::unique_ptr<Command>> commands;
  for (const auto& [name, help, handler] : table) {
    auto cmd = std::make_unique<Command>();
    cmd->handler = handler;
    cmd->app = app.add_subcommand(name, help);
    cmd->app->add_option("--config", cmd->config, "key = value config file")
        ->default_str("none");
    for (const std::string& key : RunConfig::keys()) {
      const std::string def = defaults.get(key);
      cmd->options[key] = cmd->app->add_option("--" + key, cmd->values[key], detail::describe(key))
                              ->default_str(def.empty() ? "none" : def);
    }
    commands.push_back(std::move(cmd));
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
  }

  for (const auto& cmd : commands) {
    if (!cmd->app->parsed()) continue;
    try {
      RunConfig cfg;
      if (!cmd->config.empty()) apply_config(cfg, parse_config_text(detail::read_file(cmd->config)));
      for (const std::string& key : RunConfig::keys())
        if (cmd->options[key]->count() > 0) cfg.set(key, cmd->values[key]);
      cfg.validate();
      return cmd->handler(cfg, out, log);
    } catch (const UsageError& e) {
      err << "usage error: " << e.what() << "\n" << cmd->app->help();
      return static_cast<int>(ExitCode::kUsage);
    } catch (const std::exception& e) {
      log.error(e.what());
      return static_cast<int>(ExitCode::kRuntime);
    }
  }
  return static_cast<int>(ExitCode::kUsage);
}

}  // namespace oomdp::cli
