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

// Optimistic value iteration over the learned model and the
// plan-act-learn episode loop.
//
// A state-action pair the learner cannot predict leads to a fictitious
// absorbing state paying r_max forever, so the greedy policy heads for
// the nearest unexplored transition until the model certifies a path to
// delivery.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "oomdp/grid_map.hpp"
#include "oomdp/learner.hpp"
#include "oomdp/rng.hpp"
#include "oomdp/state.hpp"
#include "oomdp/warehouse.hpp"

namespace oomdp {

class PlanningResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PlannerConfig {
  double gamma = 0.95;
  double epsilon = 1e-6;
  double r_max = 20.0;
  int horizon = 500;
  std::size_t max_states = 200000;
  std::size_t max_sweeps = 1000000;
  RewardConfig rewards;

  void validate() const {
    if (!(gamma > 0 && gamma < 1)) throw std::invalid_argument("gamma must lie in (0,1)");
    if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
    if (horizon <= 0) throw std::invalid_argument("horizon must be positive");
  }
};

/// Tabular outcome of taking action a in state s.
struct TransitionOutcome {
  bool unknown = false;
  std::size_t next = 0;
  double reward = 0.0;
  bool terminal = false;
};

/// outcomes[s * num_actions + a].
struct TransitionTable {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::vector<TransitionOutcome> outcomes;

  const TransitionOutcome& at(std::size_t s, std::size_t a) const {
    return outcomes[s * num_actions + a];
  }
};

struct ValueIterationResult {
  std::vector<double> values;
  std::vector<std::size_t> policy;  // action index per state
  std::vector<double> residuals;    // max-norm change per sweep
  bool converged = false;
};

inline double optimistic_value(const PlannerConfig& cfg) { return cfg.r_max / (1.0 - cfg.gamma); }

inline double q_value(const TransitionTable& table, std::span<const double> values, std::size_t s,
                      std::size_t a, const PlannerConfig& cfg) {
  const TransitionOutcome& o = table.at(s, a);
  if (o.unknown) return optimistic_value(cfg);
  return o.reward + (o.terminal ? 0.0 : cfg.gamma * values[o.next]);
}

/// Greedy action; ties go to the lowest action index.
inline std::size_t greedy_action(const TransitionTable& table, std::span<const double> values,
                                 std::size_t s, const PlannerConfig& cfg) {
  std::size_t best = 0;
  double best_q = q_value(table, values, s, 0, cfg);
  for (std::size_t a = 1; a < table.num_actions; ++a) {
    const double q = q_value(table, values, s, a, cfg);
    if (q > best_q + 1e-9 * std::max(1.0, std::abs(best_q))) {
      best_q = q;
      best = a;
    }
  }
  return best;
}

/// Synchronous value iteration until the max-norm update drops below
/// cfg.epsilon. `warm_start`, when sized to the table, seeds the values.
inline ValueIterationResult value_iteration(const TransitionTable& table,
                                            const PlannerConfig& cfg,
                                            std::span<const double> warm_start = {}) {
  cfg.validate();
  ValueIterationResult out;
  out.values.assign(table.num_states, 0.0);
  if (warm_start.size() == table.num_states)
    out.values.assign(warm_start.begin(), warm_start.end());
  std::vector<double> next(table.num_states);
  for (std::size_t sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
    double residual = 0.0;
    for (std::size_t s = 0; s < table.num_states; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < table.num_actions; ++a)
        best = std::max(best, q_value(table, out.values, s, a, cfg));
      next[s] = best;
      residual = std::max(residual, std::abs(best - out.values[s]));
    }
    out.values.swap(next);
    out.residuals.push_back(residual);
    if (residual < cfg.epsilon) {
      out.converged = true;
      break;
    }
  }
  out.policy.resize(table.num_states);
  for (std::size_t s = 0; s < table.num_states; ++s)
    out.policy[s] = greedy_action(table, out.values, s, cfg);
  return out;
}

/// Lookup from task state to its row in the value table.
class TaskStateIndex {
 public:
  TaskStateIndex() = default;
  explicit TaskStateIndex(std::vector<OOState> states) : states_(std::move(states)) {
    for (std::size_t i = 0; i < states_.size(); ++i) index_.emplace(key_of(states_[i]), i);
  }

  std::size_t size() const { return states_.size(); }
  const OOState& state(std::size_t i) const { return states_[i]; }
  const std::vector<OOState>& states() const { return states_; }

  std::optional<std::size_t> find(const OOState& s) const {
    auto it = index_.find(key_of(s));
    if (it == index_.end() || states_[it->second] != s) return std::nullopt;
    return it->second;
  }

 private:
  using Key = std::tuple<int, int, bool>;
  static Key key_of(const OOState& s) { return {s.agent.x, s.agent.y, s.carrying()}; }

  std::vector<OOState> states_;
  std::map<Key, std::size_t> index_;
};

struct PlanResult {
  TaskStateIndex index;
  ValueIterationResult vi;

  Action action_for(const OOState& s) const {
    auto i = index.find(s);
    if (!i) throw std::out_of_range("state outside the planned task");
    return kAllActions[vi.policy[*i]];
  }
  double value_of(const OOState& s) const {
    auto i = index.find(s);
    if (!i) throw std::out_of_range("state outside the planned task");
    return vi.values[*i];
  }
};

/// Transition table induced by the learner's predictions on every task
/// state. Failure predictions become self-loops.
inline TransitionTable predicted_transitions(const DoormaxLearner& learner, const GridMap& map,
                                             const TaskStateIndex& index,
                                             const PlannerConfig& cfg) {
  TransitionTable table;
  table.num_states = index.size();
  table.num_actions = kAllActions.size();
  table.outcomes.resize(table.num_states * table.num_actions);
  for (std::size_t s = 0; s < index.size(); ++s) {
    const OOState& state = index.state(s);
    const Condition cond = learner.condition(state, map);
    for (std::size_t a = 0; a < kAllActions.size(); ++a) {
      const Action action = kAllActions[a];
      TransitionOutcome& o = table.outcomes[s * table.num_actions + a];
      const TransitionPrediction p =
          predict_transition(state, cond, action, learner.store(), learner.failures());
      if (is_unknown(p)) {
        o.unknown = true;
        continue;
      }
      const OOState next = is_known(p) ? std::get<KnownTransition>(p).next : state;
      o.reward = transition_reward(state, action, next, cfg.rewards);
      o.terminal = is_delivery(state, action, next);
      if (o.terminal) continue;
      auto ni = index.find(next);
      if (!ni) throw std::logic_error("learner predicted a state outside the task");
      o.next = *ni;
    }
  }
  return table;
}

/// Optimistic value iteration for the delivery of `target_box`.
inline PlanResult plan(const DoormaxLearner& learner, const GridMap& map, std::size_t target_box,
                       const PlannerConfig& cfg, std::span<const double> warm_start = {}) {
  cfg.validate();
  const std::size_t free = map.free_cells().size();
  if (2 * free > cfg.max_states)
    throw PlanningResourceError("task state space of " + std::to_string(2 * free) +
                                " states exceeds the cap of " + std::to_string(cfg.max_states));
  PlanResult out;
  out.index = TaskStateIndex(enumerate_task_states(map, target_box));
  const TransitionTable table = predicted_transitions(learner, map, out.index, cfg);
  out.vi = value_iteration(table, cfg, warm_start);
  return out;
}

struct EpisodeStep {
  int t = 0;
  OOState state;
  Action action = Action::kNorth;
  double reward = 0.0;
  TransitionPrediction prediction;
  OOState next;
};

struct EpisodeRecord {
  std::size_t episode = 0;
  std::size_t target_box = 0;
  std::vector<EpisodeStep> steps;
  double total_reward = 0.0;
  bool complete = false;
  std::size_t unknown_predictions = 0;

  std::size_t step_count() const { return steps.size(); }
};

/// Target box of a task, drawn from the seed.
inline std::size_t choose_target_box(const GridMap& map, std::uint64_t seed) {
  if (map.box_spawns.empty()) throw std::invalid_argument("map has no box to deliver");
  return static_cast<std::size_t>(seed % map.box_spawns.size());
}

/// Plan, act greedily, observe and learn until delivery or the horizon.
inline EpisodeRecord run_episode(const GridMap& map, DoormaxLearner& learner,
                                 const PlannerConfig& cfg, std::uint64_t rng_seed) {
  EpisodeRecord rec;
  rec.target_box = choose_target_box(map, rng_seed);
  OOState s = initial_state(map, rec.target_box);
  std::optional<PlanResult> current;
  for (int t = 0; t < cfg.horizon; ++t) {
    if (!current) current = plan(learner, map, rec.target_box, cfg);
    const Action a = current->action_for(s);
    TransitionPrediction p = learner.predict(s, a, map);
    StepResult r = step(s, a, map, cfg.rewards);
    if (const auto* u = std::get_if<UnknownTransition>(&p)) {
      ++rec.unknown_predictions;
      learner.counters().record(a, *u, r.next == s);
    }
    const ExperienceOutcome learned = learner.observe(s, a, r.next, map);
    if (learned.changed) {
      std::vector<double> warm = current->vi.values;
      current = plan(learner, map, rec.target_box, cfg, warm);
    }
    rec.total_reward += r.reward;
    rec.steps.push_back({t, s, a, r.reward, std::move(p), r.next});
    s = std::move(r.next);
    if (r.delivered) {
      rec.complete = true;
      break;
    }
  }
  return rec;
}

/// Greedy execution of a frozen model: one plan, no learning.
inline EpisodeRecord rollout(const GridMap& map, const DoormaxLearner& learner,
                             const PlannerConfig& cfg, std::size_t target_box) {
  EpisodeRecord rec;
  rec.target_box = target_box;
  const PlanResult p = plan(learner, map, target_box, cfg);
  OOState s = initial_state(map, target_box);
  for (int t = 0; t < cfg.horizon; ++t) {
    const Action a = p.action_for(s);
    TransitionPrediction pred = learner.predict(s, a, map);
    if (is_unknown(pred)) ++rec.unknown_predictions;
    StepResult r = step(s, a, map, cfg.rewards);
    rec.total_reward += r.reward;
    rec.steps.push_back({t, s, a, r.reward, std::move(pred), r.next});
    s = std::move(r.next);
    if (r.delivered) {
      rec.complete = true;
      break;
    }
  }
  return rec;
}

struct TrainingResult {
  DoormaxLearner learner;
  std::vector<EpisodeRecord> episodes;
  std::size_t target_box = 0;
  std::optional<int> optimal_steps;
  /// 1-based index of the first complete episode without Unknown answers.
  std::optional<std::size_t> converged_episode;
};

/// Repeated episodes of one delivery task on a shared learner.
inline TrainingResult train(const GridMap& map, const PlannerConfig& cfg, std::size_t k,
                            std::uint64_t seed, std::size_t episodes) {
  TrainingResult out{DoormaxLearner(warehouse_schema(), k), {}, 0, std::nullopt, std::nullopt};
  out.target_box = choose_target_box(map, seed);
  out.optimal_steps = bfs_optimal_steps(map, initial_state(map, out.target_box));
  for (std::size_t e = 0; e < episodes; ++e) {
    EpisodeRecord rec = run_episode(map, out.learner, cfg, seed);
    rec.episode = e + 1;
    if (!out.converged_episode && rec.complete && rec.unknown_predictions == 0)
      out.converged_episode = e + 1;
    out.episodes.push_back(std::move(rec));
  }
  return out;
}

}  // namespace oomdp
