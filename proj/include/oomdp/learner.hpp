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

// Deterministic condition-effect transition learner.
//
// The model is a set of predictions (condition, effect) indexed by
// (action, attribute, effect type), plus per-action failure conditions
// under which the action leaves the state unchanged. Queries either
// return a certified next state or Unknown; Unknown answers are what the
// planner treats optimistically.

#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "oomdp/condition.hpp"
#include "oomdp/grid_map.hpp"
#include "oomdp/state.hpp"

namespace oomdp {

struct PredictionKey {
  Action action = Action::kNorth;
  Attribute attribute = Attribute::kAgentX;
  EffectType type = EffectType::kAssignment;

  friend bool operator==(const PredictionKey&, const PredictionKey&) = default;
  friend auto operator<=>(const PredictionKey&, const PredictionKey&) = default;
};

inline std::string to_string(const PredictionKey& key) {
  return std::string(action_name(key.action)) + "/" + std::string(attribute_name(key.attribute)) +
         "/" + std::string(effect_type_name(key.type));
}

/// Every (action, learnable attribute, applicable effect type) in
/// declaration order.
inline const std::vector<PredictionKey>& all_prediction_keys() {
  static const std::vector<PredictionKey> keys = [] {
    std::vector<PredictionKey> out;
    for (Action a : kAllActions)
      for (Attribute att : kLearnableAttributes)
        for (EffectType t : effect_types_for(att)) out.push_back({a, att, t});
    return out;
  }();
  return keys;
}

struct Prediction {
  Condition model;
  Effect effect;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

class PredictionStore {
 public:
  struct Entry {
    std::vector<Prediction> predictions;
    bool blacklisted = false;

    friend bool operator==(const Entry&, const Entry&) = default;
  };

  explicit PredictionStore(std::size_t k = 2) : k_(k) {
    if (k == 0) throw std::invalid_argument("prediction cap k must be positive");
    for (const PredictionKey& key : all_prediction_keys()) entries_[key];
  }

  std::size_t k() const { return k_; }

  const Entry& entry(const PredictionKey& key) const { return entries_.at(key); }
  Entry& entry(const PredictionKey& key) { return entries_.at(key); }

  const std::map<PredictionKey, Entry>& entries() const { return entries_; }

  void blacklist(const PredictionKey& key) {
    Entry& e = entries_.at(key);
    e.predictions.clear();
    e.blacklisted = true;
  }

  friend bool operator==(const PredictionStore&, const PredictionStore&) = default;

 private:
  std::size_t k_;
  std::map<PredictionKey, Entry> entries_;
};

/// Ground conditions under which an action was observed to change nothing.
class FailureConditions {
 public:
  const std::set<Condition>& of(Action a) const {
    static const std::set<Condition> empty;
    auto it = sets_.find(a);
    return it == sets_.end() ? empty : it->second;
  }

  bool fires(Action a, const Condition& cond) const {
    const auto& set = of(a);
    return std::any_of(set.begin(), set.end(),
                       [&](const Condition& c) { return matches(cond, c); });
  }

  /// Drops stored conditions made redundant by cond, then inserts it.
  /// Returns false when cond was already known.
  bool record(Action a, const Condition& cond) {
    if (!cond.is_ground()) throw ConditionError("failure conditions must be wildcard-free");
    auto& set = sets_[a];
    const bool known = set.contains(cond);
    std::erase_if(set, [&](const Condition& c) { return matches(cond, c); });
    set.insert(cond);
    return !known;
  }

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& [a, set] : sets_) n += set.size();
    return n;
  }

  friend bool operator==(const FailureConditions&, const FailureConditions&) = default;

 private:
  std::map<Action, std::set<Condition>> sets_;
};

struct KnownTransition {
  OOState next;
};
struct FailureTransition {};
/// The learner cannot certify the transition. `implicated` lists the
/// prediction keys that failed to cover it.
struct UnknownTransition {
  std::vector<PredictionKey> implicated;
};

using TransitionPrediction = std::variant<KnownTransition, FailureTransition, UnknownTransition>;

inline bool is_known(const TransitionPrediction& p) {
  return std::holds_alternative<KnownTransition>(p);
}
inline bool is_failure(const TransitionPrediction& p) {
  return std::holds_alternative<FailureTransition>(p);
}
inline bool is_unknown(const TransitionPrediction& p) {
  return std::holds_alternative<UnknownTransition>(p);
}

inline std::string_view prediction_kind_name(const TransitionPrediction& p) {
  if (is_known(p)) return "known";
  if (is_failure(p)) return "failure";
  return "unknown";
}

/// Predicted next state for (s, a), given cond = cond(s).
inline TransitionPrediction predict_transition(const OOState& s, const Condition& cond, Action a,
                                               const PredictionStore& store,
                                               const FailureConditions& failures) {
  if (failures.fires(a, cond)) return FailureTransition{};

  struct Candidate {
    PredictionKey key;
    Effect effect;
    int result;
  };
  std::vector<PredictionKey> implicated;
  std::vector<Effect> effects;
  for (Attribute att : kLearnableAttributes) {
    std::vector<Candidate> found;
    for (EffectType t : effect_types_for(att)) {
      const PredictionKey key{a, att, t};
      const auto& entry = store.entry(key);
      if (entry.blacklisted) continue;
      for (const Prediction& p : entry.predictions)
        if (matches(cond, p.model)) found.push_back({key, p.effect, effect_result(p.effect, s)});
    }
    if (found.empty()) {
      // Nothing certifies this attribute.
      for (EffectType t : effect_types_for(att)) {
        const PredictionKey key{a, att, t};
        if (!store.entry(key).blacklisted) implicated.push_back(key);
      }
      if (std::none_of(implicated.begin(), implicated.end(),
                       [&](const PredictionKey& k) { return k.attribute == att; }))
        for (EffectType t : effect_types_for(att)) implicated.push_back({a, att, t});
      continue;
    }
    bool conflict = false;
    for (std::size_t i = 0; i < found.size(); ++i)
      for (std::size_t j = i + 1; j < found.size(); ++j)
        if (found[i].result != found[j].result) {
          conflict = true;
          implicated.push_back(found[i].key);
          implicated.push_back(found[j].key);
        }
    if (conflict) continue;
    for (const Candidate& c : found)
      if (std::find(effects.begin(), effects.end(), c.effect) == effects.end())
        effects.push_back(c.effect);
  }
  if (!implicated.empty()) {
    std::sort(implicated.begin(), implicated.end());
    implicated.erase(std::unique(implicated.begin(), implicated.end()), implicated.end());
    return UnknownTransition{std::move(implicated)};
  }
  return KnownTransition{apply_effects(s, effects)};
}

struct ExperienceOutcome {
  bool failure_recorded = false;
  /// The store or the failure conditions differ from before the call.
  bool changed = false;
  std::vector<PredictionKey> blacklisted;
};

/// Folds the observed transition (s, a, s_next) into the model.
inline ExperienceOutcome add_experience(const OOState& s, const Condition& cond, Action a,
                                        const OOState& s_next, PredictionStore& store,
                                        FailureConditions& failures) {
  ExperienceOutcome outcome;
  if (s == s_next) {
    outcome.changed = failures.record(a, cond);
    outcome.failure_recorded = true;
    return outcome;
  }
  if (!cond.is_ground()) throw ConditionError("observed condition must be wildcard-free");

  auto drop = [&](const PredictionKey& key) {
    store.blacklist(key);
    outcome.blacklisted.push_back(key);
    outcome.changed = true;
  };

  for (Attribute att : kLearnableAttributes) {
    for (const Effect& e : eff_att(s, s_next, att)) {
      const PredictionKey key{a, att, e.type};
      auto& entry = store.entry(key);
      if (entry.blacklisted) continue;
      auto& preds = entry.predictions;
      if (!preds.empty() && preds.front().model.size() != cond.size())
        throw ConditionError("condition does not match the model's term schema");

      auto it = std::find_if(preds.begin(), preds.end(),
                             [&](const Prediction& p) { return p.effect == e; });
      if (it != preds.end()) {
        const Condition merged = combine(it->model, cond);
        if (merged == it->model) continue;
        it->model = merged;
        outcome.changed = true;
        const Condition& grown = it->model;
        const bool overlap = std::any_of(preds.begin(), preds.end(), [&](const Prediction& other) {
          return &other != &*it && overlaps(grown, other.model);
        });
        if (overlap) drop(key);
        continue;
      }
      const bool collides = std::any_of(preds.begin(), preds.end(), [&](const Prediction& p) {
        return matches(cond, p.model) || is_more_general(cond, p.model);
      });
      if (collides) {
        drop(key);
        continue;
      }
      preds.push_back({cond, e});
      outcome.changed = true;
      if (preds.size() > store.k()) drop(key);
    }
  }
  return outcome;
}

/// n·k + k + 1: per-key ceiling on Unknown answers for n terms and at
/// most k effects per key.
inline std::size_t kwik_bound(std::size_t n, std::size_t k) { return n * k + k + 1; }

/// Unknown answers given while acting online. Unknowns whose observed
/// outcome was a failure are charged to the action's failure memory,
/// everything else to the implicated prediction keys.
struct KwikCounters {
  std::map<PredictionKey, std::size_t> per_key;
  std::map<Action, std::size_t> failure_memory;
  /// Every Unknown charged to its implicated keys, failures included.
  std::map<PredictionKey, std::size_t> per_key_all;
  std::size_t total_unknown = 0;

  void record(Action a, const UnknownTransition& u, bool outcome_was_failure) {
    ++total_unknown;
    for (const PredictionKey& key : u.implicated) ++per_key_all[key];
    if (outcome_was_failure) {
      ++failure_memory[a];
      return;
    }
    for (const PredictionKey& key : u.implicated) ++per_key[key];
  }

  friend bool operator==(const KwikCounters&, const KwikCounters&) = default;
};

/// Count per key, listing every key of the store (zero when never charged).
inline std::map<PredictionKey, std::size_t> unknown_count(const PredictionStore& store,
                                                          const KwikCounters& counters) {
  std::map<PredictionKey, std::size_t> out;
  for (const auto& [key, entry] : store.entries()) {
    auto it = counters.per_key.find(key);
    out[key] = it == counters.per_key.end() ? 0 : it->second;
  }
  return out;
}

/// Learner state bound to a term schema.
class DoormaxLearner {
 public:
  explicit DoormaxLearner(TermSchema schema = warehouse_schema(), std::size_t k = 2)
      : schema_(std::move(schema)), store_(k) {}

  const TermSchema& schema() const { return schema_; }
  const PredictionStore& store() const { return store_; }
  PredictionStore& store() { return store_; }
  const FailureConditions& failures() const { return failures_; }
  FailureConditions& failures() { return failures_; }
  const KwikCounters& counters() const { return counters_; }
  KwikCounters& counters() { return counters_; }

  Condition condition(const OOState& s, const GridMap& map) const {
    return cond_of_state(s, map, schema_);
  }

  TransitionPrediction predict(const OOState& s, Action a, const GridMap& map) const {
    return predict_transition(s, condition(s, map), a, store_, failures_);
  }

  ExperienceOutcome observe(const OOState& s, Action a, const OOState& s_next,
                            const GridMap& map) {
    const Condition cond = condition(s, map);
    if (cond.size() != schema_.size())
      throw ConditionError("condition length differs from schema size");
    return add_experience(s, cond, a, s_next, store_, failures_);
  }

  std::size_t bound() const { return kwik_bound(schema_.size(), store_.k()); }

  friend bool operator==(const DoormaxLearner&, const DoormaxLearner&) = default;

 private:
  TermSchema schema_;
  PredictionStore store_;
  FailureConditions failures_;
  KwikCounters counters_;
};

}  // namespace oomdp
