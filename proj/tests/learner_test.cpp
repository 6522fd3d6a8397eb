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

#include "oomdp/learner.hpp"

#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>

#include <gtest/gtest.h>

#include "oomdp/io.hpp"
#include "oomdp/planner.hpp"
#include "oomdp/warehouse.hpp"

namespace oomdp {
namespace {

const char* kOpen5 =
    "....D\n"
    ".....\n"
    ".....\n"
    ".....\n"
    "A...B\n";

Condition C(const char* text) { return Condition::from_string(text); }

OOState at(const GridMap& map, int x, int y) {
  OOState s = initial_state(map, 0);
  s.agent = {x, y};
  return s;
}

TEST(PredictTransition, EmptyStoreIsUnknown) {
  const GridMap map = parse_map(kOpen5);
  DoormaxLearner learner;
  for (const OOState& s : enumerate_task_states(map, 0))
    for (Action a : kAllActions) EXPECT_TRUE(is_unknown(learner.predict(s, a, map)));
}

TEST(AddExperience, FailureRecordedAndPredicted) {
  const GridMap map = parse_map("B#..D\n.#...\n.....\n..#.#\nA.#.B\n");
  DoormaxLearner learner;
  OOState s = initial_state(map, 0);
  s.agent = {2, 4};
  s.target().pos = s.agent;
  s.target().in_bot = true;
  ASSERT_EQ(learner.condition(s, map).to_string(), "1001001");
  const StepResult r = step(s, Action::kNorth, map);
  ASSERT_EQ(r.next, s);
  const ExperienceOutcome out = learner.observe(s, Action::kNorth, r.next, map);
  EXPECT_TRUE(out.failure_recorded);
  EXPECT_TRUE(out.changed);
  EXPECT_EQ(learner.failures().of(Action::kNorth), (std::set<Condition>{C("1001001")}));
  EXPECT_TRUE(is_failure(learner.predict(s, Action::kNorth, map)));
  EXPECT_FALSE(learner.observe(s, Action::kNorth, r.next, map).changed);
  EXPECT_EQ(learner.failures().total(), 1u);
}

TEST(AddExperience, CombinesMatchingEffects) {
  const GridMap map = parse_map(kOpen5);
  DoormaxLearner learner;
  const OOState inner = at(map, 1, 2);
  const OOState edge = at(map, 1, 0);
  ASSERT_EQ(learner.condition(inner, map).to_string(), "0000000");
  ASSERT_EQ(learner.condition(edge, map).to_string(), "0100000");
  learner.observe(inner, Action::kEast, step(inner, Action::kEast, map).next, map);
  learner.observe(edge, Action::kEast, step(edge, Action::kEast, map).next, map);
  const auto& inc = learner.store().entry({Action::kEast, Attribute::kAgentX, EffectType::kIncrement});
  ASSERT_EQ(inc.predictions.size(), 1u);
  // Slot by slot: 0/0 -> 0, 0/1 -> *, remaining 0/0 -> 0.
  EXPECT_EQ(inc.predictions[0].model.to_string(), "0*00000");
  EXPECT_EQ(inc.predictions[0].effect, increment(Attribute::kAgentX, 1));
  EXPECT_FALSE(inc.blacklisted);
}

TEST(AddExperience, MoreThanKEffectsBlacklists) {
  const GridMap map = parse_map(kOpen5);
  PredictionStore store(2);
  FailureConditions failures;
  const PredictionKey key{Action::kEast, Attribute::kAgentX, EffectType::kAssignment};
  const char* conds[] = {"0000000", "0100000", "1000000"};
  for (int i = 0; i < 3; ++i) {
    const OOState s = at(map, i, 2);
    const OOState t = at(map, i + 1, 2);
    const ExperienceOutcome out = add_experience(s, C(conds[i]), Action::kEast, t, store, failures);
    if (i < 2) {
      EXPECT_EQ(store.entry(key).predictions.size(), static_cast<std::size_t>(i + 1));
      EXPECT_FALSE(store.entry(key).blacklisted);
    } else {
      EXPECT_TRUE(store.entry(key).blacklisted);
      EXPECT_TRUE(store.entry(key).predictions.empty());
      EXPECT_NE(std::find(out.blacklisted.begin(), out.blacklisted.end(), key),
                out.blacklisted.end());
    }
  }
  // Blacklisted keys never come back.
  add_experience(at(map, 0, 3), C("0000001"), Action::kEast, at(map, 1, 3), store, failures);
  EXPECT_TRUE(store.entry(key).predictions.empty());
}

TEST(AddExperience, CollisionWithExistingModelBlacklists) {
  const GridMap map = parse_map(kOpen5);
  PredictionStore store(2);
  FailureConditions failures;
  const PredictionKey key{Action::kEast, Attribute::kAgentX, EffectType::kAssignment};
  add_experience(at(map, 0, 2), C("0000000"), Action::kEast, at(map, 1, 2), store, failures);
  // Same condition, different assignment target.
  add_experience(at(map, 1, 2), C("0000000"), Action::kEast, at(map, 2, 2), store, failures);
  EXPECT_TRUE(store.entry(key).blacklisted);
}

TEST(AddExperience, SchemaMismatchThrows) {
  const GridMap map = parse_map(kOpen5);
  PredictionStore store(2);
  FailureConditions failures;
  add_experience(at(map, 0, 2), C("0000000"), Action::kEast, at(map, 1, 2), store, failures);
  EXPECT_THROW(
      add_experience(at(map, 1, 2), C("00000"), Action::kEast, at(map, 2, 2), store, failures),
      ConditionError);
}

TEST(PredictTransition, ConflictingEffectsAreUnknown) {
  const GridMap map = parse_map(kOpen5);
  PredictionStore store(2);
  FailureConditions failures;
  const OOState s = at(map, 1, 2);
  const Condition c = C("0000000");
  store.entry({Action::kEast, Attribute::kAgentX, EffectType::kAssignment})
      .predictions.push_back({c, assignment(Attribute::kAgentX, 4)});
  store.entry({Action::kEast, Attribute::kAgentX, EffectType::kIncrement})
      .predictions.push_back({c, increment(Attribute::kAgentX, 1)});
  store.entry({Action::kEast, Attribute::kAgentY, EffectType::kIncrement})
      .predictions.push_back({c, increment(Attribute::kAgentY, 0)});
  store.entry({Action::kEast, Attribute::kBoxInBot, EffectType::kAssignment})
      .predictions.push_back({c, assignment(Attribute::kBoxInBot, 0)});
  EXPECT_TRUE(is_unknown(predict_transition(s, c, Action::kEast, store, failures)));
  store.entry({Action::kEast, Attribute::kAgentX, EffectType::kAssignment}).predictions.clear();
  const auto p = predict_transition(s, c, Action::kEast, store, failures);
  ASSERT_TRUE(is_known(p));
  EXPECT_EQ(std::get<KnownTransition>(p).next.agent, (Cell{2, 2}));
}

TEST(KwikBound, FormulaValue) {
  EXPECT_EQ(kwik_bound(7, 2), 17u);
  EXPECT_EQ(DoormaxLearner(warehouse_schema(), 2).bound(), 17u);
  EXPECT_EQ(kwik_bound(7, 3), 25u);
}

TEST(UnknownCount, FreshLearnerAllZero) {
  DoormaxLearner learner;
  const auto counts = unknown_count(learner.store(), learner.counters());
  EXPECT_EQ(counts.size(), all_prediction_keys().size());
  for (const auto& [key, c] : counts) EXPECT_EQ(c, 0u) << to_string(key);
}

TEST(PredictionKeys, ThirtyKeys) {
  // 6 actions x (2 types for x, 2 for y, 1 for in_bot).
  EXPECT_EQ(all_prediction_keys().size(), 30u);
}

TEST(Trained, EastFromOneOneIsKnownAndCorrect) {
  const GridMap map = parse_map(kOpen5);
  PlannerConfig cfg;
  const TrainingResult tr = train(map, cfg, 2, 0, 10);
  const OOState s = at(map, 1, 1);
  const auto p = tr.learner.predict(s, Action::kEast, map);
  ASSERT_TRUE(is_known(p));
  EXPECT_EQ(std::get<KnownTransition>(p).next, step(s, Action::kEast, map).next);
  EXPECT_EQ(std::get<KnownTransition>(p).next.agent, (Cell{2, 1}));
}

void check_store_invariants(const DoormaxLearner& learner) {
  for (const auto& [key, entry] : learner.store().entries()) {
    EXPECT_LE(entry.predictions.size(), learner.store().k());
    if (entry.blacklisted) {
      EXPECT_TRUE(entry.predictions.empty());
    }
    for (std::size_t i = 0; i < entry.predictions.size(); ++i)
      for (std::size_t j = i + 1; j < entry.predictions.size(); ++j)
        EXPECT_NE(entry.predictions[i].effect, entry.predictions[j].effect);
  }
  for (Action a : kAllActions)
    for (const Condition& c : learner.failures().of(a)) EXPECT_TRUE(c.is_ground());
}

// Random exploration on several maps: every certified answer matches the
// simulator, Known answers never switch to a different Known state, and
// the store invariants hold after every update.
class Exploration : public ::testing::TestWithParam<const char*> {};

TEST_P(Exploration, SoundMonotoneAndCapped) {
  const GridMap map = load_map(std::string(OOMDP_MAP_DIR) + "/" + GetParam());
  for (std::size_t target = 0; target < map.box_spawns.size(); ++target) {
    DoormaxLearner learner(warehouse_schema(), 2);
    const auto states = enumerate_task_states(map, target);
    std::map<std::pair<std::size_t, Action>, OOState> known;
    std::mt19937_64 rng(target + 1);
    std::uniform_int_distribution<std::size_t> pick(0, kAllActions.size() - 1);
    OOState s = initial_state(map, target);
    std::size_t mispredictions = 0, flips = 0;
    for (int t = 0; t < 1500; ++t) {
      const Action a = kAllActions[pick(rng)];
      const auto pred = learner.predict(s, a, map);
      const StepResult r = step(s, a, map);
      if (const auto* k = std::get_if<KnownTransition>(&pred); k && k->next != r.next) ++mispredictions;
      if (is_failure(pred) && r.next != s) ++mispredictions;
      learner.observe(s, a, r.next, map);
      s = r.delivered ? initial_state(map, target) : r.next;
      if (t % 25 != 0) continue;
      check_store_invariants(learner);
      for (std::size_t i = 0; i < states.size(); ++i) {
        for (Action b : kAllActions) {
          const auto p = learner.predict(states[i], b, map);
          const auto* k = std::get_if<KnownTransition>(&p);
          if (!k) continue;
          auto [it, fresh] = known.try_emplace({i, b}, k->next);
          if (!fresh && it->second != k->next) ++flips;
        }
      }
    }
    EXPECT_EQ(mispredictions, 0u) << GetParam() << " target " << target;
    EXPECT_EQ(flips, 0u) << GetParam() << " target " << target;
    for (Attribute att : kLearnableAttributes) {
      bool any_alive = false;
      for (EffectType type : effect_types_for(att))
        for (Action a : kAllActions)
          if (!learner.store().entry({a, att, type}).blacklisted) any_alive = true;
      EXPECT_TRUE(any_alive) << attribute_name(att);
    }
    for (Action a : kAllActions) {
      bool some_type_alive = false;
      for (Attribute att : kLearnableAttributes) {
        some_type_alive = false;
        for (EffectType type : effect_types_for(att))
          if (!learner.store().entry({a, att, type}).blacklisted) some_type_alive = true;
        EXPECT_TRUE(some_type_alive) << action_name(a) << " " << attribute_name(att);
      }
    }
  }
}

INSTANTIATE_TEST_SUITE_P(BundledMaps, Exploration,
                         ::testing::Values("taxi5.map", "warehouse8.map", "tworooms.map"));

TEST(FailureConditions, RejectsWildcards) {
  FailureConditions f;
  EXPECT_THROW(f.record(Action::kNorth, C("1*01001")), ConditionError);
  EXPECT_TRUE(f.record(Action::kNorth, C("1001001")));
  EXPECT_FALSE(f.record(Action::kNorth, C("1001001")));
  EXPECT_EQ(f.of(Action::kNorth).size(), 1u);
}

}  // namespace
}  // namespace oomdp
