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

// Object-oriented state, effects and relational term evaluation for the
// warehouse delivery domain.

#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "oomdp/condition.hpp"
#include "oomdp/grid_map.hpp"

namespace oomdp {

class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Two effects disagree on the value of one attribute.
class IncompatibleEffectsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Action { kNorth, kSouth, kEast, kWest, kPickup, kDropoff };

inline constexpr std::array<Action, 6> kAllActions = {Action::kNorth, Action::kSouth,
                                                      Action::kEast,  Action::kWest,
                                                      Action::kPickup, Action::kDropoff};
inline constexpr std::array<Action, 4> kMoveActions = {Action::kNorth, Action::kSouth,
                                                       Action::kEast, Action::kWest};

inline std::string_view action_name(Action a) {
  switch (a) {
    case Action::kNorth: return "North";
    case Action::kSouth: return "South";
    case Action::kEast: return "East";
    case Action::kWest: return "West";
    case Action::kPickup: return "PICKUP";
    case Action::kDropoff: return "DROPOFF";
  }
  return "?";
}

inline std::optional<Action> action_from_name(std::string_view name) {
  for (Action a : kAllActions)
    if (action_name(a) == name) return a;
  return std::nullopt;
}

inline bool is_move(Action a) { return static_cast<int>(a) < 4; }

/// Unit displacement of a move action; zero for PICKUP/DROPOFF.
inline Cell action_delta(Action a) {
  switch (a) {
    case Action::kNorth: return {0, 1};
    case Action::kSouth: return {0, -1};
    case Action::kEast: return {1, 0};
    case Action::kWest: return {-1, 0};
    default: return {0, 0};
  }
}

enum class AttributeKind { kIntegerCoordinate, kBoolean };

struct AttributeDescriptor {
  std::string_view name;
  AttributeKind kind;
};

struct ObjectClass {
  std::string_view name;
  std::vector<AttributeDescriptor> attributes;
};

/// Agent, Box (passenger), Wall and Destination.
inline const std::vector<ObjectClass>& object_classes() {
  static const std::vector<ObjectClass> classes = {
      {"agent", {{"x", AttributeKind::kIntegerCoordinate}, {"y", AttributeKind::kIntegerCoordinate}}},
      {"box",
       {{"x", AttributeKind::kIntegerCoordinate},
        {"y", AttributeKind::kIntegerCoordinate},
        {"in_bot", AttributeKind::kBoolean}}},
      {"wall", {{"x", AttributeKind::kIntegerCoordinate}, {"y", AttributeKind::kIntegerCoordinate}}},
      {"destination",
       {{"x", AttributeKind::kIntegerCoordinate}, {"y", AttributeKind::kIntegerCoordinate}}},
  };
  return classes;
}

/// Attributes the transition learner models. Box coordinates are derived
/// from the agent while carried and never learned.
enum class Attribute { kAgentX, kAgentY, kBoxInBot };

inline constexpr std::array<Attribute, 3> kLearnableAttributes = {
    Attribute::kAgentX, Attribute::kAgentY, Attribute::kBoxInBot};

inline std::string_view attribute_name(Attribute a) {
  switch (a) {
    case Attribute::kAgentX: return "agent.x";
    case Attribute::kAgentY: return "agent.y";
    case Attribute::kBoxInBot: return "box.in_bot";
  }
  return "?";
}

inline std::optional<Attribute> attribute_from_name(std::string_view name) {
  for (Attribute a : kLearnableAttributes)
    if (attribute_name(a) == name) return a;
  return std::nullopt;
}

inline AttributeKind attribute_kind(Attribute a) {
  return a == Attribute::kBoxInBot ? AttributeKind::kBoolean : AttributeKind::kIntegerCoordinate;
}

struct BoxObject {
  std::string id;
  Cell pos;
  bool in_bot = false;

  friend bool operator==(const BoxObject&, const BoxObject&) = default;
};

struct OOState {
  Cell agent;
  std::vector<BoxObject> boxes;
  Cell destination;
  std::size_t target_box = 0;

  bool has_target() const { return target_box < boxes.size(); }

  const BoxObject& target() const {
    if (!has_target()) throw DomainError("state has no target box");
    return boxes[target_box];
  }
  BoxObject& target() {
    if (!has_target()) throw DomainError("state has no target box");
    return boxes[target_box];
  }

  bool carrying() const { return has_target() && boxes[target_box].in_bot; }

  /// Throws DomainError when a carried box is detached from the agent or
  /// more than one box is carried.
  void validate() const {
    if (!boxes.empty() && !has_target()) throw DomainError("target box index out of range");
    int carried = 0;
    for (const BoxObject& b : boxes) {
      if (!b.in_bot) continue;
      ++carried;
      if (b.pos != agent) throw DomainError("carried box " + b.id + " is not at the agent cell");
    }
    if (carried > 1) throw DomainError("more than one box carried");
  }

  friend bool operator==(const OOState&, const OOState&) = default;
};

/// Fresh episode state: agent at its start, every box at its spawn.
inline OOState initial_state(const GridMap& map, std::size_t target_box = 0) {
  OOState s;
  s.agent = map.agent_start;
  s.destination = map.destination;
  for (std::size_t i = 0; i < map.box_spawns.size(); ++i)
    s.boxes.push_back({"box" + std::to_string(i), map.box_spawns[i], false});
  if (!s.boxes.empty() && target_box >= s.boxes.size())
    throw DomainError("target box index out of range");
  s.target_box = target_box;
  return s;
}

inline int read_attribute(const OOState& s, Attribute a) {
  switch (a) {
    case Attribute::kAgentX: return s.agent.x;
    case Attribute::kAgentY: return s.agent.y;
    case Attribute::kBoxInBot: return s.target().in_bot ? 1 : 0;
  }
  return 0;
}

enum class EffectType { kAssignment, kIncrement };

inline constexpr std::array<EffectType, 2> kEffectTypes = {EffectType::kAssignment,
                                                           EffectType::kIncrement};

inline std::string_view effect_type_name(EffectType t) {
  return t == EffectType::kAssignment ? "assignment" : "increment";
}

inline std::optional<EffectType> effect_type_from_name(std::string_view name) {
  if (name == "assignment") return EffectType::kAssignment;
  if (name == "increment") return EffectType::kIncrement;
  return std::nullopt;
}

/// Effect types that apply to an attribute: booleans only admit assignment.
inline std::vector<EffectType> effect_types_for(Attribute a) {
  if (attribute_kind(a) == AttributeKind::kBoolean) return {EffectType::kAssignment};
  return {EffectType::kAssignment, EffectType::kIncrement};
}

/// A typed attribute transformation. Boolean operands are 0/1.
struct Effect {
  Attribute attribute = Attribute::kAgentX;
  EffectType type = EffectType::kAssignment;
  int operand = 0;

  friend bool operator==(const Effect&, const Effect&) = default;
};

inline Effect assignment(Attribute a, int value) { return {a, EffectType::kAssignment, value}; }
inline Effect increment(Attribute a, int delta) { return {a, EffectType::kIncrement, delta}; }

inline void check_effect(const Effect& e) {
  if (e.type == EffectType::kIncrement && attribute_kind(e.attribute) == AttributeKind::kBoolean)
    throw DomainError("increment effect on boolean attribute " +
                      std::string(attribute_name(e.attribute)));
  if (attribute_kind(e.attribute) == AttributeKind::kBoolean && e.operand != 0 && e.operand != 1)
    throw DomainError("boolean assignment operand must be 0 or 1");
}

/// Value the attribute would take after applying e to s.
inline int effect_result(const Effect& e, const OOState& s) {
  check_effect(e);
  const int current = read_attribute(s, e.attribute);
  return e.type == EffectType::kAssignment ? e.operand : current + e.operand;
}

/// One effect of each applicable type mapping the attribute's value in s
/// onto its value in s_next. Identity transformations are included.
inline std::vector<Effect> eff_att(const OOState& s, const OOState& s_next, Attribute a) {
  if (a == Attribute::kBoxInBot && (!s.has_target() || !s_next.has_target()))
    throw DomainError("attribute box.in_bot absent from state");
  const int before = read_attribute(s, a);
  const int after = read_attribute(s_next, a);
  std::vector<Effect> out;
  for (EffectType t : effect_types_for(a))
    out.push_back(t == EffectType::kAssignment ? assignment(a, after) : increment(a, after - before));
  return out;
}

inline bool effects_compatible(const Effect& e1, const Effect& e2, const OOState& s) {
  if (e1.attribute != e2.attribute) return true;
  return effect_result(e1, s) == effect_result(e2, s);
}

/// Applies every effect to a copy of s. A carried box follows the agent.
inline OOState apply_effects(const OOState& s, const std::vector<Effect>& effects) {
  std::array<std::optional<int>, kLearnableAttributes.size()> resolved;
  for (const Effect& e : effects) {
    const int v = effect_result(e, s);
    auto& slot = resolved[static_cast<std::size_t>(e.attribute)];
    if (slot && *slot != v)
      throw IncompatibleEffectsError("effects disagree on " +
                                     std::string(attribute_name(e.attribute)));
    slot = v;
  }
  OOState out = s;
  if (resolved[0]) out.agent.x = *resolved[0];
  if (resolved[1]) out.agent.y = *resolved[1];
  if (resolved[2]) out.target().in_bot = *resolved[2] != 0;
  for (BoxObject& b : out.boxes)
    if (b.in_bot) b.pos = out.agent;
  return out;
}

/// touch_N/S/E/W(agent,wall), on(agent,box), on(agent,destination),
/// box.in_bot.
inline const TermSchema& warehouse_schema() {
  static const TermSchema schema({
      {"touch_N", {"agent", "wall"}},
      {"touch_S", {"agent", "wall"}},
      {"touch_E", {"agent", "wall"}},
      {"touch_W", {"agent", "wall"}},
      {"on", {"agent", "box"}},
      {"on", {"agent", "destination"}},
      {"box.in_bot", {}},
  });
  return schema;
}

namespace detail {

inline bool evaluate_term(const TermDescriptor& term, const OOState& s, const GridMap& map) {
  static const std::vector<std::string> agent_wall = {"agent", "wall"};
  auto touch = [&](Action dir) {
    const Cell d = action_delta(dir);
    return map.is_wall({s.agent.x + d.x, s.agent.y + d.y});
  };
  if (term.args == agent_wall) {
    if (term.name == "touch_N") return touch(Action::kNorth);
    if (term.name == "touch_S") return touch(Action::kSouth);
    if (term.name == "touch_E") return touch(Action::kEast);
    if (term.name == "touch_W") return touch(Action::kWest);
  }
  if (term.name == "on" && term.args.size() == 2 && term.args[0] == "agent") {
    // A carried box is not "under" the agent.
    if (term.args[1] == "box")
      return s.has_target() && !s.target().in_bot && s.target().pos == s.agent;
    if (term.args[1] == "destination") return s.agent == s.destination;
  }
  if (term.name == "box.in_bot" && term.args.empty()) return s.carrying();
  throw DomainError("cannot evaluate term " + term.to_string());
}

}  // namespace detail

/// Ground condition listing which schema terms hold in s.
inline Condition cond_of_state(const OOState& s, const GridMap& map, const TermSchema& schema) {
  Condition c(schema.size());
  for (std::size_t i = 0; i < schema.size(); ++i)
    c.set(i, detail::evaluate_term(schema[i], s, map) ? Trit::kTrue : Trit::kFalse);
  return c;
}

}  // namespace oomdp
