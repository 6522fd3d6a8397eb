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

// Ternary condition vectors over a fixed term vocabulary.
//
// A condition has one slot per term. Each slot holds 0 (term false),
// 1 (term true) or * (unconstrained). Negated terms are not stored
// separately: slot value 0 carries the negation.

#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

namespace oomdp {

class ConditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Trit : std::uint8_t { kFalse = 0, kTrue = 1, kAny = 2 };

/// A term is either a relation over object classes, e.g.
/// touch_N(agent,wall), or a predicate on an attribute, e.g. box.in_bot.
struct TermDescriptor {
  std::string name;
  std::vector<std::string> args;

  std::string to_string() const {
    if (args.empty()) return name;
    std::string out = name + "(";
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (i) out += ',';
      out += args[i];
    }
    return out + ")";
  }

  friend bool operator==(const TermDescriptor&, const TermDescriptor&) = default;
};

class TermSchema {
 public:
  static constexpr std::size_t kMaxTerms = 64;

  explicit TermSchema(std::vector<TermDescriptor> terms) : terms_(std::move(terms)) {
    if (terms_.empty()) throw ConditionError("term schema must contain at least one term");
    if (terms_.size() > kMaxTerms) throw ConditionError("term schema exceeds 64 terms");
    for (std::size_t i = 0; i < terms_.size(); ++i)
      for (std::size_t j = i + 1; j < terms_.size(); ++j)
        if (terms_[i] == terms_[j])
          throw ConditionError("duplicate term in schema: " + terms_[i].to_string());
  }

  std::size_t size() const { return terms_.size(); }
  const std::vector<TermDescriptor>& terms() const { return terms_; }
  const TermDescriptor& operator[](std::size_t i) const { return terms_.at(i); }

  friend bool operator==(const TermSchema&, const TermSchema&) = default;

 private:
  std::vector<TermDescriptor> terms_;
};

/// Fixed-length ternary vector, stored as a care mask plus value bits.
/// Bit i corresponds to slot i in schema order. Value bits are zero
/// wherever the care bit is clear, so structural equality is bitwise.
class Condition {
 public:
  Condition() = default;

  /// All-wildcard condition of length n.
  explicit Condition(std::size_t n) : size_(check_size(n)) {}

  static Condition from_string(std::string_view text) {
    if (text.empty()) throw ConditionError("empty condition string");
    Condition c(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
      switch (text[i]) {
        case '0': c.set(i, Trit::kFalse); break;
        case '1': c.set(i, Trit::kTrue); break;
        case '*': break;
        default:
          throw ConditionError("invalid condition glyph '" + std::string(1, text[i]) +
                               "' at position " + std::to_string(i));
      }
    }
    return c;
  }

  /// Builds from raw masks; value bits outside the care mask are dropped.
  static Condition from_bits(std::size_t n, std::uint64_t care, std::uint64_t value) {
    Condition c(n);
    c.care_ = care & c.full_mask();
    c.value_ = value & c.care_;
    return c;
  }

  static Condition from_bools(const std::vector<bool>& truth) {
    Condition c(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i)
      c.set(i, truth[i] ? Trit::kTrue : Trit::kFalse);
    return c;
  }

  std::size_t size() const { return size_; }

  Trit at(std::size_t i) const {
    check_index(i);
    const std::uint64_t bit = std::uint64_t{1} << i;
    if (!(care_ & bit)) return Trit::kAny;
    return (value_ & bit) ? Trit::kTrue : Trit::kFalse;
  }

  void set(std::size_t i, Trit t) {
    check_index(i);
    const std::uint64_t bit = std::uint64_t{1} << i;
    care_ &= ~bit;
    value_ &= ~bit;
    if (t != Trit::kAny) {
      care_ |= bit;
      if (t == Trit::kTrue) value_ |= bit;
    }
  }

  /// True when no slot is a wildcard, i.e. this is an observation.
  bool is_ground() const { return care_ == full_mask(); }

  std::size_t wildcard_count() const {
    return static_cast<std::size_t>(__builtin_popcountll(full_mask() & ~care_));
  }

  std::uint64_t care_bits() const { return care_; }
  std::uint64_t value_bits() const { return value_; }

  std::string to_string() const {
    std::string out(size_, '*');
    for (std::size_t i = 0; i < size_; ++i) {
      const Trit t = at(i);
      if (t != Trit::kAny) out[i] = t == Trit::kTrue ? '1' : '0';
    }
    return out;
  }

  friend bool operator==(const Condition&, const Condition&) = default;
  friend auto operator<=>(const Condition& a, const Condition& b) {
    return std::tie(a.size_, a.care_, a.value_) <=> std::tie(b.size_, b.care_, b.value_);
  }

 private:
  static std::size_t check_size(std::size_t n) {
    if (n > TermSchema::kMaxTerms) throw ConditionError("condition exceeds 64 slots");
    return n;
  }
  void check_index(std::size_t i) const {
    if (i >= size_) throw ConditionError("condition slot index out of range");
  }
  std::uint64_t full_mask() const {
    return size_ == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << size_) - 1);
  }

  std::size_t size_ = 0;
  std::uint64_t care_ = 0;
  std::uint64_t value_ = 0;
};

namespace detail {
inline void require_same_length(const Condition& a, const Condition& b) {
  if (a.size() != b.size())
    throw ConditionError("condition length mismatch: " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
}
}  // namespace detail

/// Per-slot generalization: equal constrained values survive, anything
/// else becomes a wildcard.
inline Condition combine(const Condition& a, const Condition& b) {
  detail::require_same_length(a, b);
  const std::uint64_t care = a.care_bits() & b.care_bits() & ~(a.value_bits() ^ b.value_bits());
  return Condition::from_bits(a.size(), care, a.value_bits());
}

/// obs satisfies model: every constrained slot of model agrees with obs.
/// A wildcard in obs never satisfies a constrained model slot.
inline bool matches(const Condition& obs, const Condition& model) {
  detail::require_same_length(obs, model);
  const std::uint64_t constrained = model.care_bits();
  if ((obs.care_bits() & constrained) != constrained) return false;
  return ((obs.value_bits() ^ model.value_bits()) & constrained) == 0;
}

/// Every observation satisfying `specific` also satisfies `general`.
inline bool is_more_general(const Condition& general, const Condition& specific) {
  detail::require_same_length(general, specific);
  const std::uint64_t g = general.care_bits();
  if ((specific.care_bits() & g) != g) return false;
  return ((general.value_bits() ^ specific.value_bits()) & g) == 0;
}

/// Some observation satisfies both conditions.
inline bool overlaps(const Condition& a, const Condition& b) {
  detail::require_same_length(a, b);
  return ((a.value_bits() ^ b.value_bits()) & a.care_bits() & b.care_bits()) == 0;
}

}  // namespace oomdp
