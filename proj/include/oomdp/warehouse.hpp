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

// Deterministic warehouse delivery simulator, simulated planar LIDAR and a
// breadth-first shortest-path oracle.

#pragma once

#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "oomdp/grid_map.hpp"
#include "oomdp/state.hpp"

namespace oomdp {

struct RewardConfig {
  double step = -1.0;
  double delivery = 20.0;
  double illegal = -10.0;
};

struct StepResult {
  OOState next;
  double reward = 0.0;
  /// The target box was delivered; the episode ends.
  bool delivered = false;
};

/// One simulator tick. Walls and the map boundary block movement; boxes
/// do not. Illegal PICKUP/DROPOFF are penalized no-ops.
inline StepResult step(const OOState& s, Action a, const GridMap& map,
                       const RewardConfig& rewards = {}) {
  StepResult r{s, rewards.step, false};
  if (is_move(a)) {
    const Cell d = action_delta(a);
    const Cell target{s.agent.x + d.x, s.agent.y + d.y};
    if (map.is_free(target)) {
      r.next.agent = target;
      for (BoxObject& b : r.next.boxes)
        if (b.in_bot) b.pos = target;
    }
    return r;
  }
  if (a == Action::kPickup) {
    const bool legal = s.has_target() && !s.carrying() && s.target().pos == s.agent;
    if (legal)
      r.next.target().in_bot = true;
    else
      r.reward = rewards.illegal;
    return r;
  }
  // DROPOFF
  if (s.carrying() && s.agent == s.destination) {
    r.next.target().in_bot = false;
    r.reward = rewards.delivery;
    r.delivered = true;
  } else {
    r.reward = rewards.illegal;
  }
  return r;
}

/// Domain reward for an already-known transition; used by the planner
/// on predicted outcomes.
inline double transition_reward(const OOState& s, Action a, const OOState& next,
                                const RewardConfig& rewards = {}) {
  if (a == Action::kPickup || a == Action::kDropoff) {
    if (s == next) return rewards.illegal;
    return a == Action::kDropoff ? rewards.delivery : rewards.step;
  }
  return rewards.step;
}

inline bool is_delivery(const OOState& s, Action a, const OOState& next) {
  return a == Action::kDropoff && s.carrying() && next.has_target() && !next.target().in_bot;
}

// ---------------------------------------------------------------------------
// Ray casting

struct Beam {
  double bearing = 0.0;  // radians, counter-clockwise from east
  double range = 0.0;    // cell units
};

struct Scan {
  std::vector<Beam> beams;
  double max_range = 0.0;
};

/// Exact grid traversal from (ox, oy) along `bearing`. Returns the
/// distance to the first cell for which occupied(cell) holds, capped at
/// max_range. Coordinates are continuous cell units; cell (i, j) spans
/// [i, i+1) x [j, j+1).
template <typename Occupied>
double raycast(double ox, double oy, double bearing, double max_range, Occupied&& occupied) {
  Cell cell{static_cast<int>(std::floor(ox)), static_cast<int>(std::floor(oy))};
  if (occupied(cell)) return 0.0;
  const double dx = std::cos(bearing);
  const double dy = std::sin(bearing);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const int step_x = dx > 0 ? 1 : -1;
  const int step_y = dy > 0 ? 1 : -1;
  const double delta_x = dx != 0 ? std::abs(1.0 / dx) : kInf;
  const double delta_y = dy != 0 ? std::abs(1.0 / dy) : kInf;
  double t_x = dx > 0 ? (cell.x + 1 - ox) * delta_x : dx < 0 ? (ox - cell.x) * delta_x : kInf;
  double t_y = dy > 0 ? (cell.y + 1 - oy) * delta_y : dy < 0 ? (oy - cell.y) * delta_y : kInf;
  while (true) {
    double t;
    if (t_x < t_y) {
      t = t_x;
      cell.x += step_x;
      t_x += delta_x;
    } else {
      t = t_y;
      cell.y += step_y;
      t_y += delta_y;
    }
    if (t >= max_range) return max_range;
    if (occupied(cell)) return t;
  }
}

/// Range from a continuous pose against walls only.
inline double raycast_walls(const GridMap& map, double x, double y, double bearing,
                            double max_range) {
  return raycast(x, y, bearing, max_range, [&](Cell c) { return map.is_wall(c); });
}

struct ScanOptions {
  /// Boxes lying in other cells deflect beams. The box under (or carried
  /// by) the agent never does.
  bool boxes_occlude = true;
};

/// `beams` equally spaced rays from the agent cell centre, bearing 0 east.
inline Scan simulate_scan(const OOState& s, const GridMap& map, int beams, double max_range,
                          ScanOptions options = {}) {
  if (beams < 4) throw std::invalid_argument("simulate_scan needs at least 4 beams");
  if (!(max_range > 0)) throw std::invalid_argument("max_range must be positive");
  const double ox = s.agent.x + 0.5;
  const double oy = s.agent.y + 0.5;
  auto occupied = [&](Cell c) {
    if (map.is_wall(c)) return true;
    if (!options.boxes_occlude || c == s.agent) return false;
    for (const BoxObject& b : s.boxes)
      if (b.pos == c) return true;
    return false;
  };
  Scan scan;
  scan.max_range = max_range;
  scan.beams.reserve(static_cast<std::size_t>(beams));
  for (int i = 0; i < beams; ++i) {
    const double bearing = 2.0 * std::numbers::pi * i / beams;
    scan.beams.push_back({bearing, raycast(ox, oy, bearing, max_range, occupied)});
  }
  return scan;
}

struct TouchRelations {
  bool north = false;
  bool south = false;
  bool east = false;
  bool west = false;

  friend bool operator==(const TouchRelations&, const TouchRelations&) = default;
};

/// Index of the beam nearest to `bearing`; throws when none lies within
/// pi/4 of it.
inline std::size_t nearest_beam(const Scan& scan, double bearing) {
  std::size_t best = scan.beams.size();
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scan.beams.size(); ++i) {
    double gap = std::fmod(std::abs(scan.beams[i].bearing - bearing), 2.0 * std::numbers::pi);
    gap = std::min(gap, 2.0 * std::numbers::pi - gap);
    if (gap < best_gap) {
      best_gap = gap;
      best = i;
    }
  }
  if (best == scan.beams.size() || best_gap > std::numbers::pi / 4 + 1e-12)
    throw std::invalid_argument("scan has no beam covering a cardinal direction");
  return best;
}

/// touch_d holds when the cardinal range is below one cell.
inline TouchRelations scan_to_relations(const Scan& scan) {
  const std::size_t e = nearest_beam(scan, 0.0);
  const std::size_t n = nearest_beam(scan, std::numbers::pi / 2);
  const std::size_t w = nearest_beam(scan, std::numbers::pi);
  const std::size_t s = nearest_beam(scan, 3 * std::numbers::pi / 2);
  if (e == n || e == w || e == s || n == w || n == s || w == s)
    throw std::invalid_argument("scan has no beam covering a cardinal direction");
  return {scan.beams[n].range < 1.0, scan.beams[s].range < 1.0, scan.beams[e].range < 1.0,
          scan.beams[w].range < 1.0};
}

// ---------------------------------------------------------------------------
// Task state space and shortest-path oracle

/// Every state of a single-box delivery task: the agent on each free cell,
/// with the target box either at its spawn or carried. Non-target boxes
/// stay at their spawns.
inline std::vector<OOState> enumerate_task_states(const GridMap& map, std::size_t target_box) {
  const OOState start = initial_state(map, target_box);
  std::vector<OOState> out;
  for (bool carried : {false, true}) {
    if (carried && !start.has_target()) break;
    for (const Cell& c : map.free_cells()) {
      OOState s = start;
      s.agent = c;
      if (carried) {
        s.target().in_bot = true;
        s.target().pos = c;
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

/// Minimum number of actions that deliver the target box from s, by
/// breadth-first search over (agent cell, target box cell, carried).
/// nullopt when delivery is impossible.
inline std::optional<int> bfs_optimal_steps(const GridMap& map, const OOState& s) {
  if (!s.has_target()) return std::nullopt;
  using Key = std::tuple<int, int, int, int, bool>;
  auto key_of = [](const OOState& st) {
    return Key{st.agent.x, st.agent.y, st.target().pos.x, st.target().pos.y, st.target().in_bot};
  };
  std::map<Key, int> dist;
  std::deque<OOState> frontier{s};
  dist[key_of(s)] = 0;
  while (!frontier.empty()) {
    OOState cur = std::move(frontier.front());
    frontier.pop_front();
    const int d = dist[key_of(cur)];
    for (Action a : kAllActions) {
      StepResult r = step(cur, a, map);
      if (r.delivered) return d + 1;
      const Key k = key_of(r.next);
      if (dist.emplace(k, d + 1).second) frontier.push_back(std::move(r.next));
    }
  }
  return std::nullopt;
}

}  // namespace oomdp
