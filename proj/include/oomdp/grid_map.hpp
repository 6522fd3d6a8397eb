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

#pragma once

#include <compare>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace oomdp {

class MapError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Integer grid cell. x grows east, y grows north, (0,0) is the
/// south-west corner.
struct Cell {
  int x = 0;
  int y = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

/// Static occupancy grid plus the task landmarks. Cells outside the
/// rectangle behave as walls.
class GridMap {
 public:
  GridMap() = default;

  GridMap(int width, int height) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw MapError("map dimensions must be positive");
    walls_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), false);
  }

  int width() const { return width_; }
  int height() const { return height_; }

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }

  /// Out-of-bounds cells count as walls.
  bool is_wall(Cell c) const { return !in_bounds(c) || walls_[index(c)]; }

  bool is_free(Cell c) const { return !is_wall(c); }

  void set_wall(Cell c, bool wall = true) {
    if (!in_bounds(c)) throw MapError("wall cell out of bounds");
    walls_[index(c)] = wall;
  }

  std::vector<Cell> wall_cells() const {
    std::vector<Cell> out;
    for (int y = 0; y < height_; ++y)
      for (int x = 0; x < width_; ++x)
        if (walls_[index({x, y})]) out.push_back({x, y});
    return out;
  }

  std::vector<Cell> free_cells() const {
    std::vector<Cell> out;
    for (int y = 0; y < height_; ++y)
      for (int x = 0; x < width_; ++x)
        if (!walls_[index({x, y})]) out.push_back({x, y});
    return out;
  }

  Cell agent_start;
  Cell destination;
  std::vector<Cell> box_spawns;

  /// Throws MapError when landmarks sit on walls or outside the grid.
  void validate() const {
    auto check = [&](Cell c, const char* what) {
      if (!in_bounds(c)) throw MapError(std::string(what) + " out of bounds");
      if (is_wall(c)) throw MapError(std::string(what) + " placed on a wall cell");
    };
    check(agent_start, "agent start");
    check(destination, "destination");
    for (const Cell& b : box_spawns) check(b, "box spawn");
  }

  friend bool operator==(const GridMap&, const GridMap&) = default;

 private:
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(c.x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<bool> walls_;
};

}  // namespace oomdp
