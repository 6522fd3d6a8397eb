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

#include "oomdp/io.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "oomdp/planner.hpp"

namespace oomdp {
namespace {

const char* kMaps[] = {"taxi5.map", "warehouse8.map", "warehouse10.map", "maze.map", "tworooms.map"};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string map_path(const std::string& name) { return std::string(OOMDP_MAP_DIR) + "/" + name; }

// Random rectangle of '#', '.' and 'B' with one A and one D on distinct cells.
std::string random_map_text(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim(1, 12);
  const int w = dim(rng), h = dim(rng);
  if (w * h < 2) return "AD\n";
  std::string glyphs = "##....B";
  std::uniform_int_distribution<std::size_t> g(0, glyphs.size() - 1);
  std::vector<std::string> rows(static_cast<std::size_t>(h), std::string(static_cast<std::size_t>(w), '.'));
  for (auto& row : rows)
    for (char& c : row) c = glyphs[g(rng)];
  std::uniform_int_distribution<int> cell(0, w * h - 1);
  const int a = cell(rng);
  int d = cell(rng);
  while (d == a) d = cell(rng);
  rows[static_cast<std::size_t>(a / w)][static_cast<std::size_t>(a % w)] = 'A';
  rows[static_cast<std::size_t>(d / w)][static_cast<std::size_t>(d % w)] = 'D';
  std::string out;
  for (const auto& r : rows) out += r + "\n";
  return out;
}

TEST(ParseMap, Examples) {
  const GridMap two = parse_map("AD");
  EXPECT_EQ(two.width(), 2);
  EXPECT_EQ(two.height(), 1);
  EXPECT_EQ(two.agent_start, (Cell{0, 0}));
  EXPECT_EQ(two.destination, (Cell{1, 0}));
  EXPECT_THROW(parse_map("A..\n...\n"), ParseError);
  EXPECT_THROW(parse_map(""), ParseError);
}

TEST(ParseMap, FirstRowIsNorth) {
  const GridMap m = parse_map("D.\n.A\n#B\n");
  EXPECT_EQ(m.destination, (Cell{0, 2}));
  EXPECT_EQ(m.agent_start, (Cell{1, 1}));
  EXPECT_TRUE(m.is_wall({0, 0}));
  EXPECT_EQ(m.box_spawns, (std::vector<Cell>{{1, 0}}));
}

TEST(ParseMap, CommentsAndTrailingBlankLinesIgnored) {
  EXPECT_EQ(render_map(parse_map("% note\n% more\nA.D\n\n\n")), "A.D\n");
  EXPECT_EQ(render_map(parse_map("A.D  \r\n")), "A.D\n");
}

TEST(ParseMap, ErrorsCarryLineAndColumn) {
  try {
    parse_map("% c\n#A#\n#x#\n#D#\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.column(), 2u);
  }
  try {
    parse_map("AD.\n..\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.column(), 3u);
  }
  try {
    parse_map("A.A\n.D.\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
    EXPECT_EQ(e.column(), 3u);
  }
}

class BundledMap : public ::testing::TestWithParam<const char*> {};

TEST_P(BundledMap, WallCountMatchesGlyphs) {
  const std::string text = slurp(map_path(GetParam()));
  std::size_t hashes = 0;
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);)
    if (line.empty() || line[0] != '%') hashes += static_cast<std::size_t>(std::count(line.begin(), line.end(), '#'));
  EXPECT_EQ(load_map(map_path(GetParam())).wall_cells().size(), hashes);
}

TEST_P(BundledMap, RenderRoundTrips) {
  const GridMap m = load_map(map_path(GetParam()));
  const std::string text = render_map(m);
  const GridMap again = parse_map(text);
  EXPECT_EQ(render_map(again), text);
  EXPECT_EQ(again.wall_cells(), m.wall_cells());
  EXPECT_EQ(again.box_spawns, m.box_spawns);
  EXPECT_EQ(again.agent_start, m.agent_start);
  EXPECT_EQ(again.destination, m.destination);
}

INSTANTIATE_TEST_SUITE_P(Data, BundledMap, ::testing::ValuesIn(kMaps));

TEST(RenderMap, RandomMapsIdempotent) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 100; ++i) {
    const std::string text = random_map_text(rng);
    EXPECT_EQ(render_map(parse_map(text)), text);
  }
}

TEST(ParseMap, FuzzOnlyRaisesDocumentedErrors) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> len(0, 64);
  std::uniform_int_distribution<int> byte(0, 255);
  const std::string alphabet = "#.ABD\n\n%  \r";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  for (int i = 0; i < 10000; ++i) {
    std::string text(static_cast<std::size_t>(len(rng)), '\0');
    for (char& c : text) c = (i % 2) ? alphabet[pick(rng)] : static_cast<char>(byte(rng));
    try {
      const GridMap m = parse_map(text);
      EXPECT_EQ(render_map(parse_map(render_map(m))), render_map(m));
    } catch (const ParseError&) {
    } catch (const MapError&) {
    }
  }
}

TEST(LoadMap, MissingFileIsRuntimeError) {
  EXPECT_THROW(load_map("/nonexistent/nowhere.map"), std::runtime_error);
}

TEST(FormatNumber, SixSignificantDigits) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(1.0 / 3), "0.333333");
  EXPECT_EQ(format_number(-20), "-20");
  EXPECT_EQ(format_number(1234567.0), "1.23457e+06");
  EXPECT_EQ(round6(2.0 / 3), 0.666667);
}

TEST(ModelJson, RoundTripsTrainedLearner) {
  const GridMap map = load_map(map_path("taxi5.map"));
  const TrainingResult tr = train(map, PlannerConfig{}, 2, 0, 5);
  const json j = model_to_json(tr.learner);
  const DoormaxLearner back = model_from_json(json::parse(j.dump()));
  EXPECT_EQ(model_to_json(back), j);
  EXPECT_EQ(back.store().k(), 2u);
  EXPECT_EQ(j.at("keys").size(), 30u);
}

TEST(ModelJson, RejectsMalformed) {
  const json good = model_to_json(DoormaxLearner());
  EXPECT_THROW(model_from_json(json::object()), ConfigError);
  json bad = good;
  bad["schema"][0] = "touch_Q(agent,wall)";
  EXPECT_THROW(model_from_json(bad), ConfigError);
  bad = good;
  bad["keys"][0]["action"] = "Fly";
  EXPECT_THROW(model_from_json(bad), ConfigError);
  bad = good;
  bad["failures"]["North"] = json::array({"10*"});
  EXPECT_THROW(model_from_json(bad), ConfigError);
}

TEST(EpisodeJsonl, OneLinePerStep) {
  const GridMap map = load_map(map_path("taxi5.map"));
  DoormaxLearner learner;
  PlannerConfig cfg;
  cfg.horizon = 7;
  const EpisodeRecord rec = run_episode(map, learner, cfg, 0);
  const std::string text = episode_to_jsonl(rec);
  std::istringstream in(text);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line); ++n) {
    const json j = json::parse(line);
    EXPECT_EQ(j.at("t").get<std::size_t>(), n);
    EXPECT_TRUE(j.contains("action"));
  }
  EXPECT_EQ(n, rec.step_count());
}

TEST(Config, ParseTextAndApply) {
  const auto values = parse_config_text("# run\nmap = a.map\n  seed=7 # lucky\n\nsigma-range = 1.0\n");
  EXPECT_EQ(values.size(), 3u);
  RunConfig cfg;
  apply_config(cfg, values);
  EXPECT_EQ(cfg.map, "a.map");
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.mcl.sensor.sigma_range, 1.0);
  EXPECT_THROW(parse_config_text("novalue\n"), ConfigError);
  EXPECT_THROW(parse_config_text("= 3\n"), ConfigError);
}

TEST(Config, LaterAssignmentWins) {
  RunConfig cfg;
  apply_config(cfg, parse_config_text("seed = 1\n"));
  cfg.set("seed", "9");
  EXPECT_EQ(cfg.seed, 9u);
}

TEST(Config, EveryKeyRoundTripsThroughText) {
  RunConfig cfg;
  for (const std::string& key : RunConfig::keys()) {
    RunConfig copy;
    EXPECT_NO_THROW(copy.set(key, cfg.get(key))) << key;
    EXPECT_EQ(copy.get(key), cfg.get(key)) << key;
  }
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, RejectsBadValues) {
  RunConfig cfg;
  EXPECT_THROW(cfg.set("nope", "1"), ConfigError);
  EXPECT_THROW(cfg.set("seed", "-1"), ConfigError);
  EXPECT_THROW(cfg.set("gamma", "abc"), ConfigError);
  EXPECT_THROW(cfg.set("gamma", "inf"), ConfigError);
  EXPECT_THROW(cfg.get("nope"), ConfigError);
  cfg.set("gamma", "1.5");
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.set("beams", "3");
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.set("z-hit", "0.5");
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(BundledTrajectories, StayInFreeSpace) {
  for (const auto& [map_name, traj] :
       std::vector<std::pair<std::string, std::string>>{{"maze.map", "maze20.traj"},
                                                        {"tworooms.map", "tworooms.traj"}}) {
    const GridMap map = load_map(map_path(map_name));
    const Trajectory t = parse_trajectory(slurp(std::string(OOMDP_DATA_DIR) + "/trajectories/" + traj));
    Pose p = t.start;
    EXPECT_TRUE(pose_in_free_space(map, p));
    for (const OdometryDelta& d : t.moves) {
      const double c = std::cos(p.theta), s = std::sin(p.theta);
      p = {p.x + d.dx * c - d.dy * s, p.y + d.dx * s + d.dy * c, normalize_angle(p.theta + d.dtheta)};
      EXPECT_TRUE(pose_in_free_space(map, p)) << traj;
    }
  }
}

}  // namespace
}  // namespace oomdp
