#include "oracles.hpp"

#include "roomclear/floorplan.hpp"

#include <doctest.h>

#include <queue>

using namespace roomclear;

namespace {

constexpr char kTwoRooms[] = "[map]\n"
                             "#######\n"
                             "#A.+..#\n"
                             "#######\n";

constexpr char kChain[] = "[map]\n"
                          "#########\n"
                          "#A.+.+..#\n"
                          "#########\n";

std::set<std::set<std::pair<int, int>>> rooms_as_sets(std::vector<Room> const &rooms)
{
  std::set<std::set<std::pair<int, int>>> out;
  for (auto const &r : rooms) {
    std::set<std::pair<int, int>> cells;
    for (auto c : r.cells) { cells.insert({c.x, c.y}); }
    out.insert(cells);
  }
  return out;
}

ScenarioError parse_error(std::string_view text)
{
  try {
    parse_scenario(text);
  } catch (ScenarioError const &e) {
    return e;
  }
  FAIL("expected a ScenarioError");
  return ScenarioError(ScenarioErrc::bad_value, "unreachable");
}

} // namespace

TEST_CASE("two rooms joined by one door")
{
  auto const s = parse_scenario(kTwoRooms);
  CHECK(s.floorplan.room_count() == 2);
  AdjacencyMatrix expected(2, 2);
  expected << 0, 1, 1, 0;
  CHECK(s.floorplan.adjacency == expected);
  REQUIRE(s.floorplan.doors.size() == 1);
  CHECK(s.floorplan.doors[0].cell == Coord{3, 1});
  CHECK(s.floorplan.doors[0].connects == std::array<int, 2>{0, 1});
  CHECK(s.agent_spawns == std::vector<Coord>{{1, 1}});
}

TEST_CASE("three rooms in a chain")
{
  auto const s = parse_scenario(kChain);
  AdjacencyMatrix expected(3, 3);
  expected << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  CHECK(s.floorplan.adjacency == expected);
}

TEST_CASE("no doors gives a single room")
{
  Grid g(5, 4, CellKind::wall);
  for (int y = 1; y < 3; ++y) {
    for (int x = 1; x < 4; ++x) { g.set({x, y}, CellKind::floor); }
  }
  auto const p = derive_rooms(g);
  CHECK(p.rooms.size() == 1);
  CHECK(p.doors.empty());
  CHECK(p.rooms[0].cells.size() == 6);
}

TEST_CASE("seven-room fixture matches the hand-counted door graph")
{
  // Rooms by first cell, row-major:
  //   0 (1,1)  1 (5,1)  2 (9,1)  3 (13,1)
  //   4 (1,5)  5 (5,5)  6 (11,5)
  // Doors: 0-1, 1-2, 2-3, 0-4, 1-5, 4-5, 5-6.
  auto const s = oracle::fixture("seven_room.scn");
  auto const &plan = s->floorplan;
  REQUIRE(plan.room_count() == 7);
  CHECK(plan.rooms[0].bbox_min == Coord{1, 1});
  CHECK(plan.rooms[1].bbox_min == Coord{5, 1});
  CHECK(plan.rooms[2].bbox_min == Coord{9, 1});
  CHECK(plan.rooms[3].bbox_min == Coord{13, 1});
  CHECK(plan.rooms[4].bbox_min == Coord{1, 5});
  CHECK(plan.rooms[5].bbox_min == Coord{5, 5});
  CHECK(plan.rooms[6].bbox_min == Coord{11, 5});

  AdjacencyMatrix expected = AdjacencyMatrix::Zero(7, 7);
  for (auto [a, b] : std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {2, 3}, {0, 4}, {1, 5}, {4, 5}, {5, 6}}) {
    expected(a, b) = expected(b, a) = 1;
  }
  CHECK(plan.adjacency == expected);

  std::vector<Coord> const door_cells{{4, 2}, {8, 2}, {12, 2}, {2, 4}, {7, 4}, {4, 6}, {10, 6}};
  REQUIRE(plan.doors.size() == door_cells.size());
  for (std::size_t d = 0; d < door_cells.size(); ++d) { CHECK(plan.doors[d].cell == door_cells[d]); }
  CHECK(plan.rooms[5].doors == std::vector<int>{4, 5, 6});
}

TEST_CASE("random buildings partition like union-find")
{
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<int> n(1, 5);
    std::uniform_int_distribution<int> sz(1, 4);
    auto const grid = oracle::random_building(rng, n(rng), n(rng), sz(rng), sz(rng));
    auto const partition = derive_rooms(grid);
    CHECK(rooms_as_sets(partition.rooms) == oracle::rooms_union_find(grid));

    // Ids follow the row-major order of each room's first cell.
    for (std::size_t i = 1; i < partition.rooms.size(); ++i) {
      CHECK(partition.rooms[i - 1].cells.front() < partition.rooms[i].cells.front());
    }
    // Each door touches floor of exactly the two rooms it joins.
    auto const plan = FloorPlan::from_grid(grid);
    for (auto const &door : plan.doors) {
      std::set<int> seen;
      for (Coord off : {Coord{1, 0}, Coord{-1, 0}, Coord{0, 1}, Coord{0, -1}}) {
        int const r = plan.room_at({door.cell.x + off.x, door.cell.y + off.y});
        if (r >= 0) { seen.insert(r); }
      }
      CHECK(seen == std::set<int>{door.connects[0], door.connects[1]});
    }
    // Symmetric, zero diagonal, and every room has a neighbour once m >= 2.
    CHECK(plan.adjacency == plan.adjacency.transpose());
    CHECK(plan.adjacency.diagonal().sum() == 0);
    CHECK(building_connected(plan.adjacency));
    if (plan.room_count() >= 2) { CHECK(plan.adjacency.rowwise().sum().minCoeff() >= 1); }
    // Deterministic ids.
    CHECK(FloorPlan::from_grid(grid) == plan);
  }
}

TEST_CASE("serialize then parse reproduces the scenario")
{
  for (auto const *name : {"seven_room.scn"}) {
    auto const s = oracle::fixture(name);
    CHECK(parse_scenario(serialize_scenario(*s)) == *s);
  }
  constexpr char kRich[] = "[map]\n"
                           "#########\n"
                           "#A..#..C#\n"
                           "#.A.+.E.#\n"
                           "#########\n"
                           "[meta]\n"
                           "step_limit=77\n"
                           "order_sync=true\n"
                           "reward=death_penalty:2.5\n"
                           "r_complete=12.25\n"
                           "agent_hp=2\n"
                           "enemy_hp=3\n"
                           "enemy_path.0=6,1;5,1\n"
                           "enemy_behavior.0=path_fire\n";
  auto const s = parse_scenario(kRich);
  CHECK(s.step_limit == 77);
  CHECK(s.ruleset.order_sync);
  CHECK(s.reward == RewardConfig{RewardKind::death_penalty, 2.5});
  CHECK(s.r_complete == 12.25);
  CHECK(s.agent_hp == 2);
  REQUIRE(s.enemies.size() == 1);
  CHECK(s.enemies[0].hp == 3);
  CHECK(s.enemies[0].behavior == EnemyBehavior::path_then_fire);
  CHECK(s.enemies[0].route == std::vector<Coord>{{6, 1}, {5, 1}});
  CHECK(s.civilians == std::vector<Coord>{{7, 1}});
  CHECK(parse_scenario(serialize_scenario(s)) == s);
}

TEST_CASE("defaults when meta is absent")
{
  auto const s = parse_scenario(kTwoRooms);
  CHECK(s.step_limit == 500);
  CHECK_FALSE(s.ruleset.order_sync);
  CHECK(s.reward.kind == RewardKind::dense);
  CHECK(s.r_complete == 10.0);
  CHECK(s.agent_hp == 1);
  CHECK(s.enemy_hp == 1);
}

TEST_CASE("reward config text round trip")
{
  for (auto const *text : {"sparse", "default", "civilian", "death_penalty:10", "death_penalty:0.5"}) {
    CHECK(format_reward_config(parse_reward_config(text)) == text);
  }
}

TEST_CASE("errors carry a code and a position")
{
  SUBCASE("spawn in the border")
  {
    auto const e = parse_error("[map]\n#A###\n#...#\n#####\n");
    CHECK(e.code() == ScenarioErrc::spawn_not_on_floor);
    CHECK(e.line() == 2);
    CHECK(e.column() == 2);
  }
  SUBCASE("unknown map character")
  {
    auto const e = parse_error("[map]\n#####\n#A.x#\n#####\n");
    CHECK(e.code() == ScenarioErrc::bad_map_character);
    CHECK(e.line() == 3);
    CHECK(e.column() == 4);
    CHECK(is_syntax_error(e.code()));
  }
  SUBCASE("ragged rows")
  {
    auto const e = parse_error("[map]\n#####\n#A.#\n#####\n");
    CHECK(e.code() == ScenarioErrc::ragged_rows);
    CHECK(e.line() == 3);
  }
  SUBCASE("border floor")
  {
    auto const e = parse_error("[map]\n#####\n#A...\n#####\n");
    CHECK(e.code() == ScenarioErrc::border_not_wall);
  }
  SUBCASE("unknown key")
  {
    auto const e = parse_error("[map]\n#####\n#A..#\n#####\n[meta]\nstep_limit=3\ncolour=red\n");
    CHECK(e.code() == ScenarioErrc::unknown_key);
    CHECK(e.line() == 7);
  }
  SUBCASE("bad value")
  {
    auto const e = parse_error("[map]\n#####\n#A..#\n#####\n[meta]\nstep_limit=ten\n");
    CHECK(e.code() == ScenarioErrc::bad_value);
    CHECK(e.line() == 6);
  }
  SUBCASE("disconnected building")
  {
    auto const e = parse_error("[map]\n#######\n#A.#..#\n#######\n");
    CHECK(e.code() == ScenarioErrc::disconnected_building);
    CHECK_FALSE(is_syntax_error(e.code()));
  }
  SUBCASE("door touching one room")
  {
    auto const e = parse_error("[map]\n######\n#A.+##\n######\n");
    CHECK(e.code() == ScenarioErrc::malformed_door);
  }
  SUBCASE("no agents")
  {
    CHECK(parse_error("[map]\n#####\n#...#\n#####\n").code() == ScenarioErrc::no_agents);
  }
  SUBCASE("enemy route through a wall")
  {
    auto const e = parse_error("[map]\n#######\n#AE#..#\n#..+..#\n#######\n[meta]\nenemy_path.0=3,1\n");
    CHECK(e.code() == ScenarioErrc::path_not_walkable);
  }
  SUBCASE("enemy route with a jump")
  {
    auto const e = parse_error("[map]\n#######\n#AE...#\n#######\n[meta]\nenemy_path.0=4,1\n");
    CHECK(e.code() == ScenarioErrc::path_not_connected);
  }
  SUBCASE("route for a missing enemy")
  {
    auto const e = parse_error("[map]\n#######\n#AE...#\n#######\n[meta]\nenemy_path.3=3,1\n");
    CHECK(e.code() == ScenarioErrc::path_enemy_out_of_range);
  }
  SUBCASE("missing map")
  {
    CHECK(parse_error("[meta]\nstep_limit=3\n").code() == ScenarioErrc::missing_section);
  }
  SUBCASE("room wider than the frame limit")
  {
    std::string wide(kMaxRoomSpan + 3, '#');
    std::string mid = "#A" + std::string(kMaxRoomSpan, '.') + "#";
    auto const  e = parse_error("[map]\n" + wide + "\n" + mid + "\n" + wide + "\n");
    CHECK(e.code() == ScenarioErrc::room_too_large);
  }
}

TEST_CASE("scenario hash tracks content")
{
  auto const a = parse_scenario(kTwoRooms);
  auto       b = a;
  CHECK(scenario_hash(a) == scenario_hash(b));
  b.step_limit = 9;
  CHECK(scenario_hash(a) != scenario_hash(b));
}
