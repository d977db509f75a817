#include "roomclear/floorplan.hpp"

#include <algorithm>
#include <queue>
#include <set>

namespace roomclear {

namespace {

constexpr std::array<Coord, 4> kNeighbours{{{0, -1}, {0, 1}, {1, 0}, {-1, 0}}};

Coord operator+(Coord a, Coord b) { return {a.x + b.x, a.y + b.y}; }

std::string describe(Coord c) { return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")"; }

} // namespace

Grid::Grid(int width, int height, CellKind fill)
  : width_(width)
  , height_(height)
  , cells_(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), fill)
{
}

ScenarioError::ScenarioError(ScenarioErrc code, std::string const &message, int line, int column)
  : std::runtime_error(std::string(to_string(code)) + ": " + message +
                       (line > 0 ? " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"
                                 : std::string()))
  , code_(code)
  , line_(line)
  , column_(column)
{
}

bool is_syntax_error(ScenarioErrc code) { return code <= ScenarioErrc::bad_value; }

std::string_view to_string(ScenarioErrc code)
{
  switch (code) {
  case ScenarioErrc::missing_section: return "missing_section";
  case ScenarioErrc::unknown_section: return "unknown_section";
  case ScenarioErrc::bad_map_character: return "bad_map_character";
  case ScenarioErrc::ragged_rows: return "ragged_rows";
  case ScenarioErrc::empty_map: return "empty_map";
  case ScenarioErrc::malformed_line: return "malformed_line";
  case ScenarioErrc::unknown_key: return "unknown_key";
  case ScenarioErrc::duplicate_key: return "duplicate_key";
  case ScenarioErrc::bad_value: return "bad_value";
  case ScenarioErrc::border_not_wall: return "border_not_wall";
  case ScenarioErrc::spawn_not_on_floor: return "spawn_not_on_floor";
  case ScenarioErrc::duplicate_spawn: return "duplicate_spawn";
  case ScenarioErrc::malformed_door: return "malformed_door";
  case ScenarioErrc::disconnected_building: return "disconnected_building";
  case ScenarioErrc::no_agents: return "no_agents";
  case ScenarioErrc::path_not_walkable: return "path_not_walkable";
  case ScenarioErrc::path_not_connected: return "path_not_connected";
  case ScenarioErrc::path_enemy_out_of_range: return "path_enemy_out_of_range";
  case ScenarioErrc::room_too_large: return "room_too_large";
  case ScenarioErrc::too_many_doors: return "too_many_doors";
  }
  return "unknown";
}

RoomPartition derive_rooms(Grid const &grid)
{
  RoomPartition    out;
  std::vector<int> label(static_cast<std::size_t>(grid.width()) * grid.height(), -1);

  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      Coord const start{x, y};
      if (grid.at(start) != CellKind::floor || label[grid.index(start)] >= 0) { continue; }

      Room room;
      room.id = static_cast<int>(out.rooms.size());
      std::queue<Coord> frontier;
      frontier.push(start);
      label[grid.index(start)] = room.id;
      while (!frontier.empty()) {
        Coord const c = frontier.front();
        frontier.pop();
        room.cells.push_back(c);
        for (auto d : kNeighbours) {
          Coord const n = c + d;
          if (!grid.in_bounds(n) || grid.at(n) != CellKind::floor || label[grid.index(n)] >= 0) { continue; }
          label[grid.index(n)] = room.id;
          frontier.push(n);
        }
      }
      std::sort(room.cells.begin(), room.cells.end());
      room.bbox_min = room.cells.front();
      room.bbox_max = room.cells.front();
      for (auto c : room.cells) {
        room.bbox_min = {std::min(room.bbox_min.x, c.x), std::min(room.bbox_min.y, c.y)};
        room.bbox_max = {std::max(room.bbox_max.x, c.x), std::max(room.bbox_max.y, c.y)};
      }
      out.rooms.push_back(std::move(room));
    }
  }

  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      Coord const c{x, y};
      if (grid.at(c) != CellKind::door) { continue; }
      std::set<int> touching;
      for (auto d : kNeighbours) {
        Coord const n = c + d;
        if (grid.in_bounds(n) && grid.at(n) == CellKind::floor) { touching.insert(label[grid.index(n)]); }
      }
      if (touching.size() != 2) {
        throw ScenarioError(ScenarioErrc::malformed_door,
                            "door at " + describe(c) + " touches " + std::to_string(touching.size()) +
                              " rooms, expected 2");
      }
      Door door;
      door.id = static_cast<int>(out.doors.size());
      door.cell = c;
      door.connects = {*touching.begin(), *touching.rbegin()};
      out.rooms[door.connects[0]].doors.push_back(door.id);
      out.rooms[door.connects[1]].doors.push_back(door.id);
      out.doors.push_back(door);
    }
  }
  return out;
}

AdjacencyMatrix adjacency(std::vector<Room> const &rooms, std::vector<Door> const &doors)
{
  auto const      m = static_cast<Eigen::Index>(rooms.size());
  AdjacencyMatrix a = AdjacencyMatrix::Zero(m, m);
  for (auto const &door : doors) {
    a(door.connects[0], door.connects[1]) = 1;
    a(door.connects[1], door.connects[0]) = 1;
  }
  return a;
}

bool building_connected(AdjacencyMatrix const &a)
{
  auto const m = a.rows();
  if (m == 0) { return false; }
  std::vector<bool>          seen(m, false);
  std::queue<Eigen::Index> frontier;
  frontier.push(0);
  seen[0] = true;
  Eigen::Index reached = 1;
  while (!frontier.empty()) {
    auto const i = frontier.front();
    frontier.pop();
    for (Eigen::Index j = 0; j < m; ++j) {
      if (a(i, j) != 0 && !seen[j]) {
        seen[j] = true;
        ++reached;
        frontier.push(j);
      }
    }
  }
  return reached == m;
}

FloorPlan FloorPlan::from_grid(Grid grid)
{
  FloorPlan plan;
  auto      partition = derive_rooms(grid);
  plan.adjacency = roomclear::adjacency(partition.rooms, partition.doors);
  plan.rooms = std::move(partition.rooms);
  plan.doors = std::move(partition.doors);
  plan.grid = std::move(grid);

  auto const cells = static_cast<std::size_t>(plan.grid.width()) * plan.grid.height();
  plan.room_index_.assign(cells, -1);
  plan.door_index_.assign(cells, -1);
  for (auto const &room : plan.rooms) {
    for (auto c : room.cells) { plan.room_index_[plan.grid.index(c)] = room.id; }
  }
  for (auto const &door : plan.doors) { plan.door_index_[plan.grid.index(door.cell)] = door.id; }
  return plan;
}

int FloorPlan::room_at(Coord c) const { return grid.in_bounds(c) ? room_index_[grid.index(c)] : -1; }

int FloorPlan::door_at(Coord c) const { return grid.in_bounds(c) ? door_index_[grid.index(c)] : -1; }

void validate_scenario(Scenario const &s)
{
  auto const &grid = s.floorplan.grid;
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      bool const border = x == 0 || y == 0 || x == grid.width() - 1 || y == grid.height() - 1;
      if (border && grid.at({x, y}) != CellKind::wall) {
        throw ScenarioError(ScenarioErrc::border_not_wall, "border cell " + describe({x, y}) + " is not a wall");
      }
    }
  }
  if (s.floorplan.rooms.empty() || !building_connected(s.floorplan.adjacency)) {
    throw ScenarioError(ScenarioErrc::disconnected_building, "some rooms cannot be reached from room 0");
  }
  for (auto const &room : s.floorplan.rooms) {
    if (std::max(room.bbox_width(), room.bbox_height()) + 2 > kMaxRoomSpan) {
      throw ScenarioError(ScenarioErrc::room_too_large, "room " + std::to_string(room.id) + " exceeds the frame limit");
    }
    if (static_cast<int>(room.doors.size()) > kMaxDoorsPerRoom) {
      throw ScenarioError(ScenarioErrc::too_many_doors, "room " + std::to_string(room.id) + " has too many doors");
    }
  }
  if (s.agent_spawns.empty()) { throw ScenarioError(ScenarioErrc::no_agents, "scenario has no agent spawn"); }
  if (s.step_limit < 1) { throw ScenarioError(ScenarioErrc::bad_value, "step_limit must be positive"); }
  if (s.agent_hp < 1 || s.enemy_hp < 1) { throw ScenarioError(ScenarioErrc::bad_value, "hit points must be positive"); }

  std::set<Coord> occupied;
  auto            claim = [&](Coord c, char const *what) {
    if (!grid.in_bounds(c) || grid.at(c) != CellKind::floor) {
      throw ScenarioError(ScenarioErrc::spawn_not_on_floor, std::string(what) + " spawn " + describe(c) + " not on floor");
    }
    if (!occupied.insert(c).second) {
      throw ScenarioError(ScenarioErrc::duplicate_spawn, "two entities spawn at " + describe(c));
    }
  };
  for (auto c : s.agent_spawns) { claim(c, "agent"); }
  for (auto const &e : s.enemies) { claim(e.spawn, "enemy"); }
  for (auto c : s.civilians) { claim(c, "civilian"); }

  for (std::size_t k = 0; k < s.enemies.size(); ++k) {
    Coord prev = s.enemies[k].spawn;
    for (auto c : s.enemies[k].route) {
      if (!grid.walkable(c)) {
        throw ScenarioError(ScenarioErrc::path_not_walkable,
                            "enemy " + std::to_string(k) + " route cell " + describe(c) + " is not walkable");
      }
      if (std::abs(c.x - prev.x) + std::abs(c.y - prev.y) != 1) {
        throw ScenarioError(ScenarioErrc::path_not_connected,
                            "enemy " + std::to_string(k) + " route jumps from " + describe(prev) + " to " + describe(c));
      }
      prev = c;
    }
  }
}

std::uint64_t scenario_hash(Scenario const &scenario)
{
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : serialize_scenario(scenario)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

} // namespace roomclear
