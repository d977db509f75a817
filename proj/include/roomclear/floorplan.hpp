#pragma once

#include <Eigen/Core>

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace roomclear {

/// Grid coordinate; x is the column, y the row (north is y - 1).
struct Coord
{
  int x = 0;
  int y = 0;

  friend bool operator==(Coord const &, Coord const &) = default;
  /// Row-major ordering.
  friend std::strong_ordering operator<=>(Coord const &a, Coord const &b)
  {
    if (auto c = a.y <=> b.y; c != 0) { return c; }
    return a.x <=> b.x;
  }
};

enum class CellKind : std::uint8_t
{
  wall,
  floor,
  door
};

class Grid
{
public:
  Grid() = default;
  Grid(int width, int height, CellKind fill = CellKind::wall);

  int width() const { return width_; }
  int height() const { return height_; }
  bool in_bounds(Coord c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  CellKind at(Coord c) const { return cells_[index(c)]; }
  void set(Coord c, CellKind kind) { cells_[index(c)] = kind; }
  /// Floor or door, and inside the grid.
  bool walkable(Coord c) const { return in_bounds(c) && at(c) != CellKind::wall; }
  std::size_t index(Coord c) const { return static_cast<std::size_t>(c.y) * width_ + c.x; }

  friend bool operator==(Grid const &, Grid const &) = default;

private:
  int                   width_ = 0;
  int                   height_ = 0;
  std::vector<CellKind> cells_;
};

struct Room
{
  int                id = 0;
  std::vector<Coord> cells; // row-major
  std::vector<int>   doors; // ascending door ids
  Coord              bbox_min;
  Coord              bbox_max;

  int bbox_width() const { return bbox_max.x - bbox_min.x + 1; }
  int bbox_height() const { return bbox_max.y - bbox_min.y + 1; }

  friend bool operator==(Room const &, Room const &) = default;
};

struct Door
{
  int                id = 0;
  Coord              cell;
  std::array<int, 2> connects{}; // ascending room ids

  int other_side(int room) const { return connects[0] == room ? connects[1] : connects[0]; }
  bool touches(int room) const { return connects[0] == room || connects[1] == room; }

  friend bool operator==(Door const &, Door const &) = default;
};

using AdjacencyMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

struct RoomPartition
{
  std::vector<Room> rooms;
  std::vector<Door> doors;
};

struct FloorPlan
{
  Grid              grid;
  std::vector<Room> rooms;
  std::vector<Door> doors;
  AdjacencyMatrix   adjacency;

  /// Room id of a floor cell, -1 for walls and doors.
  int room_at(Coord c) const;
  /// Door id of a door cell, -1 otherwise.
  int door_at(Coord c) const;
  int room_count() const { return static_cast<int>(rooms.size()); }

  static FloorPlan from_grid(Grid grid);

  friend bool operator==(FloorPlan const &a, FloorPlan const &b)
  {
    return a.grid == b.grid && a.rooms == b.rooms && a.doors == b.doors && a.adjacency == b.adjacency;
  }

private:
  std::vector<int> room_index_;
  std::vector<int> door_index_;
};

enum class EnemyBehavior : std::uint8_t
{
  stationary,
  path,
  path_then_fire
};

struct EnemySpec
{
  Coord              spawn;
  int                hp = 1;
  EnemyBehavior      behavior = EnemyBehavior::stationary;
  std::vector<Coord> route; // cells after the spawn, in walking order

  friend bool operator==(EnemySpec const &, EnemySpec const &) = default;
};

enum class RewardKind : std::uint8_t
{
  sparse,
  dense,
  death_penalty,
  civilian
};

struct RewardConfig
{
  RewardKind kind = RewardKind::dense;
  double     death_penalty = 0.0;

  friend bool operator==(RewardConfig const &, RewardConfig const &) = default;
};

struct Ruleset
{
  bool order_sync = false;
  friend bool operator==(Ruleset const &, Ruleset const &) = default;
};

struct Scenario
{
  FloorPlan              floorplan;
  std::vector<Coord>     agent_spawns;
  std::vector<EnemySpec> enemies;
  std::vector<Coord>     civilians;
  int                    step_limit = 500;
  Ruleset                ruleset;
  RewardConfig           reward;
  double                 r_complete = 10.0;
  int                    agent_hp = 1;
  int                    enemy_hp = 1;

  friend bool operator==(Scenario const &, Scenario const &) = default;
};

// Error reporting --------------------------------------------------------------

enum class ScenarioErrc
{
  // syntax
  missing_section,
  unknown_section,
  bad_map_character,
  ragged_rows,
  empty_map,
  malformed_line,
  unknown_key,
  duplicate_key,
  bad_value,
  // validation
  border_not_wall,
  spawn_not_on_floor,
  duplicate_spawn,
  malformed_door,
  disconnected_building,
  no_agents,
  path_not_walkable,
  path_not_connected,
  path_enemy_out_of_range,
  room_too_large,
  too_many_doors,
};

bool is_syntax_error(ScenarioErrc code);
std::string_view to_string(ScenarioErrc code);

class ScenarioError : public std::runtime_error
{
public:
  /// `line`/`column` are 1-based positions in the source text, 0 when the error has no text position.
  ScenarioError(ScenarioErrc code, std::string const &message, int line = 0, int column = 0);

  ScenarioErrc code() const { return code_; }
  int line() const { return line_; }
  int column() const { return column_; }

private:
  ScenarioErrc code_;
  int          line_;
  int          column_;
};

/// Largest room frame span and per-room door count accepted at load time.
inline constexpr int kMaxRoomSpan = 24;
inline constexpr int kMaxDoorsPerRoom = 8;

/// Flood-fills floor cells (doors and walls separate rooms). Room ids follow the
/// row-major order of each room's first cell; door ids follow door-cell order.
RoomPartition derive_rooms(Grid const &grid);

AdjacencyMatrix adjacency(std::vector<Room> const &rooms, std::vector<Door> const &doors);

/// True when every room is reachable from room 0 over the room graph.
bool building_connected(AdjacencyMatrix const &adjacency);

Scenario parse_scenario(std::string_view text);
std::string serialize_scenario(Scenario const &scenario);
Scenario load_scenario(std::string const &path);

/// Parses a reward value as written in the [meta] section, e.g. "death_penalty:10".
RewardConfig parse_reward_config(std::string_view text);
std::string format_reward_config(RewardConfig const &config);

/// Throws ScenarioError when the scenario violates an invariant.
void validate_scenario(Scenario const &scenario);

/// Stable 64-bit FNV-1a hash of the serialized scenario.
std::uint64_t scenario_hash(Scenario const &scenario);

} // namespace roomclear
