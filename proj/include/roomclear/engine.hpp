#pragma once

#include "roomclear/clearance.hpp"
#include "roomclear/floorplan.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace roomclear {

enum class PrimitiveAction : std::uint8_t
{
  wait,
  shoot,
  move_north,
  move_south,
  move_east,
  move_west
};

inline constexpr int kPrimitiveActionCount = 6;

std::string_view to_string(PrimitiveAction a);
/// Cell offset of a move action, {0,0} for wait/shoot.
Coord action_offset(PrimitiveAction a);

struct AgentState
{
  int   id = 0;
  Coord cell;
  int   hp = 0;
  bool  alive = true;
  /// Room of the last floor cell stood on; unchanged while on a door cell.
  int room = -1;
  /// Door cell crossed to reach `room`, -1 before any crossing.
  int entered_via = -1;

  friend bool operator==(AgentState const &, AgentState const &) = default;
};

struct EnemyState
{
  int           id = 0;
  Coord         cell;
  int           hp = 0;
  bool          alive = true;
  EnemyBehavior behavior = EnemyBehavior::stationary;
  int           route_index = 0; ///< next route cell to walk to
  int           room = -1;

  friend bool operator==(EnemyState const &, EnemyState const &) = default;
};

struct CivilianState
{
  int   id = 0;
  Coord cell;
  bool  alive = true;
  int   room = -1;

  friend bool operator==(CivilianState const &, CivilianState const &) = default;
};

enum class DoneReason : std::uint8_t
{
  none,
  cleared,
  step_limit,
  all_agents_dead
};

std::string_view to_string(DoneReason r);

enum class EventKind : std::uint8_t
{
  agent_died,
  enemy_died,
  civilian_died,
  room_cleared,
  room_uncleared
};

std::string_view to_string(EventKind k);

struct Event
{
  EventKind kind;
  int       id = 0;
  friend bool operator==(Event const &, Event const &) = default;
};

struct WorldState
{
  std::shared_ptr<Scenario const> scenario;
  int                             timestep = 0;
  std::vector<AgentState>         agents;
  std::vector<EnemyState>         enemies;
  std::vector<CivilianState>      civilians;
  ClearanceState                  clearance;
  bool                            done = false;
  DoneReason                      done_reason = DoneReason::none;
  std::vector<Event>              step_events;
  std::uint64_t                   seed = 0;

  FloorPlan const &floorplan() const { return scenario->floorplan; }
  int living_agents() const;
  int living_enemies_in(int room) const;

  friend bool operator==(WorldState const &a, WorldState const &b)
  {
    return a.scenario == b.scenario && a.timestep == b.timestep && a.agents == b.agents &&
           a.enemies == b.enemies && a.civilians == b.civilians && a.clearance == b.clearance &&
           a.done == b.done && a.done_reason == b.done_reason && a.step_events == b.step_events &&
           a.seed == b.seed;
  }
};

/// Places every entity on its scenario spawn. The engine itself is
/// deterministic; `seed` is carried in the state for callers that branch runs.
WorldState reset(std::shared_ptr<Scenario const> scenario, std::uint64_t seed);

/// Same as reset() but agents start on `agent_cells` instead of the scenario spawns.
WorldState reset_with_agents(std::shared_ptr<Scenario const> scenario,
                             std::span<Coord const>          agent_cells,
                             std::uint64_t                   seed);

struct StepResult
{
  double             reward = 0.0;
  std::vector<Event> events;
};

/// Advances one timestep. `actions` holds one entry per agent (dead agents'
/// entries are ignored). Phases: agent fire, enemy behaviour, agent movement,
/// clearance, termination, reward. Fire in both phases is aimed against the
/// state at the start of the step, so an enemy killed by agents still gets its
/// shot off that step.
StepResult env_step(WorldState &world, std::span<PrimitiveAction const> actions);

/// True iff no wall cell is touched by the segment joining the two cell centres.
/// Corner contacts count as touching, so diagonal gaps between walls block sight.
bool line_of_sight(Grid const &grid, Coord a, Coord b);

enum class Faction : std::uint8_t
{
  agents,
  enemies
};

struct ShotTarget
{
  enum class Kind : std::uint8_t
  {
    agent,
    enemy,
    civilian
  };
  Kind kind;
  int  index;
  friend bool operator==(ShotTarget const &, ShotTarget const &) = default;
};

/// Nearest visible living opponent in the shooter's room (Euclidean distance,
/// ties to the lowest id). Enemies that follow a path-then-fire script target the
/// civilian in their room when no agent is available.
std::optional<ShotTarget> select_target(WorldState const &world, int shooter, Faction faction);

/// Applies one shot (1 hp) from `shooter` and returns the resulting death events.
std::vector<Event> resolve_shot(WorldState &world, int shooter, Faction faction);

/// Environment reward for a transition under `config`.
double env_reward(WorldState const &before, WorldState const &after, RewardConfig const &config, double r_complete);

BinaryVector occupied_vector(WorldState const &world);
ClearanceState recompute_clearance(WorldState const &world);

} // namespace roomclear
