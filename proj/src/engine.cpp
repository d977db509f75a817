#include "roomclear/engine.hpp"

#include <algorithm>
#include <stdexcept>

namespace roomclear {

std::string_view to_string(PrimitiveAction a)
{
  switch (a) {
  case PrimitiveAction::wait: return "wait";
  case PrimitiveAction::shoot: return "shoot";
  case PrimitiveAction::move_north: return "move_north";
  case PrimitiveAction::move_south: return "move_south";
  case PrimitiveAction::move_east: return "move_east";
  case PrimitiveAction::move_west: return "move_west";
  }
  return "?";
}

Coord action_offset(PrimitiveAction a)
{
  switch (a) {
  case PrimitiveAction::move_north: return {0, -1};
  case PrimitiveAction::move_south: return {0, 1};
  case PrimitiveAction::move_east: return {1, 0};
  case PrimitiveAction::move_west: return {-1, 0};
  default: return {0, 0};
  }
}

std::string_view to_string(DoneReason r)
{
  switch (r) {
  case DoneReason::none: return "none";
  case DoneReason::cleared: return "cleared";
  case DoneReason::step_limit: return "step_limit";
  case DoneReason::all_agents_dead: return "all_agents_dead";
  }
  return "?";
}

std::string_view to_string(EventKind k)
{
  switch (k) {
  case EventKind::agent_died: return "agent_died";
  case EventKind::enemy_died: return "enemy_died";
  case EventKind::civilian_died: return "civilian_died";
  case EventKind::room_cleared: return "room_cleared";
  case EventKind::room_uncleared: return "room_uncleared";
  }
  return "?";
}

int WorldState::living_agents() const
{
  return static_cast<int>(std::count_if(agents.begin(), agents.end(), [](auto const &a) { return a.alive; }));
}

int WorldState::living_enemies_in(int room) const
{
  return static_cast<int>(
    std::count_if(enemies.begin(), enemies.end(), [&](auto const &e) { return e.alive && e.room == room; }));
}

namespace {

std::vector<int> living_agent_rooms(WorldState const &w)
{
  std::vector<int> rooms;
  for (auto const &a : w.agents) {
    if (a.alive) { rooms.push_back(a.room); }
  }
  return rooms;
}

std::vector<int> living_enemy_rooms(WorldState const &w)
{
  std::vector<int> rooms;
  for (auto const &e : w.enemies) {
    if (e.alive) { rooms.push_back(e.room); }
  }
  return rooms;
}

int squared_distance(Coord a, Coord b) { return (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y); }

template <typename Targets, typename Eligible>
std::optional<int> nearest(Grid const &grid, Coord from, Targets const &targets, Eligible eligible)
{
  std::optional<int> best;
  int                best_d = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    auto const &t = targets[i];
    if (!t.alive || !eligible(t)) { continue; }
    int const d = squared_distance(from, t.cell);
    if (best && d >= best_d) { continue; }
    if (!line_of_sight(grid, from, t.cell)) { continue; }
    best = static_cast<int>(i);
    best_d = d;
  }
  return best;
}

bool apply_hit(WorldState &world, ShotTarget target, std::vector<Event> &events)
{
  switch (target.kind) {
  case ShotTarget::Kind::agent: {
    auto &a = world.agents[target.index];
    if (!a.alive) { return false; }
    if (--a.hp <= 0) {
      a.hp = 0;
      a.alive = false;
      events.push_back({EventKind::agent_died, a.id});
      return true;
    }
    return false;
  }
  case ShotTarget::Kind::enemy: {
    auto &e = world.enemies[target.index];
    if (!e.alive) { return false; }
    if (--e.hp <= 0) {
      e.hp = 0;
      e.alive = false;
      events.push_back({EventKind::enemy_died, e.id});
      return true;
    }
    return false;
  }
  case ShotTarget::Kind::civilian: {
    auto &c = world.civilians[target.index];
    if (!c.alive) { return false; }
    c.alive = false;
    events.push_back({EventKind::civilian_died, c.id});
    return true;
  }
  }
  return false;
}

WorldState make_world(std::shared_ptr<Scenario const> scenario, std::span<Coord const> agent_cells, std::uint64_t seed)
{
  WorldState w;
  auto const &plan = scenario->floorplan;
  for (std::size_t i = 0; i < agent_cells.size(); ++i) {
    w.agents.push_back(AgentState{static_cast<int>(i), agent_cells[i], scenario->agent_hp, true,
                                  plan.room_at(agent_cells[i]), -1});
  }
  for (std::size_t i = 0; i < scenario->enemies.size(); ++i) {
    auto const &spec = scenario->enemies[i];
    w.enemies.push_back(
      EnemyState{static_cast<int>(i), spec.spawn, spec.hp, true, spec.behavior, 0, plan.room_at(spec.spawn)});
  }
  for (std::size_t i = 0; i < scenario->civilians.size(); ++i) {
    auto const c = scenario->civilians[i];
    w.civilians.push_back(CivilianState{static_cast<int>(i), c, true, plan.room_at(c)});
  }
  w.scenario = std::move(scenario);
  w.seed = seed;
  auto const agent_rooms = living_agent_rooms(w);
  auto const enemy_rooms = living_enemy_rooms(w);
  w.clearance = initial_clearance(w.floorplan().adjacency, agent_rooms, enemy_rooms);
  if (w.clearance.all_clear()) {
    w.done = true;
    w.done_reason = DoneReason::cleared;
  }
  return w;
}

} // namespace

WorldState reset(std::shared_ptr<Scenario const> scenario, std::uint64_t seed)
{
  if (!scenario) { throw std::invalid_argument("reset: null scenario"); }
  auto const spawns = scenario->agent_spawns;
  return make_world(std::move(scenario), spawns, seed);
}

WorldState reset_with_agents(std::shared_ptr<Scenario const> scenario,
                             std::span<Coord const>          agent_cells,
                             std::uint64_t                   seed)
{
  if (!scenario) { throw std::invalid_argument("reset_with_agents: null scenario"); }
  for (auto c : agent_cells) {
    if (scenario->floorplan.room_at(c) < 0) { throw std::invalid_argument("reset_with_agents: agent not on floor"); }
  }
  return make_world(std::move(scenario), agent_cells, seed);
}

bool line_of_sight(Grid const &grid, Coord a, Coord b)
{
  int const dx = std::abs(b.x - a.x);
  int const dy = std::abs(b.y - a.y);
  int const sx = b.x > a.x ? 1 : -1;
  int const sy = b.y > a.y ? 1 : -1;
  auto      blocked = [&](Coord c) { return !grid.in_bounds(c) || grid.at(c) == CellKind::wall; };

  if (blocked(a) || blocked(b)) { return false; }
  Coord c = a;
  int   ix = 0;
  int   iy = 0;
  while (ix < dx || iy < dy) {
    // Compare the parameters at which the segment crosses the next vertical
    // ((0.5 + ix) / dx) and horizontal ((0.5 + iy) / dy) cell boundaries.
    long const cross_x = static_cast<long>(1 + 2 * ix) * dy;
    long const cross_y = static_cast<long>(1 + 2 * iy) * dx;
    if (cross_x == cross_y) {
      if (blocked({c.x + sx, c.y}) || blocked({c.x, c.y + sy})) { return false; }
      c.x += sx;
      c.y += sy;
      ++ix;
      ++iy;
    } else if (cross_x < cross_y) {
      c.x += sx;
      ++ix;
    } else {
      c.y += sy;
      ++iy;
    }
    if (blocked(c)) { return false; }
  }
  return true;
}

std::optional<ShotTarget> select_target(WorldState const &world, int shooter, Faction faction)
{
  auto const &grid = world.floorplan().grid;
  if (faction == Faction::agents) {
    auto const &a = world.agents.at(shooter);
    if (!a.alive) { return std::nullopt; }
    auto const hit = nearest(grid, a.cell, world.enemies, [&](EnemyState const &e) { return e.room == a.room; });
    if (hit) { return ShotTarget{ShotTarget::Kind::enemy, *hit}; }
    return std::nullopt;
  }

  auto const &e = world.enemies.at(shooter);
  if (!e.alive) { return std::nullopt; }
  if (auto hit = nearest(grid, e.cell, world.agents, [&](AgentState const &a) { return a.room == e.room; })) {
    return ShotTarget{ShotTarget::Kind::agent, *hit};
  }
  if (e.behavior == EnemyBehavior::path_then_fire) {
    if (auto hit = nearest(grid, e.cell, world.civilians, [&](CivilianState const &c) { return c.room == e.room; })) {
      return ShotTarget{ShotTarget::Kind::civilian, *hit};
    }
  }
  return std::nullopt;
}

std::vector<Event> resolve_shot(WorldState &world, int shooter, Faction faction)
{
  std::vector<Event> events;
  if (auto target = select_target(world, shooter, faction)) { apply_hit(world, *target, events); }
  return events;
}

StepResult env_step(WorldState &world, std::span<PrimitiveAction const> actions)
{
  if (world.done) { throw std::logic_error("env_step: episode already finished"); }
  if (actions.size() != world.agents.size()) { throw std::invalid_argument("env_step: one action per agent required"); }

  WorldState const before = world;
  auto const      &plan = world.floorplan();
  auto const      &scenario = *world.scenario;
  std::vector<Event> events;

  // 1-2: fire decisions against the pre-step state
  std::vector<ShotTarget> hits;
  for (std::size_t i = 0; i < before.agents.size(); ++i) {
    if (before.agents[i].alive && actions[i] == PrimitiveAction::shoot) {
      if (auto t = select_target(before, static_cast<int>(i), Faction::agents)) { hits.push_back(*t); }
    }
  }
  std::vector<int> walkers;
  for (std::size_t k = 0; k < before.enemies.size(); ++k) {
    auto const &e = before.enemies[k];
    if (!e.alive) { continue; }
    if (auto t = select_target(before, static_cast<int>(k), Faction::enemies)) {
      hits.push_back(*t);
    } else if (e.behavior != EnemyBehavior::stationary &&
               e.route_index < static_cast<int>(scenario.enemies[k].route.size())) {
      walkers.push_back(static_cast<int>(k));
    }
  }
  for (auto const &t : hits) { apply_hit(world, t, events); }

  auto occupied = [&](Coord c) {
    for (auto const &a : world.agents) {
      if (a.alive && a.cell == c) { return true; }
    }
    for (auto const &e : world.enemies) {
      if (e.alive && e.cell == c) { return true; }
    }
    for (auto const &cv : world.civilians) {
      if (cv.alive && cv.cell == c) { return true; }
    }
    return false;
  };

  for (int k : walkers) {
    auto &e = world.enemies[k];
    if (!e.alive) { continue; }
    Coord const next = scenario.enemies[k].route[e.route_index];
    if (occupied(next)) { continue; }
    e.cell = next;
    ++e.route_index;
    if (int const r = plan.room_at(next); r >= 0) { e.room = r; }
  }

  // 3: agent movement, blocked by anything standing at the start of the phase
  std::vector<Coord> claimed;
  std::vector<Coord> targets(world.agents.size());
  std::vector<bool>  moves(world.agents.size(), false);
  for (std::size_t i = 0; i < world.agents.size(); ++i) {
    auto const &a = world.agents[i];
    if (!a.alive) { continue; }
    Coord const d = action_offset(actions[i]);
    if (d.x == 0 && d.y == 0) { continue; }
    Coord const t{a.cell.x + d.x, a.cell.y + d.y};
    if (!plan.grid.walkable(t) || occupied(t) || std::find(claimed.begin(), claimed.end(), t) != claimed.end()) {
      continue;
    }
    claimed.push_back(t);
    targets[i] = t;
    moves[i] = true;
  }
  for (std::size_t i = 0; i < world.agents.size(); ++i) {
    if (!moves[i]) { continue; }
    auto &a = world.agents[i];
    Coord const from = a.cell;
    a.cell = targets[i];
    int const r = plan.room_at(a.cell);
    if (r >= 0 && r != a.room) {
      a.entered_via = plan.door_at(from);
      a.room = r;
    }
  }

  ++world.timestep;

  // 4: clearance
  auto const agent_rooms = living_agent_rooms(world);
  auto const enemy_rooms = living_enemy_rooms(world);
  world.clearance = recompute_clearance(plan.adjacency, before.clearance.u, agent_rooms, enemy_rooms);
  for (int i = 0; i < plan.room_count(); ++i) {
    if (before.clearance.u(i) == 1 && world.clearance.u(i) == 0) { events.push_back({EventKind::room_cleared, i}); }
    if (before.clearance.u(i) == 0 && world.clearance.u(i) == 1) { events.push_back({EventKind::room_uncleared, i}); }
  }

  // 5: termination
  if (world.clearance.all_clear()) {
    world.done = true;
    world.done_reason = DoneReason::cleared;
  } else if (world.living_agents() == 0) {
    world.done = true;
    world.done_reason = DoneReason::all_agents_dead;
  } else if (world.timestep >= scenario.step_limit) {
    world.done = true;
    world.done_reason = DoneReason::step_limit;
  }
  world.step_events = events;

  // 6: reward
  StepResult result;
  result.reward = env_reward(before, world, scenario.reward, scenario.r_complete);
  result.events = std::move(events);
  return result;
}

double env_reward(WorldState const &before, WorldState const &after, RewardConfig const &config, double r_complete)
{
  bool const   cleared = after.clearance.all_clear();
  double const rooms = static_cast<double>(after.clearance.u.size());
  double const shaping = -1.0 + after.clearance.clear_count() / rooms;

  switch (config.kind) {
  case RewardKind::sparse: return cleared ? r_complete : 0.0;
  case RewardKind::dense: return cleared ? r_complete : shaping;
  case RewardKind::death_penalty: {
    int deaths = 0;
    for (std::size_t i = 0; i < after.agents.size() && i < before.agents.size(); ++i) {
      deaths += before.agents[i].alive && !after.agents[i].alive ? 1 : 0;
    }
    return (cleared ? r_complete : shaping) - config.death_penalty * deaths;
  }
  case RewardKind::civilian: {
    bool died = false;
    bool all_alive = true;
    for (std::size_t i = 0; i < after.civilians.size(); ++i) {
      died = died || (i < before.civilians.size() && before.civilians[i].alive && !after.civilians[i].alive);
      all_alive = all_alive && after.civilians[i].alive;
    }
    if (died) { return -r_complete; }
    if (cleared && all_alive) { return r_complete; }
    return shaping;
  }
  }
  throw std::invalid_argument("env_reward: unknown reward configuration");
}

BinaryVector occupied_vector(WorldState const &world)
{
  auto const rooms = living_agent_rooms(world);
  return occupancy_from_rooms(world.floorplan().room_count(), rooms);
}

ClearanceState recompute_clearance(WorldState const &world)
{
  auto const agent_rooms = living_agent_rooms(world);
  auto const enemy_rooms = living_enemy_rooms(world);
  return recompute_clearance(world.floorplan().adjacency, world.clearance.u, agent_rooms, enemy_rooms);
}

} // namespace roomclear
