#include "roomclear/feudal.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <queue>
#include <stdexcept>

namespace roomclear {

namespace {

constexpr std::array<PrimitiveAction, 4> kMoves{PrimitiveAction::move_north, PrimitiveAction::move_south,
                                                PrimitiveAction::move_east, PrimitiveAction::move_west};

Coord step(Coord c, PrimitiveAction a)
{
  Coord const d = action_offset(a);
  return {c.x + d.x, c.y + d.y};
}

/// Walkable cells of a room: its floor cells and its doors.
std::vector<Coord> room_walkable(FloorPlan const &plan, Room const &room)
{
  std::vector<Coord> cells = room.cells;
  for (int d : room.doors) { cells.push_back(plan.doors[d].cell); }
  return cells;
}

/// BFS over the frame grid. Returns distances, -1 where unreachable.
std::vector<int> frame_bfs(std::vector<std::uint8_t> const &walkable, int side, Coord start)
{
  std::vector<int> dist(walkable.size(), -1);
  auto             idx = [side](Coord c) { return static_cast<std::size_t>(c.y) * side + c.x; };
  if (start.x < 0 || start.y < 0 || start.x >= side || start.y >= side || !walkable[idx(start)]) { return dist; }
  std::queue<Coord> frontier;
  frontier.push(start);
  dist[idx(start)] = 0;
  while (!frontier.empty()) {
    Coord const c = frontier.front();
    frontier.pop();
    for (auto a : kMoves) {
      Coord const n = step(c, a);
      if (n.x < 0 || n.y < 0 || n.x >= side || n.y >= side) { continue; }
      if (!walkable[idx(n)] || dist[idx(n)] >= 0) { continue; }
      dist[idx(n)] = dist[idx(c)] + 1;
      frontier.push(n);
    }
  }
  return dist;
}

} // namespace

std::string_view to_string(OrderOutcome o)
{
  switch (o) {
  case OrderOutcome::in_progress: return "in_progress";
  case OrderOutcome::completed: return "completed";
  case OrderOutcome::failed_wrong_door: return "failed_wrong_door";
  case OrderOutcome::failed_timeout: return "failed_timeout";
  }
  return "?";
}

// FeudalLayout -------------------------------------------------------------------

FeudalLayout::FeudalLayout(Scenario const &scenario)
  : plan_(&scenario.floorplan)
  , agents_(static_cast<int>(scenario.agent_spawns.size()))
  , e_max_(static_cast<int>(scenario.enemies.size()))
  , order_sync_(scenario.ruleset.order_sync)
{
  auto const &plan = *plan_;
  for (auto const &room : plan.rooms) {
    r_max_ = std::max(r_max_, std::max(room.bbox_width(), room.bbox_height()) + 2);
    d_max_ = std::max(d_max_, static_cast<int>(room.doors.size()));
  }
  if (r_max_ > kMaxRoomSpan) { throw ScenarioError(ScenarioErrc::room_too_large, "room frame exceeds limit"); }
  if (d_max_ > kMaxDoorsPerRoom) { throw ScenarioError(ScenarioErrc::too_many_doors, "room door count exceeds limit"); }

  inner_.assign(plan.doors.size() * 2, Coord{-1, -1});
  exit_.assign(plan.doors.size() * 2, PrimitiveAction::wait);
  for (auto const &door : plan.doors) {
    for (int side = 0; side < 2; ++side) {
      int const room = door.connects[side];
      int const other = door.connects[1 - side];
      bool      have_inner = false;
      bool      have_exit = false;
      for (auto a : kMoves) {
        Coord const n = step(door.cell, a);
        int const   r = plan.room_at(n);
        if (r == room && !have_inner) {
          inner_[door.id * 2 + side] = n;
          have_inner = true;
        }
        if (r == other && !have_exit) {
          exit_[door.id * 2 + side] = a;
          have_exit = true;
        }
      }
    }
  }

  auto const area = static_cast<std::size_t>(r_max_) * r_max_;
  for (auto const &room : plan.rooms) {
    RoomFrame frame;
    frame.origin = {room.bbox_min.x - 1, room.bbox_min.y - 1};
    frame.door_slots = room.doors;
    frame.deadline_budget = std::max(20, 4 * (room.bbox_width() + room.bbox_height()));

    std::vector<std::uint8_t> walkable(area, 0);
    auto const                cells = room_walkable(plan, room);
    for (auto c : cells) {
      Coord const f{c.x - frame.origin.x, c.y - frame.origin.y};
      walkable[static_cast<std::size_t>(f.y) * r_max_ + f.x] = 1;
    }
    frame.distance.assign(room.doors.size() * area, -1);
    for (std::size_t k = 0; k < room.doors.size(); ++k) {
      Coord const door = plan.doors[room.doors[k]].cell;
      auto const  dist = frame_bfs(walkable, r_max_, {door.x - frame.origin.x, door.y - frame.origin.y});
      std::copy(dist.begin(), dist.end(), frame.distance.begin() + static_cast<std::ptrdiff_t>(k * area));
    }
    int diameter = 1;
    for (auto c : cells) {
      auto const dist = frame_bfs(walkable, r_max_, {c.x - frame.origin.x, c.y - frame.origin.y});
      diameter = std::max(diameter, *std::max_element(dist.begin(), dist.end()));
    }
    frame.diameter = diameter;
    frames_.push_back(std::move(frame));
  }
}

Coord FeudalLayout::inner_cell(int door, int room) const
{
  auto const &d = plan_->doors.at(door);
  return inner_[door * 2 + (d.connects[0] == room ? 0 : 1)];
}

PrimitiveAction FeudalLayout::exit_action(int door, int room) const
{
  auto const &d = plan_->doors.at(door);
  return exit_[door * 2 + (d.connects[0] == room ? 0 : 1)];
}

Coord FeudalLayout::to_frame(int room, Coord cell) const
{
  auto const &f = frames_.at(room);
  return {cell.x - f.origin.x, cell.y - f.origin.y};
}

int FeudalLayout::door_distance(int room, int slot, Coord cell) const
{
  auto const &f = frames_.at(room);
  Coord const rel = to_frame(room, cell);
  if (slot < 0 || slot >= static_cast<int>(f.door_slots.size())) { return -1; }
  if (rel.x < 0 || rel.y < 0 || rel.x >= r_max_ || rel.y >= r_max_) { return -1; }
  auto const area = static_cast<std::size_t>(r_max_) * r_max_;
  return f.distance[slot * area + static_cast<std::size_t>(rel.y) * r_max_ + rel.x];
}

std::size_t FeudalLayout::agent_observation_size() const
{
  return static_cast<std::size_t>(r_max_ * r_max_ + 2 + 3 * d_max_ + 3 * e_max_ + (d_max_ + 1) + 1);
}

std::size_t FeudalLayout::commander_observation_size() const
{
  int const m = rooms();
  int const n = agents_;
  int const per_agent = 1 + m + doors() + 1;
  return static_cast<std::size_t>(m + n + m + d_max_ + n * per_agent + (order_sync_ ? 2 * doors() : 0));
}

// Orders -------------------------------------------------------------------------

ActionMask order_space(WorldState const &world, int agent, FeudalLayout const &layout)
{
  ActionMask  mask = ActionMask::Constant(layout.order_slots(), false);
  auto const &a = world.agents.at(agent);
  if (a.room >= 0) {
    auto const doors = static_cast<int>(layout.frame(a.room).door_slots.size());
    for (int k = 0; k < doors; ++k) { mask(k) = true; }
  }
  mask(layout.wait_slot()) = true;
  return mask;
}

Order make_order(WorldState const &world, int agent, int slot, FeudalLayout const &layout)
{
  auto const &a = world.agents.at(agent);
  auto const  mask = order_space(world, agent, layout);
  if (slot < 0 || slot >= mask.size() || !mask(slot)) {
    throw std::invalid_argument("make_order: slot " + std::to_string(slot) + " is not valid for agent " +
                                std::to_string(agent));
  }
  auto const &frame = layout.frame(a.room);
  Order       order;
  order.slot = slot;
  order.origin_room = a.room;
  order.issued_at = world.timestep;
  order.deadline = world.timestep + frame.deadline_budget;
  if (slot == layout.wait_slot()) {
    order.kind = OrderKind::wait;
    order.pass_through = false;
    return order;
  }
  order.kind = OrderKind::through_door;
  order.door = frame.door_slots[slot];
  if (layout.order_sync()) {
    Coord const door_cell = layout.floorplan().doors[order.door].cell;
    order.pass_through = a.cell == door_cell || a.cell == layout.inner_cell(order.door, a.room);
  } else {
    order.pass_through = true;
  }
  return order;
}

OrderOutcome order_status(AgentState const &agent, Order const &order, WorldState const &world,
                          FeudalLayout const &layout)
{
  bool const room_safe = world.living_enemies_in(order.origin_room) == 0;
  bool const timed_out = world.timestep >= order.deadline;

  if (order.kind == OrderKind::wait) {
    if (agent.room != order.origin_room) { return OrderOutcome::failed_wrong_door; }
    if (timed_out) { return room_safe ? OrderOutcome::completed : OrderOutcome::failed_timeout; }
    return OrderOutcome::in_progress;
  }

  auto const &door = layout.floorplan().doors.at(order.door);
  if (order.pass_through) {
    if (agent.room != order.origin_room) {
      bool const right_way = agent.room == door.other_side(order.origin_room) && agent.entered_via == order.door;
      return right_way && room_safe ? OrderOutcome::completed : OrderOutcome::failed_wrong_door;
    }
  } else {
    if (agent.room != order.origin_room) { return OrderOutcome::failed_wrong_door; }
    if (agent.cell == layout.inner_cell(order.door, order.origin_room) && room_safe) {
      return OrderOutcome::completed;
    }
  }
  return timed_out ? OrderOutcome::failed_timeout : OrderOutcome::in_progress;
}

OrderOutcome close_wait_order(AgentState const &agent, Order const &order, WorldState const &world)
{
  if (agent.room != order.origin_room) { return OrderOutcome::failed_wrong_door; }
  return world.living_enemies_in(order.origin_room) == 0 ? OrderOutcome::completed : OrderOutcome::failed_timeout;
}

double agent_reward(OrderOutcome outcome)
{
  switch (outcome) {
  case OrderOutcome::completed: return 10.0;
  case OrderOutcome::failed_wrong_door: return -10.0;
  default: return 0.0;
  }
}

// Observations ---------------------------------------------------------------------

AgentObservation encode_agent_obs(WorldState const &world, int agent, Order const &order, FeudalLayout const &layout)
{
  auto const &a = world.agents.at(agent);
  auto const &plan = layout.floorplan();
  auto const &frame = layout.frame(a.room);
  int const   side = layout.r_max();

  AgentObservation obs;
  obs.room = a.room;
  obs.r_max = side;
  obs.self = layout.to_frame(a.room, a.cell);
  obs.room_grid.assign(static_cast<std::size_t>(side) * side, 0);
  auto mark = [&](Coord c) {
    Coord const f = layout.to_frame(a.room, c);
    obs.room_grid[static_cast<std::size_t>(f.y) * side + f.x] = 1;
  };
  for (auto c : plan.rooms[a.room].cells) { mark(c); }

  obs.doors.assign(layout.d_max(), SlotCoord{});
  obs.door_exits.assign(layout.d_max(), PrimitiveAction::wait);
  for (std::size_t k = 0; k < frame.door_slots.size(); ++k) {
    int const door = frame.door_slots[k];
    mark(plan.doors[door].cell);
    obs.doors[k] = {layout.to_frame(a.room, plan.doors[door].cell), true};
    obs.door_exits[k] = layout.exit_action(door, a.room);
  }

  obs.enemies.assign(layout.e_max(), SlotCoord{});
  std::size_t filled = 0;
  for (auto const &e : world.enemies) {
    if (filled >= obs.enemies.size()) { break; }
    if (!e.alive || e.room != a.room || !line_of_sight(plan.grid, a.cell, e.cell)) { continue; }
    obs.enemies[filled++] = {layout.to_frame(a.room, e.cell), true};
  }

  obs.order_slot = order.kind == OrderKind::wait ? layout.wait_slot() : order.slot;
  obs.pass_through = order.kind == OrderKind::through_door && order.pass_through;
  obs.order_sync = layout.order_sync();
  return obs;
}

Eigen::VectorXd AgentObservation::features() const
{
  auto const      d_max = static_cast<Eigen::Index>(doors.size());
  auto const      e_max = static_cast<Eigen::Index>(enemies.size());
  Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(room_grid.size()) + 2 + 3 * d_max +
                                            3 * e_max + d_max + 1 + 1);
  double const    scale = 1.0 / r_max;
  Eigen::Index    i = 0;
  for (auto cell : room_grid) { f(i++) = cell; }
  f(i++) = self.x * scale;
  f(i++) = self.y * scale;
  for (auto const &slot : doors) {
    if (slot.valid) {
      f(i) = slot.rel.x * scale;
      f(i + 1) = slot.rel.y * scale;
      f(i + 2) = 1.0;
    }
    i += 3;
  }
  for (auto const &slot : enemies) {
    if (slot.valid) {
      f(i) = slot.rel.x * scale;
      f(i + 1) = slot.rel.y * scale;
      f(i + 2) = 1.0;
    }
    i += 3;
  }
  f(i + order_slot) = 1.0;
  i += d_max + 1;
  f(i) = pass_through ? 1.0 : 0.0;
  return f;
}

StateKey AgentObservation::key() const
{
  StateKey key{room, self.x, self.y, order_slot, pass_through ? 1 : 0};
  for (auto const &slot : enemies) {
    key.push_back(slot.valid ? slot.rel.x : -1);
    key.push_back(slot.valid ? slot.rel.y : -1);
  }
  return key;
}

CommanderObservation encode_commander_obs(WorldState const                       &world,
                                          std::vector<std::optional<Order>> const &orders,
                                          int                                     agent,
                                          FeudalLayout const                     &layout)
{
  int const   m = layout.rooms();
  int const   n = layout.agents();
  int const   doors = layout.doors();
  auto const &acting = world.agents.at(agent);
  auto const &plan = layout.floorplan();

  CommanderObservation obs;
  obs.agent = agent;
  obs.mask = order_space(world, agent, layout);
  obs.features = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.commander_observation_size()));
  auto        &f = obs.features;
  Eigen::Index i = 0;

  StateKey key;
  std::int32_t packed = 0;
  int          bits = 0;
  auto push_bit = [&](bool b) {
    packed |= (b ? 1 : 0) << bits;
    if (++bits == 30) {
      key.push_back(packed);
      packed = 0;
      bits = 0;
    }
  };

  for (int r = 0; r < m; ++r) {
    bool const clear = world.clearance.u(r) == 0;
    f(i++) = clear ? 1.0 : 0.0;
    push_bit(clear);
  }
  key.push_back(packed);
  packed = 0;
  bits = 0;

  f(i + agent) = 1.0;
  i += n;
  f(i + acting.room) = 1.0;
  i += m;
  key.push_back(agent);
  key.push_back(acting.room);

  // The table only sees which door slots the acting agent stands next to.
  auto const  &frame = layout.frame(acting.room);
  std::int32_t beside = 0;
  for (std::size_t k = 0; k < frame.door_slots.size(); ++k) {
    int const d = layout.door_distance(acting.room, static_cast<int>(k), acting.cell);
    f(i + static_cast<Eigen::Index>(k)) = d < 0 ? 0.0 : static_cast<double>(d) / frame.diameter;
    if (d >= 0 && d <= 1) { beside |= 1 << k; }
  }
  key.push_back(beside);
  i += layout.d_max();

  for (int j = 0; j < n; ++j) {
    auto const &a = world.agents[j];
    if (!a.alive) {
      key.push_back(-1);
      key.push_back(-2);
      i += 1 + m + doors + 1;
      continue;
    }
    f(i++) = 1.0;
    f(i + a.room) = 1.0;
    i += m;
    int code = -2;
    if (orders[j]) {
      if (orders[j]->kind == OrderKind::wait) {
        f(i + doors) = 1.0;
        code = -1;
      } else {
        f(i + orders[j]->door) = 1.0;
        code = orders[j]->door;
      }
    }
    i += doors + 1;
    key.push_back(a.room);
    key.push_back(code);
  }

  if (layout.order_sync()) {
    for (auto const &door : plan.doors) {
      bool waiting = false;
      bool ordered = false;
      for (int j = 0; j < n; ++j) {
        auto const &a = world.agents[j];
        if (!a.alive) { continue; }
        int const dist = std::abs(a.cell.x - door.cell.x) + std::abs(a.cell.y - door.cell.y);
        waiting = waiting || dist <= 1;
        ordered = ordered || (orders[j] && orders[j]->kind == OrderKind::through_door && orders[j]->door == door.id);
      }
      f(i++) = waiting ? 1.0 : 0.0;
      f(i++) = ordered ? 1.0 : 0.0;
      push_bit(waiting);
      push_bit(ordered);
    }
    key.push_back(packed);
  }
  obs.key = std::move(key);
  return obs;
}

// Scripted agents ------------------------------------------------------------------

PrimitiveAction scripted_agent_policy(AgentObservation const &obs)
{
  for (auto const &e : obs.enemies) {
    if (e.valid) { return PrimitiveAction::shoot; }
  }
  int const side = obs.r_max;
  auto      idx = [side](Coord c) { return static_cast<std::size_t>(c.y) * side + c.x; };
  auto      inside = [side](Coord c) { return c.x >= 0 && c.y >= 0 && c.x < side && c.y < side; };
  auto      is_door = [&](Coord c) {
    return std::any_of(obs.doors.begin(), obs.doors.end(), [&](SlotCoord const &d) { return d.valid && d.rel == c; });
  };
  auto door_adjacent = [&](Coord c) {
    return std::any_of(obs.doors.begin(), obs.doors.end(), [&](SlotCoord const &d) {
      return d.valid && std::abs(d.rel.x - c.x) + std::abs(d.rel.y - c.y) == 1;
    });
  };

  auto const d_max = static_cast<int>(obs.doors.size());
  if (obs.order_slot >= d_max) {
    // Outside order-sync, step off a doorway so others can get through.
    if (!obs.order_sync && door_adjacent(obs.self)) {
      for (auto a : kMoves) {
        Coord const n = step(obs.self, a);
        if (inside(n) && obs.room_grid[idx(n)] && !is_door(n) && !door_adjacent(n)) { return a; }
      }
    }
    return PrimitiveAction::wait;
  }

  Coord const door = obs.doors[obs.order_slot].rel;
  auto const  exit = obs.door_exits[obs.order_slot];
  if (obs.self == door) { return exit; }
  Coord const exit_step = action_offset(exit);
  Coord const inner{door.x - exit_step.x, door.y - exit_step.y};
  Coord const goal = obs.pass_through ? door : inner;
  if (obs.self == goal) { return PrimitiveAction::wait; }

  // Walk back from the goal so the first step out of `self` can be read off directly.
  std::vector<std::uint8_t> walkable = obs.room_grid;
  for (auto const &d : obs.doors) {
    if (d.valid && d.rel != goal) { walkable[idx(d.rel)] = 0; }
  }
  auto const dist = frame_bfs(walkable, side, goal);
  int        here = inside(obs.self) ? dist[idx(obs.self)] : -1;
  if (here < 0) { return PrimitiveAction::wait; }
  for (auto a : kMoves) {
    Coord const n = step(obs.self, a);
    if (inside(n) && dist[idx(n)] >= 0 && dist[idx(n)] == here - 1) { return a; }
  }
  return PrimitiveAction::wait;
}

// Command layer --------------------------------------------------------------------

OrderBook::OrderBook(FeudalLayout const &layout, int agents)
  : layout_(&layout)
  , orders_(static_cast<std::size_t>(agents))
{
}

void OrderBook::assign(WorldState const &world, int agent, int slot)
{
  orders_.at(agent) = make_order(world, agent, slot, *layout_);
  ++issued_;
}

std::vector<Resolution> OrderBook::evaluate(WorldState const &world)
{
  std::vector<Resolution> out;
  for (std::size_t i = 0; i < orders_.size(); ++i) {
    if (!orders_[i]) { continue; }
    auto const &a = world.agents[i];
    if (!a.alive) {
      out.push_back({static_cast<int>(i), *orders_[i], OrderOutcome::failed_timeout, true});
      orders_[i].reset();
      continue;
    }
    auto const outcome = order_status(a, *orders_[i], world, *layout_);
    if (outcome != OrderOutcome::in_progress) {
      out.push_back({static_cast<int>(i), *orders_[i], outcome, false});
      orders_[i].reset();
    }
  }
  return out;
}

std::vector<Resolution> OrderBook::close_waits(WorldState const &world)
{
  std::vector<Resolution> out;
  for (std::size_t i = 0; i < orders_.size(); ++i) {
    if (!orders_[i] || orders_[i]->kind != OrderKind::wait || !world.agents[i].alive) { continue; }
    out.push_back({static_cast<int>(i), *orders_[i], close_wait_order(world.agents[i], *orders_[i], world), false});
    orders_[i].reset();
  }
  return out;
}

IssueResult issue_orders(WorldState const              &world,
                         OrderBook                     &book,
                         std::vector<Resolution> const &resolved,
                         bool                           episode_start,
                         CommanderPolicy const         &policy,
                         CommanderRewardAccumulator    &reward,
                         int                           &decision_counter,
                         FeudalLayout const            &layout)
{
  IssueResult      result;
  std::vector<int> who;
  if (episode_start) {
    for (auto const &a : world.agents) {
      if (a.alive) { who.push_back(a.id); }
    }
  } else {
    for (auto const &r : resolved) {
      if (!r.agent_died && world.agents[r.agent].alive) { who.push_back(r.agent); }
    }
    if (who.empty()) { return result; }
    result.closed_waits = book.close_waits(world);
    for (auto const &r : result.closed_waits) { who.push_back(r.agent); }
  }
  std::sort(who.begin(), who.end());
  who.erase(std::unique(who.begin(), who.end()), who.end());

  for (int agent : who) {
    DecisionPoint dp;
    dp.agent = agent;
    dp.index = decision_counter++;
    dp.observation = encode_commander_obs(world, book.orders(), agent, layout);
    dp.action = policy(dp.observation);
    dp.reward = reward.take();
    book.assign(world, agent, dp.action);
    result.decisions.push_back(std::move(dp));
  }
  return result;
}

} // namespace roomclear
