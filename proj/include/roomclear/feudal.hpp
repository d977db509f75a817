#pragma once

#include "roomclear/engine.hpp"
#include "roomclear/learn/types.hpp"

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <vector>

namespace roomclear {

// Precomputed per-scenario geometry ------------------------------------------

struct RoomFrame
{
  Coord            origin;     ///< top-left of the frame (bounding box grown by one cell)
  std::vector<int> door_slots; ///< door ids, slot k -> door_slots[k]
  std::vector<int> distance;   ///< in-room distance table, see FeudalLayout::door_distance
  int              diameter = 1;
  int              deadline_budget = 20;
};

/// Scenario-wide constants shared by the command layer and the observation encoders.
class FeudalLayout
{
public:
  explicit FeudalLayout(Scenario const &scenario);

  FloorPlan const &floorplan() const { return *plan_; }
  int rooms() const { return static_cast<int>(frames_.size()); }
  int doors() const { return static_cast<int>(plan_->doors.size()); }
  int agents() const { return agents_; }
  bool order_sync() const { return order_sync_; }
  /// Frame side length shared by every room (largest room span + 2).
  int r_max() const { return r_max_; }
  /// Largest door count of any room.
  int d_max() const { return d_max_; }
  /// Enemy slots in the agent observation.
  int e_max() const { return e_max_; }
  /// Commander actions: one per door slot, then wait.
  int order_slots() const { return d_max_ + 1; }
  int wait_slot() const { return d_max_; }

  RoomFrame const &frame(int room) const { return frames_.at(room); }
  /// Floor cell of `room` next to `door`.
  Coord inner_cell(int door, int room) const;
  /// Step from the door cell into the room on the other side of `room`.
  PrimitiveAction exit_action(int door, int room) const;
  /// In-room walking distance from `cell` to the door in `slot` of `room`, -1 if unreachable.
  int door_distance(int room, int slot, Coord cell) const;
  /// Frame-relative coordinates.
  Coord to_frame(int room, Coord cell) const;

  std::size_t agent_observation_size() const;
  std::size_t commander_observation_size() const;

private:
  FloorPlan const       *plan_;
  std::vector<RoomFrame> frames_;
  std::vector<Coord>     inner_;  // door * 2 + side
  std::vector<PrimitiveAction> exit_;
  int                    agents_ = 0;
  int                    r_max_ = 0;
  int                    d_max_ = 0;
  int                    e_max_ = 0;
  bool                   order_sync_ = false;
};

// Orders ----------------------------------------------------------------------

enum class OrderKind : std::uint8_t
{
  through_door,
  wait
};

struct Order
{
  OrderKind kind = OrderKind::wait;
  int       slot = 0;  ///< commander action that produced the order
  int       door = -1; ///< door id for through_door
  int       origin_room = -1;
  int       issued_at = 0;
  int       deadline = 0;
  /// Walk through the door (always true outside the order-sync ruleset). Under
  /// order-sync a door order only walks up to the door unless the agent was
  /// already next to it when the order was issued.
  bool pass_through = true;

  friend bool operator==(Order const &, Order const &) = default;
};

enum class OrderOutcome : std::uint8_t
{
  in_progress,
  completed,
  failed_wrong_door,
  failed_timeout
};

std::string_view to_string(OrderOutcome o);

/// Slot k is valid iff the agent's room has a k-th door; wait is always valid.
ActionMask order_space(WorldState const &world, int agent, FeudalLayout const &layout);

/// Builds the order for commander action `slot`.
Order make_order(WorldState const &world, int agent, int slot, FeudalLayout const &layout);

OrderOutcome order_status(AgentState const &agent, Order const &order, WorldState const &world,
                          FeudalLayout const &layout);

/// Outcome of a wait order cut short because new orders are being handed out.
OrderOutcome close_wait_order(AgentState const &agent, Order const &order, WorldState const &world);

/// +10 completed, -10 wrong door, 0 otherwise.
double agent_reward(OrderOutcome outcome);

/// Sums environment reward between commander decisions. The first decision of
/// a timestep takes the running sum; later decisions on the same step get 0.
class CommanderRewardAccumulator
{
public:
  void add(double env_reward) { pending_ += env_reward; }
  double take()
  {
    double const r = pending_;
    pending_ = 0.0;
    return r;
  }
  double pending() const { return pending_; }

private:
  double pending_ = 0.0;
};

// Observations ----------------------------------------------------------------

struct SlotCoord
{
  Coord rel;
  bool  valid = false;
};

struct AgentObservation
{
  int                     room = -1;
  Coord                   self;                ///< frame-relative
  std::vector<std::uint8_t> room_grid;         ///< r_max * r_max, row-major, 1 = walkable
  std::vector<SlotCoord>  doors;               ///< d_max
  std::vector<PrimitiveAction> door_exits;     ///< d_max, step that leaves the room through each door
  std::vector<SlotCoord>  enemies;             ///< e_max, visible living enemies in the room
  int                     order_slot = 0;      ///< d_max = wait
  bool                    pass_through = true;
  bool                    order_sync = false;
  int                     r_max = 0;

  Eigen::VectorXd features() const;
  StateKey        key() const;
};

AgentObservation encode_agent_obs(WorldState const &world, int agent, Order const &order, FeudalLayout const &layout);

struct CommanderObservation
{
  int             agent = -1;
  Eigen::VectorXd features;
  StateKey        key;
  ActionMask      mask;
};

/// `orders[i]` is agent i's current order (empty while it is waiting for one).
CommanderObservation encode_commander_obs(WorldState const                       &world,
                                          std::vector<std::optional<Order>> const &orders,
                                          int                                     agent,
                                          FeudalLayout const                     &layout);

/// Rule-based low-level agent: shoot a visible enemy, otherwise walk the
/// shortest in-room path to the ordered door (and through it when required).
PrimitiveAction scripted_agent_policy(AgentObservation const &obs);

// Command layer -----------------------------------------------------------------

struct Resolution
{
  int          agent = -1;
  Order        order;
  OrderOutcome outcome = OrderOutcome::in_progress;
  bool         agent_died = false;
};

struct DecisionPoint
{
  int                  agent = -1;
  int                  index = 0; ///< running decision count in the episode
  CommanderObservation observation;
  int                  action = 0;
  double               reward = 0.0; ///< commander reward accumulated since the previous decision
};

using CommanderPolicy = std::function<int(CommanderObservation const &)>;

/// Order bookkeeping for one episode.
class OrderBook
{
public:
  OrderBook(FeudalLayout const &layout, int agents);

  std::optional<Order> const &order(int agent) const { return orders_.at(agent); }
  std::vector<std::optional<Order>> const &orders() const { return orders_; }
  int issued() const { return issued_; }

  void assign(WorldState const &world, int agent, int slot);

  /// Resolves active orders after a step; finished orders are removed. Orders of
  /// agents that died are dropped with `agent_died` set and outcome failed_timeout.
  std::vector<Resolution> evaluate(WorldState const &world);

  /// Ends every live wait order (used when new orders go out).
  std::vector<Resolution> close_waits(WorldState const &world);

private:
  FeudalLayout const               *layout_;
  std::vector<std::optional<Order>> orders_;
  int                               issued_ = 0;
};

struct IssueResult
{
  std::vector<DecisionPoint> decisions;
  std::vector<Resolution>    closed_waits;
};

/// Hands out new orders: at episode start to every living agent, otherwise to
/// the agents in `resolved` plus every agent currently holding a wait order,
/// provided at least one order resolved. Decisions are made in ascending
/// agent id; the accumulated reward is attached to the first one only.
IssueResult issue_orders(WorldState const              &world,
                         OrderBook                     &book,
                         std::vector<Resolution> const &resolved,
                         bool                           episode_start,
                         CommanderPolicy const         &policy,
                         CommanderRewardAccumulator    &reward,
                         int                           &decision_counter,
                         FeudalLayout const            &layout);

} // namespace roomclear
