#include "roomclear/baseline.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace roomclear {

int joint_action_count(int per_agent, int agents)
{
  if (per_agent <= 0 || agents <= 0) { throw std::invalid_argument("joint_action_count: sizes must be positive"); }
  std::int64_t n = 1;
  for (int i = 0; i < agents; ++i) {
    n *= per_agent;
    if (n > std::numeric_limits<int>::max()) { throw std::overflow_error("joint_action_count: too many joint actions"); }
  }
  return static_cast<int>(n);
}

int joint_encode(std::span<int const> actions, int per_agent)
{
  int id = 0;
  for (int a : actions) {
    if (a < 0 || a >= per_agent) { throw std::out_of_range("joint_encode: action out of range"); }
    id = id * per_agent + a;
  }
  return id;
}

std::vector<int> joint_decode(int id, int per_agent, int agents)
{
  if (id < 0 || id >= joint_action_count(per_agent, agents)) { throw std::out_of_range("joint_decode: id out of range"); }
  std::vector<int> out(static_cast<std::size_t>(agents));
  for (int i = agents - 1; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = id % per_agent;
    id /= per_agent;
  }
  return out;
}

namespace {

Coord key_cell(AgentState const &a) { return a.alive ? a.cell : Coord{-1, -1}; }

} // namespace

std::vector<int> joint_canonical_order(WorldState const &world)
{
  std::vector<int> order(world.agents.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return key_cell(world.agents[a]) < key_cell(world.agents[b]);
  });
  return order;
}

StateKey joint_state_key(WorldState const &world)
{
  StateKey key;
  for (int i : joint_canonical_order(world)) {
    Coord const c = key_cell(world.agents[i]);
    key.push_back(c.x);
    key.push_back(c.y);
  }
  for (Eigen::Index r = 0; r < world.clearance.u.size(); ++r) { key.push_back(world.clearance.u(r)); }
  return key;
}

std::vector<PrimitiveAction> joint_action_set(Scenario const &scenario)
{
  if (scenario.enemies.empty()) {
    return {PrimitiveAction::move_north, PrimitiveAction::move_east, PrimitiveAction::move_south,
            PrimitiveAction::move_west};
  }
  return {PrimitiveAction::wait,      PrimitiveAction::shoot,     PrimitiveAction::move_north,
          PrimitiveAction::move_south, PrimitiveAction::move_east, PrimitiveAction::move_west};
}

JointActionLearner::JointActionLearner(int agents, std::vector<PrimitiveAction> action_set, TabularParams params)
  : agents_(agents)
  , action_set_(std::move(action_set))
  , learner_(joint_action_count(static_cast<int>(action_set_.size()), agents), params)
  , mask_(all_actions(learner_.table().actions()))
{
}

int JointActionLearner::act(StateKey const &key, std::mt19937_64 &rng, bool explore)
{
  return learner_.act(key, mask_, rng, explore);
}

std::vector<PrimitiveAction> JointActionLearner::decode(int joint, WorldState const &world) const
{
  auto const digits = joint_decode(joint, static_cast<int>(action_set_.size()), agents_);
  auto const order = joint_canonical_order(world);
  std::vector<PrimitiveAction> out(static_cast<std::size_t>(agents_), PrimitiveAction::wait);
  for (std::size_t slot = 0; slot < order.size(); ++slot) {
    out[static_cast<std::size_t>(order[slot])] = action_set_[static_cast<std::size_t>(digits[slot])];
  }
  return out;
}

} // namespace roomclear
