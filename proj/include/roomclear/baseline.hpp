#pragma once

#include "roomclear/engine.hpp"
#include "roomclear/learn/tabular.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace roomclear {

/// k^n, throwing if it does not fit in an int.
int joint_action_count(int per_agent, int agents);

/// Mixed-radix id with agent 0 as the most significant digit.
int joint_encode(std::span<int const> actions, int per_agent);
std::vector<int> joint_decode(int id, int per_agent, int agents);

/// Sorted living-agent cells (dead agents as (-1,-1)) followed by the clearance vector.
StateKey joint_state_key(WorldState const &world);

/// Agent ids ordered like the cells in joint_state_key. Joint action digit i
/// belongs to the agent at position i of this order, so two states that differ
/// only by a relabelling of agents share both key and action meaning.
std::vector<int> joint_canonical_order(WorldState const &world);

/// Four moves when the scenario has no enemies, all six primitives otherwise.
std::vector<PrimitiveAction> joint_action_set(Scenario const &scenario);

class JointActionLearner
{
public:
  JointActionLearner(int agents, std::vector<PrimitiveAction> action_set, TabularParams params);

  int agents() const { return agents_; }
  int joint_actions() const { return learner_.table().actions(); }
  std::vector<PrimitiveAction> const &action_set() const { return action_set_; }

  int act(StateKey const &key, std::mt19937_64 &rng, bool explore);
  /// Per-agent primitives (indexed by agent id) for a joint id chosen in `world`.
  std::vector<PrimitiveAction> decode(int joint, WorldState const &world) const;
  void push(KeyTransition const &t) { learner_.push(t); }

  TabularLearner       &learner() { return learner_; }
  TabularLearner const &learner() const { return learner_; }

private:
  int                          agents_;
  std::vector<PrimitiveAction> action_set_;
  TabularLearner               learner_;
  ActionMask                   mask_;
};

} // namespace roomclear
