#pragma once

#include "roomclear/learn/types.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <unordered_map>
#include <vector>

namespace roomclear {

/// Argmax over the valid entries; the lowest id wins ties.
int greedy_action(Eigen::Ref<Eigen::VectorXd const> values, ActionMask const &mask);

/// Uniform over the valid actions with probability `epsilon`, greedy otherwise.
int epsilon_greedy(Eigen::Ref<Eigen::VectorXd const> values, ActionMask const &mask, double epsilon,
                   std::mt19937_64 &rng);

/// Linear decay from `start` to `end` over `decay_steps` selections, constant afterwards.
struct EpsilonSchedule
{
  double        start = 1.0;
  double        end = 0.05;
  std::int64_t  decay_steps = 50000;

  double at(std::int64_t step) const
  {
    if (decay_steps <= 0 || step >= decay_steps) { return end; }
    if (step <= 0) { return start; }
    double const frac = static_cast<double>(step) / static_cast<double>(decay_steps);
    return start + (end - start) * frac;
  }
};

struct KeyTransition
{
  StateKey   s;
  int        a = 0;
  double     r = 0.0;
  StateKey   s_next;
  bool       done = false;
  ActionMask next_mask;
};

class QTable
{
public:
  explicit QTable(int actions = 0) : actions_(actions) {}

  int actions() const { return actions_; }
  std::size_t states() const { return table_.size(); }

  /// All action values of a state; zeros if it was never updated.
  Eigen::VectorXd values(StateKey const &key) const;
  double value(StateKey const &key, int action) const;
  int visits(StateKey const &key, int action) const;

  /// Writes a value and bumps the visit count of the pair.
  void set(StateKey const &key, int action, double value);

  struct Triple
  {
    StateKey key;
    int      action = 0;
    double   value = 0.0;
    int      visits = 0;
  };
  /// Loads a stored pair verbatim (checkpoint restore).
  void restore(StateKey const &key, int action, double value, int visits);

  /// Visited pairs, sorted by (key, action).
  std::vector<Triple> triples() const;
  void clear() { table_.clear(); }

private:
  struct Entry
  {
    Eigen::VectorXd q;
    Eigen::VectorXi n;
  };
  int                                                  actions_;
  std::unordered_map<StateKey, Entry, StateKeyHash>    table_;
};

/// Standard temporal-difference move toward r + γ(1-d) max_{a'} Q(s',a').
/// Returns the TD error before the update.
double q_update(QTable &table, KeyTransition const &t, double alpha, double gamma);

struct TabularParams
{
  double          alpha = 0.1;
  double          gamma = 0.99;
  EpsilonSchedule epsilon{};
};

/// Q-table plus its behaviour policy. Every pushed transition is applied at once.
class TabularLearner
{
public:
  TabularLearner(int actions, TabularParams params) : table_(actions), params_(params) {}

  int act(StateKey const &key, ActionMask const &mask, std::mt19937_64 &rng, bool explore);
  void push(KeyTransition const &t);

  QTable       &table() { return table_; }
  QTable const &table() const { return table_; }
  TabularParams const &params() const { return params_; }
  std::int64_t pushes() const { return pushes_; }
  std::int64_t train_steps() const { return train_steps_; }
  std::int64_t selections() const { return selections_; }
  void set_selections(std::int64_t n) { selections_ = n; }

private:
  QTable        table_;
  TabularParams params_;
  std::int64_t  pushes_ = 0;
  std::int64_t  train_steps_ = 0;
  std::int64_t  selections_ = 0;
};

} // namespace roomclear
