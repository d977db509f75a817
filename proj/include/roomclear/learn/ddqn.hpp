#pragma once

#include "roomclear/learn/mlp.hpp"
#include "roomclear/learn/replay.hpp"
#include "roomclear/learn/tabular.hpp"
#include "roomclear/learn/types.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace roomclear {

using Net = Mlp<double>;

struct VectorTransition
{
  Eigen::VectorXd s;
  int             a = 0;
  double          r = 0.0;
  Eigen::VectorXd s_next;
  bool            done = false;
  ActionMask      next_mask;
};

/// Online net picks the bootstrap action among the valid ones, target net scores it.
Eigen::VectorXd ddqn_targets(std::vector<VectorTransition const *> const &batch, Net const &online, Net const &target,
                             double gamma);

struct DdqnParams
{
  double           gamma = 0.99;
  double           lr = 1e-3;
  int              batch = 32;
  std::size_t      capacity = 50000;
  int              target_period = 500;
  double           clip_norm = 10.0;
  std::vector<int> hidden{64, 64};
  EpsilonSchedule  epsilon{};
};

class DdqnLearner
{
public:
  DdqnLearner(int inputs, int actions, DdqnParams params, std::mt19937_64 &rng);

  int act(Eigen::VectorXd const &s, ActionMask const &mask, std::mt19937_64 &rng, bool explore);
  Eigen::VectorXd values(Eigen::VectorXd const &s) const;

  /// Adds a transition and runs one training step.
  void push(VectorTransition t, std::mt19937_64 &rng);

  /// One SGD step on the mean squared TD error; returns the loss.
  double train_step(std::vector<VectorTransition const *> const &batch);

  Net       &online() { return online_; }
  Net const &online() const { return online_; }
  Net       &target() { return target_; }
  Net const &target() const { return target_; }
  void sync_target() { target_ = online_; }

  DdqnParams const &params() const { return params_; }
  ReplayBuffer<VectorTransition> const &buffer() const { return buffer_; }
  std::int64_t pushes() const { return pushes_; }
  std::int64_t train_steps() const { return train_steps_; }
  std::int64_t selections() const { return selections_; }
  void set_counters(std::int64_t selections, std::int64_t train_steps)
  {
    selections_ = selections;
    train_steps_ = train_steps;
  }
  std::optional<double> last_loss() const { return last_loss_; }

private:
  DdqnParams                     params_;
  Net                            online_;
  Net                            target_;
  ReplayBuffer<VectorTransition> buffer_;
  std::int64_t                   pushes_ = 0;
  std::int64_t                   train_steps_ = 0;
  std::int64_t                   selections_ = 0;
  std::optional<double>          last_loss_;
};

} // namespace roomclear
