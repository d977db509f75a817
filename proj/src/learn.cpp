#include "roomclear/learn/ddqn.hpp"
#include "roomclear/learn/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace roomclear {

int greedy_action(Eigen::Ref<Eigen::VectorXd const> values, ActionMask const &mask)
{
  if (mask.size() != values.size()) { throw std::invalid_argument("greedy_action: mask size mismatch"); }
  int    best = -1;
  double best_value = -std::numeric_limits<double>::infinity();
  for (Eigen::Index a = 0; a < values.size(); ++a) {
    if (!mask(a)) { continue; }
    if (best < 0 || values(a) > best_value) {
      best = static_cast<int>(a);
      best_value = values(a);
    }
  }
  if (best < 0) { throw std::invalid_argument("greedy_action: no valid action"); }
  return best;
}

int epsilon_greedy(Eigen::Ref<Eigen::VectorXd const> values, ActionMask const &mask, double epsilon,
                   std::mt19937_64 &rng)
{
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (epsilon > 0.0 && coin(rng) < epsilon) {
    int const valid = static_cast<int>(mask.count());
    if (valid == 0) { throw std::invalid_argument("epsilon_greedy: no valid action"); }
    std::uniform_int_distribution<int> pick(0, valid - 1);
    int                                k = pick(rng);
    for (Eigen::Index a = 0; a < mask.size(); ++a) {
      if (mask(a) && k-- == 0) { return static_cast<int>(a); }
    }
  }
  return greedy_action(values, mask);
}

// QTable ------------------------------------------------------------------------

Eigen::VectorXd QTable::values(StateKey const &key) const
{
  auto it = table_.find(key);
  return it == table_.end() ? Eigen::VectorXd::Zero(actions_) : it->second.q;
}

double QTable::value(StateKey const &key, int action) const
{
  auto it = table_.find(key);
  return it == table_.end() ? 0.0 : it->second.q(action);
}

int QTable::visits(StateKey const &key, int action) const
{
  auto it = table_.find(key);
  return it == table_.end() ? 0 : it->second.n(action);
}

void QTable::set(StateKey const &key, int action, double value)
{
  if (action < 0 || action >= actions_) { throw std::out_of_range("QTable: action out of range"); }
  auto [it, fresh] = table_.try_emplace(key);
  if (fresh) {
    it->second.q = Eigen::VectorXd::Zero(actions_);
    it->second.n = Eigen::VectorXi::Zero(actions_);
  }
  it->second.q(action) = value;
  it->second.n(action) += 1;
}

void QTable::restore(StateKey const &key, int action, double value, int visits)
{
  if (action < 0 || action >= actions_) { throw std::out_of_range("QTable: action out of range"); }
  auto [it, fresh] = table_.try_emplace(key);
  if (fresh) {
    it->second.q = Eigen::VectorXd::Zero(actions_);
    it->second.n = Eigen::VectorXi::Zero(actions_);
  }
  it->second.q(action) = value;
  it->second.n(action) = visits;
}

std::vector<QTable::Triple> QTable::triples() const
{
  std::vector<Triple> out;
  for (auto const &[key, entry] : table_) {
    for (int a = 0; a < actions_; ++a) {
      if (entry.n(a) > 0) { out.push_back({key, a, entry.q(a), entry.n(a)}); }
    }
  }
  std::sort(out.begin(), out.end(), [](Triple const &x, Triple const &y) {
    return x.key != y.key ? x.key < y.key : x.action < y.action;
  });
  return out;
}

double q_update(QTable &table, KeyTransition const &t, double alpha, double gamma)
{
  double bootstrap = 0.0;
  if (!t.done) {
    Eigen::VectorXd const next = table.values(t.s_next);
    ActionMask const      mask = t.next_mask.size() == next.size() ? t.next_mask : all_actions(table.actions());
    bootstrap = next(greedy_action(next, mask));
  }
  double const q = table.value(t.s, t.a);
  double const td = t.r + gamma * bootstrap - q;
  table.set(t.s, t.a, q + alpha * td);
  return td;
}

int TabularLearner::act(StateKey const &key, ActionMask const &mask, std::mt19937_64 &rng, bool explore)
{
  Eigen::VectorXd const q = table_.values(key);
  if (!explore) { return greedy_action(q, mask); }
  return epsilon_greedy(q, mask, params_.epsilon.at(selections_++), rng);
}

void TabularLearner::push(KeyTransition const &t)
{
  ++pushes_;
  q_update(table_, t, params_.alpha, params_.gamma);
  ++train_steps_;
}

// DDQN --------------------------------------------------------------------------

namespace {

Eigen::MatrixXd stack(std::vector<VectorTransition const *> const &batch, bool next)
{
  Eigen::Index const rows = (next ? batch.front()->s_next : batch.front()->s).size();
  Eigen::MatrixXd    x(rows, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    x.col(static_cast<Eigen::Index>(i)) = next ? batch[i]->s_next : batch[i]->s;
  }
  return x;
}

} // namespace

Eigen::VectorXd ddqn_targets(std::vector<VectorTransition const *> const &batch, Net const &online, Net const &target,
                             double gamma)
{
  if (batch.empty()) { throw std::invalid_argument("ddqn_targets: empty batch"); }
  Eigen::MatrixXd const next = stack(batch, true);
  Eigen::MatrixXd const q_online = online.forward(next);
  Eigen::MatrixXd const q_target = target.forward(next);
  Eigen::VectorXd       y(static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto const  &t = *batch[i];
    auto const   col = static_cast<Eigen::Index>(i);
    double       bootstrap = 0.0;
    if (!t.done) {
      ActionMask const mask = t.next_mask.size() == q_online.rows() ? t.next_mask : all_actions(q_online.rows());
      bootstrap = q_target(greedy_action(q_online.col(col), mask), col);
    }
    y(col) = t.r + gamma * bootstrap;
  }
  return y;
}

DdqnLearner::DdqnLearner(int inputs, int actions, DdqnParams params, std::mt19937_64 &rng)
  : params_(std::move(params))
  , buffer_(params_.capacity)
{
  std::vector<int> dims{inputs};
  dims.insert(dims.end(), params_.hidden.begin(), params_.hidden.end());
  dims.push_back(actions);
  online_ = Net::he_init(dims, rng);
  target_ = online_;
}

Eigen::VectorXd DdqnLearner::values(Eigen::VectorXd const &s) const { return online_.forward(s); }

int DdqnLearner::act(Eigen::VectorXd const &s, ActionMask const &mask, std::mt19937_64 &rng, bool explore)
{
  Eigen::VectorXd const q = values(s);
  if (!explore) { return greedy_action(q, mask); }
  return epsilon_greedy(q, mask, params_.epsilon.at(selections_++), rng);
}

void DdqnLearner::push(VectorTransition t, std::mt19937_64 &rng)
{
  buffer_.push(std::move(t));
  ++pushes_;
  // One update per push; until the buffer holds a full batch the batch is
  // as large as the buffer.
  auto const n = std::min(buffer_.size(), static_cast<std::size_t>(params_.batch));
  last_loss_ = train_step(buffer_.sample(n, rng));
}

double DdqnLearner::train_step(std::vector<VectorTransition const *> const &batch)
{
  if (batch.empty()) { throw std::invalid_argument("train_step: empty batch"); }
  Eigen::VectorXd const y = ddqn_targets(batch, online_, target_, params_.gamma);
  Eigen::MatrixXd const x = stack(batch, false);
  Eigen::MatrixXd const q = online_.forward(x);

  auto const      n = static_cast<double>(batch.size());
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(q.rows(), q.cols());
  double          loss = 0.0;
  for (Eigen::Index i = 0; i < q.cols(); ++i) {
    int const    a = batch[static_cast<std::size_t>(i)]->a;
    double const err = q(a, i) - y(i);
    loss += err * err / n;
    grad(a, i) = 2.0 * err / n;
  }
  auto         g = online_.backward(x, grad);
  double const norm = std::sqrt(g.squared_norm());
  if (norm > params_.clip_norm) { g *= params_.clip_norm / norm; }
  online_.apply(g, params_.lr);

  ++train_steps_;
  if (params_.target_period > 0 && train_steps_ % params_.target_period == 0) { sync_target(); }
  return loss;
}

} // namespace roomclear
