#pragma once

#include "roomclear/floorplan.hpp"

#include <Eigen/Core>

#include <span>
#include <stdexcept>

namespace roomclear {

/// 0/1 per room.
using BinaryVector = Eigen::VectorXi;

struct ClearanceState
{
  BinaryVector u; ///< 1 = unclear
  BinaryVector v; ///< 1 = no living agent in the room

  int unclear_count() const { return static_cast<int>(u.sum()); }
  int clear_count() const { return static_cast<int>(u.size() - u.sum()); }
  bool all_clear() const { return u.sum() == 0; }

  friend bool operator==(ClearanceState const &a, ClearanceState const &b) { return a.u == b.u && a.v == b.v; }
};

struct Propagation
{
  BinaryVector u;
  int          iterations = 0; ///< applications of the update rule, including the final unchanged one
};

/// Spreads the unclear signal over the room graph until it stops changing:
///
///   u <- min(1, ((A + I) u) .* v)
///
/// The identity term keeps an unoccupied unclear room unclear. Seeds standing in
/// occupied rooms are dropped before the first update, so the result is exactly
/// the set of unoccupied rooms reachable from an unoccupied seed through
/// unoccupied rooms. Converges in at most m updates.
template <typename DerivedA, typename DerivedU, typename DerivedV>
Propagation propagate_unclear(Eigen::MatrixBase<DerivedA> const &adjacency,
                              Eigen::MatrixBase<DerivedU> const &seed,
                              Eigen::MatrixBase<DerivedV> const &unoccupied)
{
  auto const m = adjacency.rows();
  if (adjacency.cols() != m || seed.size() != m || unoccupied.size() != m) {
    throw std::invalid_argument("propagate_unclear: dimension mismatch");
  }
  Eigen::MatrixXi const spread = adjacency.template cast<int>() + Eigen::MatrixXi::Identity(m, m);
  BinaryVector const    v = unoccupied.template cast<int>();

  Propagation out;
  out.u = seed.template cast<int>().cwiseProduct(v);
  for (;;) {
    BinaryVector next = (spread * out.u).cwiseProduct(v).cwiseMin(1);
    ++out.iterations;
    if (next == out.u) { break; }
    out.u = std::move(next);
  }
  return out;
}

/// v_i = 0 iff at least one of `agent_rooms` equals i.
BinaryVector occupancy_from_rooms(int room_count, std::span<int const> agent_rooms);

/// One end-of-step clearance update.
///
/// Rooms that were unclear and are still unoccupied stay seeded, every room with
/// a living enemy is seeded, agent-held rooms without enemies are cleared, and
/// the seed is propagated. A room holding both an agent and an enemy is unclear
/// but does not spread the signal.
ClearanceState recompute_clearance(AdjacencyMatrix const &adjacency,
                                   BinaryVector const    &previous_u,
                                   std::span<int const>   agent_rooms,
                                   std::span<int const>   enemy_rooms);

/// Episode start: every room is treated as previously unclear.
ClearanceState initial_clearance(AdjacencyMatrix const &adjacency,
                                 std::span<int const>   agent_rooms,
                                 std::span<int const>   enemy_rooms);

} // namespace roomclear
