#include "roomclear/clearance.hpp"

namespace roomclear {

BinaryVector occupancy_from_rooms(int room_count, std::span<int const> agent_rooms)
{
  BinaryVector v = BinaryVector::Ones(room_count);
  for (int r : agent_rooms) {
    if (r >= 0 && r < room_count) { v(r) = 0; }
  }
  return v;
}

ClearanceState recompute_clearance(AdjacencyMatrix const &adjacency,
                                   BinaryVector const    &previous_u,
                                   std::span<int const>   agent_rooms,
                                   std::span<int const>   enemy_rooms)
{
  auto const   m = static_cast<int>(adjacency.rows());
  BinaryVector hostile = BinaryVector::Zero(m);
  for (int r : enemy_rooms) {
    if (r >= 0 && r < m) { hostile(r) = 1; }
  }

  ClearanceState state;
  state.v = occupancy_from_rooms(m, agent_rooms);
  BinaryVector const seed = previous_u.cwiseProduct(state.v).cwiseMax(hostile);
  state.u = propagate_unclear(adjacency, seed, state.v).u;
  // contested rooms: occupied, but an enemy is still alive inside
  state.u = state.u.cwiseMax(hostile.cwiseProduct(BinaryVector::Ones(m) - state.v));
  return state;
}

ClearanceState initial_clearance(AdjacencyMatrix const &adjacency,
                                 std::span<int const>   agent_rooms,
                                 std::span<int const>   enemy_rooms)
{
  return recompute_clearance(adjacency, BinaryVector::Ones(adjacency.rows()), agent_rooms, enemy_rooms);
}

} // namespace roomclear
