#pragma once

#include "roomclear/engine.hpp"
#include "roomclear/floorplan.hpp"
#include "roomclear/learn/mlp.hpp"

#include <Eigen/Core>

#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using roomclear::Coord;
using roomclear::Grid;

/// Unclear rooms by breadth-first search: start from every seed in an
/// unoccupied room and expand into unoccupied neighbours only.
Eigen::VectorXi propagate_bfs(Eigen::MatrixXi const &a, Eigen::VectorXi const &seed, Eigen::VectorXi const &v);

/// Room partition of the floor cells by union-find over 4-neighbours.
std::set<std::set<std::pair<int, int>>> rooms_union_find(Grid const &grid);

/// True iff the segment between the two cell centres misses every closed wall
/// square. Uses exact rational arithmetic on doubled coordinates.
bool line_of_sight_exact(Grid const &grid, Coord a, Coord b);

/// Optimal Q-values of the 5-state chain by value iteration.
/// Actions: 0 = left, 1 = right. Right from the last state ends the episode with reward 1.
Eigen::MatrixXd chain_q_star(double gamma);

struct ChainStep
{
  int    next;
  double reward;
  bool   done;
};
ChainStep chain_step(int state, int action);
inline constexpr int kChainStates = 5;

/// Pearson statistic against a uniform expectation.
double chi_square_uniform(std::vector<int> const &counts);
/// Mean plus three standard deviations of the chi-square distribution with k-1 dof.
double chi_square_3sigma(std::size_t categories);

/// Central-difference gradient of sum(G .* net(x)) with respect to every parameter.
Eigen::VectorXd numeric_gradient(roomclear::Mlp<double> net, Eigen::MatrixXd const &x, Eigen::MatrixXd const &g,
                                 double h);

/// Random walled grid with rooms separated by single-cell doors; always a valid plan.
Grid random_building(std::mt19937_64 &rng, int rooms_x, int rooms_y, int room_w, int room_h);

std::string read_file(std::string const &path);

std::shared_ptr<roomclear::Scenario const> scenario_from(std::string_view text);
std::shared_ptr<roomclear::Scenario const> fixture(std::string const &name);
std::shared_ptr<roomclear::Scenario const> bundled(std::string const &name);

} // namespace oracle
