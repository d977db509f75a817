#include "oracles.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <queue>
#include <sstream>

namespace oracle {

Eigen::VectorXi propagate_bfs(Eigen::MatrixXi const &a, Eigen::VectorXi const &seed, Eigen::VectorXi const &v)
{
  auto const      m = a.rows();
  Eigen::VectorXi u = Eigen::VectorXi::Zero(m);
  std::queue<Eigen::Index> q;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (seed(i) && v(i)) {
      u(i) = 1;
      q.push(i);
    }
  }
  while (!q.empty()) {
    auto const i = q.front();
    q.pop();
    for (Eigen::Index j = 0; j < m; ++j) {
      if (a(i, j) && v(j) && !u(j)) {
        u(j) = 1;
        q.push(j);
      }
    }
  }
  return u;
}

namespace {

struct UnionFind
{
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x)
  {
    while (parent[x] != x) { x = parent[x] = parent[parent[x]]; }
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

} // namespace

std::set<std::set<std::pair<int, int>>> rooms_union_find(Grid const &grid)
{
  int const w = grid.width();
  int const h = grid.height();
  UnionFind uf(w * h);
  auto      floor = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < w && y < h && grid.at({x, y}) == roomclear::CellKind::floor;
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!floor(x, y)) { continue; }
      if (floor(x + 1, y)) { uf.unite(y * w + x, y * w + x + 1); }
      if (floor(x, y + 1)) { uf.unite(y * w + x, (y + 1) * w + x); }
    }
  }
  std::map<int, std::set<std::pair<int, int>>> groups;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (floor(x, y)) { groups[uf.find(y * w + x)].insert({x, y}); }
    }
  }
  std::set<std::set<std::pair<int, int>>> out;
  for (auto &[root, cells] : groups) { out.insert(std::move(cells)); }
  return out;
}

namespace {

/// p/q with q > 0.
struct Frac
{
  long long p;
  long long q;
};
bool le(Frac a, Frac b) { return a.p * b.q <= b.p * a.q; }
Frac mk(long long p, long long q) { return q < 0 ? Frac{-p, -q} : Frac{p, q}; }

/// Parameter interval of the segment inside the closed slab lo <= a + t d <= hi.
bool slab(long long a, long long d, long long lo, long long hi, Frac &t0, Frac &t1)
{
  if (d == 0) { return a >= lo && a <= hi; }
  Frac e0 = mk(lo - a, d);
  Frac e1 = mk(hi - a, d);
  if (!le(e0, e1)) { std::swap(e0, e1); }
  if (le(t0, e0)) { t0 = e0; }
  if (le(e1, t1)) { t1 = e1; }
  return le(t0, t1);
}

} // namespace

bool line_of_sight_exact(Grid const &grid, Coord a, Coord b)
{
  // Doubled coordinates: centre of cell c is (2c.x, 2c.y), its square spans +-1.
  long long const ax = 2LL * a.x, ay = 2LL * a.y;
  long long const dx = 2LL * (b.x - a.x), dy = 2LL * (b.y - a.y);
  for (int y = std::min(a.y, b.y); y <= std::max(a.y, b.y); ++y) {
    for (int x = std::min(a.x, b.x); x <= std::max(a.x, b.x); ++x) {
      if (grid.at({x, y}) != roomclear::CellKind::wall) { continue; }
      Frac t0{0, 1};
      Frac t1{1, 1};
      if (slab(ax, dx, 2LL * x - 1, 2LL * x + 1, t0, t1) && slab(ay, dy, 2LL * y - 1, 2LL * y + 1, t0, t1)) {
        return false;
      }
    }
  }
  return true;
}

ChainStep chain_step(int state, int action)
{
  if (action == 1) {
    if (state == kChainStates - 1) { return {state, 1.0, true}; }
    return {state + 1, 0.0, false};
  }
  return {std::max(state - 1, 0), 0.0, false};
}

Eigen::MatrixXd chain_q_star(double gamma)
{
  Eigen::VectorXd v = Eigen::VectorXd::Zero(kChainStates);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(kChainStates, 2);
  for (int sweep = 0; sweep < 10000; ++sweep) {
    for (int s = 0; s < kChainStates; ++s) {
      for (int a = 0; a < 2; ++a) {
        auto const t = chain_step(s, a);
        q(s, a) = t.reward + (t.done ? 0.0 : gamma * v(t.next));
      }
    }
    Eigen::VectorXd next = q.rowwise().maxCoeff();
    if ((next - v).cwiseAbs().maxCoeff() == 0.0) { break; }
    v = next;
  }
  return q;
}

double chi_square_uniform(std::vector<int> const &counts)
{
  double const total = std::accumulate(counts.begin(), counts.end(), 0.0);
  double const expected = total / static_cast<double>(counts.size());
  double       stat = 0.0;
  for (int c : counts) { stat += (c - expected) * (c - expected) / expected; }
  return stat;
}

double chi_square_3sigma(std::size_t categories)
{
  double const dof = static_cast<double>(categories) - 1.0;
  return dof + 3.0 * std::sqrt(2.0 * dof);
}

Eigen::VectorXd numeric_gradient(roomclear::Mlp<double> net, Eigen::MatrixXd const &x, Eigen::MatrixXd const &g,
                                 double h)
{
  Eigen::VectorXd theta = net.flatten();
  Eigen::VectorXd grad(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    double const keep = theta(i);
    theta(i) = keep + h;
    net.unflatten(theta);
    double const up = g.cwiseProduct(net.forward(x)).sum();
    theta(i) = keep - h;
    net.unflatten(theta);
    double const down = g.cwiseProduct(net.forward(x)).sum();
    theta(i) = keep;
    grad(i) = (up - down) / (2.0 * h);
  }
  return grad;
}

Grid random_building(std::mt19937_64 &rng, int rooms_x, int rooms_y, int room_w, int room_h)
{
  int const width = rooms_x * (room_w + 1) + 1;
  int const height = rooms_y * (room_h + 1) + 1;
  Grid      grid(width, height, roomclear::CellKind::wall);
  for (int ry = 0; ry < rooms_y; ++ry) {
    for (int rx = 0; rx < rooms_x; ++rx) {
      for (int y = 0; y < room_h; ++y) {
        for (int x = 0; x < room_w; ++x) {
          grid.set({1 + rx * (room_w + 1) + x, 1 + ry * (room_h + 1) + y}, roomclear::CellKind::floor);
        }
      }
    }
  }
  // Random spanning tree plus a few extra doors; every door sits mid-wall.
  std::uniform_int_distribution<int> coin(0, 3);
  auto door_h = [&](int rx, int ry) { // between (rx,ry) and (rx+1,ry)
    std::uniform_int_distribution<int> off(0, room_h - 1);
    grid.set({(rx + 1) * (room_w + 1), 1 + ry * (room_h + 1) + off(rng)}, roomclear::CellKind::door);
  };
  auto door_v = [&](int rx, int ry) { // between (rx,ry) and (rx,ry+1)
    std::uniform_int_distribution<int> off(0, room_w - 1);
    grid.set({1 + rx * (room_w + 1) + off(rng), (ry + 1) * (room_h + 1)}, roomclear::CellKind::door);
  };
  for (int ry = 0; ry < rooms_y; ++ry) {
    for (int rx = 0; rx < rooms_x; ++rx) {
      if (rx + 1 < rooms_x && (ry == 0 || coin(rng) == 0)) { door_h(rx, ry); }
      if (ry + 1 < rooms_y) { door_v(rx, ry); }
    }
  }
  return grid;
}

std::string read_file(std::string const &path)
{
  std::ifstream      in(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::shared_ptr<roomclear::Scenario const> scenario_from(std::string_view text)
{
  return std::make_shared<roomclear::Scenario const>(roomclear::parse_scenario(text));
}

std::shared_ptr<roomclear::Scenario const> fixture(std::string const &name)
{
  return std::make_shared<roomclear::Scenario const>(
    roomclear::load_scenario(std::string(ROOMCLEAR_FIXTURE_DIR) + "/" + name));
}

std::shared_ptr<roomclear::Scenario const> bundled(std::string const &name)
{
  return std::make_shared<roomclear::Scenario const>(
    roomclear::load_scenario(std::string(ROOMCLEAR_SCENARIO_DIR) + "/" + name));
}

} // namespace oracle
