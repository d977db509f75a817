#include "oracles.hpp"

#include "roomclear/feudal.hpp"

#include <doctest.h>

#include <algorithm>

using namespace roomclear;
using PA = PrimitiveAction;

namespace {

std::shared_ptr<Scenario const> with(std::shared_ptr<Scenario const> const &base, auto &&edit)
{
  auto copy = std::make_shared<Scenario>(*base);
  edit(*copy);
  return copy;
}

/// Walks agent `agent` with the scripted policy until its order resolves.
std::pair<OrderOutcome, int> run_scripted(WorldState &w, int agent, Order const &order, FeudalLayout const &layout,
                                          int cap = 200)
{
  for (int steps = 1; steps <= cap && !w.done; ++steps) {
    std::vector<PA> actions(w.agents.size(), PA::wait);
    actions[agent] = scripted_agent_policy(encode_agent_obs(w, agent, order, layout));
    env_step(w, actions);
    auto const outcome = order_status(w.agents[agent], order, w, layout);
    if (outcome != OrderOutcome::in_progress) { return {outcome, steps}; }
  }
  return {OrderOutcome::in_progress, cap};
}

constexpr char kTwoRooms[] = "[map]\n"
                             "#######\n"
                             "#A.+..#\n"
                             "#######\n";

} // namespace

TEST_CASE("order space")
{
  auto const   nine = oracle::fixture("nine_room.scn");
  FeudalLayout layout(*nine);
  CHECK(layout.d_max() == 4);
  CHECK(layout.order_slots() == 5);

  Coord const center{6, 6};
  Coord const top{6, 2};
  auto const  w = reset_with_agents(nine, std::vector<Coord>{top, center}, 0);
  auto const  m1 = order_space(w, 0, layout);
  CHECK(m1.count() == 4); // three doors plus wait
  CHECK(m1(4));
  CHECK_FALSE(m1(3));
  CHECK(order_space(w, 1, layout).count() == 5);

  auto const   seven = oracle::fixture("seven_room.scn");
  FeudalLayout seven_layout(*seven);
  auto const   ws = reset_with_agents(seven, std::vector<Coord>{{13, 2}}, 0);
  auto const   m3 = order_space(ws, 0, seven_layout);
  CHECK(m3.size() == 4);
  CHECK(m3.count() == 2);
  CHECK(m3(0));
  CHECK(m3(3));

  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<int> n(1, 4);
    auto grid = oracle::random_building(rng, n(rng), n(rng), 3, 3);
    grid.set({1, 1}, CellKind::floor);
    Scenario s;
    s.floorplan = FloorPlan::from_grid(grid);
    s.agent_spawns = {{1, 1}};
    auto const   shared = std::make_shared<Scenario const>(s);
    FeudalLayout l(*shared);
    for (auto const &room : shared->floorplan.rooms) {
      auto const world = reset_with_agents(shared, std::vector<Coord>{room.cells.front()}, 0);
      auto const mask = order_space(world, 0, l);
      CHECK(mask(l.wait_slot()));
      CHECK(mask.count() == static_cast<Eigen::Index>(room.doors.size()) + 1);
    }
  }
}

TEST_CASE("invalid order slots are refused")
{
  auto const   nine = oracle::fixture("nine_room.scn");
  FeudalLayout layout(*nine);
  auto const   w = reset(nine, 0);
  CHECK_THROWS_AS(make_order(w, 0, 2, layout), std::invalid_argument);
  CHECK_THROWS_AS(make_order(w, 0, 7, layout), std::invalid_argument);
  auto const o = make_order(w, 0, 1, layout);
  CHECK(o.door == 2);
  CHECK(o.deadline > o.issued_at);
}

TEST_CASE("order outcomes")
{
  auto const   nine = oracle::fixture("nine_room.scn");
  FeudalLayout layout(*nine);

  SUBCASE("through the commanded door")
  {
    auto       w = reset_with_agents(nine, std::vector<Coord>{{3, 2}}, 0);
    auto const order = make_order(w, 0, 0, layout); // door 0 at (4,2), east
    env_step(w, std::vector<PA>{PA::move_east});
    CHECK(order_status(w.agents[0], order, w, layout) == OrderOutcome::in_progress);
    env_step(w, std::vector<PA>{PA::move_east});
    CHECK(order_status(w.agents[0], order, w, layout) == OrderOutcome::completed);
  }
  SUBCASE("through another door")
  {
    auto       w = reset_with_agents(nine, std::vector<Coord>{{2, 3}}, 0);
    auto const order = make_order(w, 0, 0, layout);
    env_step(w, std::vector<PA>{PA::move_south});
    env_step(w, std::vector<PA>{PA::move_south});
    CHECK(order_status(w.agents[0], order, w, layout) == OrderOutcome::failed_wrong_door);
  }
  SUBCASE("too slow")
  {
    auto       w = reset_with_agents(nine, std::vector<Coord>{{1, 1}}, 0);
    auto const order = make_order(w, 0, 0, layout);
    int const  budget = order.deadline - order.issued_at;
    CHECK(budget >= 20);
    for (int t = 1; t < budget; ++t) {
      env_step(w, std::vector<PA>{PA::wait});
      CHECK(order_status(w.agents[0], order, w, layout) == OrderOutcome::in_progress);
    }
    env_step(w, std::vector<PA>{PA::wait});
    CHECK(order_status(w.agents[0], order, w, layout) == OrderOutcome::failed_timeout);
  }
  SUBCASE("leaving an enemy behind does not count")
  {
    auto const s = oracle::scenario_from("[map]\n#########\n#A..+...#\n#..E#...#\n#########\n[meta]\nagent_hp=5\n");
    FeudalLayout l(*s);
    auto         w = reset_with_agents(s, std::vector<Coord>{{3, 1}}, 0);
    auto const   order = make_order(w, 0, 0, l);
    env_step(w, std::vector<PA>{PA::move_east});
    env_step(w, std::vector<PA>{PA::move_east});
    REQUIRE(w.agents[0].alive);
    CHECK(w.agents[0].room == 1);
    CHECK(order_status(w.agents[0], order, w, l) == OrderOutcome::failed_wrong_door);
  }
  SUBCASE("wait order")
  {
    auto       w = reset_with_agents(nine, std::vector<Coord>{{1, 1}, {3, 3}}, 0);
    auto const order = make_order(w, 0, layout.wait_slot(), layout);
    CHECK(order.kind == OrderKind::wait);
    CHECK(close_wait_order(w.agents[0], order, w) == OrderOutcome::completed);
    for (int t = 0; t < order.deadline - order.issued_at; ++t) { env_step(w, std::vector<PA>{PA::wait, PA::wait}); }
    CHECK(order_status(w.agents[0], order, w, layout) == OrderOutcome::completed);
  }
}

TEST_CASE("order-sync door orders")
{
  auto const   nine = with(oracle::fixture("nine_room.scn"), [](Scenario &s) { s.ruleset.order_sync = true; });
  FeudalLayout layout(*nine);
  SUBCASE("far from the door: walk up to it")
  {
    auto       w = reset_with_agents(nine, std::vector<Coord>{{1, 2}}, 0);
    auto const order = make_order(w, 0, 0, layout);
    CHECK_FALSE(order.pass_through);
    env_step(w, std::vector<PA>{PA::move_east});
    CHECK(order_status(w.agents[0], order, w, layout) == OrderOutcome::in_progress);
    env_step(w, std::vector<PA>{PA::move_east});
    CHECK(w.agents[0].cell == Coord{3, 2});
    CHECK(order_status(w.agents[0], order, w, layout) == OrderOutcome::completed);
  }
  SUBCASE("already by the door: go through")
  {
    auto       w = reset_with_agents(nine, std::vector<Coord>{{3, 2}}, 0);
    auto const order = make_order(w, 0, 0, layout);
    CHECK(order.pass_through);
    env_step(w, std::vector<PA>{PA::move_east});
    CHECK(order_status(w.agents[0], order, w, layout) == OrderOutcome::in_progress);
    env_step(w, std::vector<PA>{PA::move_east});
    CHECK(order_status(w.agents[0], order, w, layout) == OrderOutcome::completed);
  }
}

TEST_CASE("agent reward only sees the outcome")
{
  CHECK(agent_reward(OrderOutcome::completed) == 10.0);
  CHECK(agent_reward(OrderOutcome::failed_wrong_door) == -10.0);
  CHECK(agent_reward(OrderOutcome::in_progress) == 0.0);
  CHECK(agent_reward(OrderOutcome::failed_timeout) == 0.0);
}

TEST_CASE("commander reward accumulation")
{
  CommanderRewardAccumulator acc;
  for (int i = 0; i < 3; ++i) { acc.add(-1.0); }
  CHECK(acc.take() == -3.0);
  CHECK(acc.take() == 0.0);
  acc.add(-0.5);
  acc.add(-0.5);
  acc.add(10.0);
  CHECK(acc.take() == 9.0);
}

TEST_CASE("issuing orders")
{
  auto const   nine = oracle::fixture("nine_room.scn");
  FeudalLayout layout(*nine);
  auto         w = reset(nine, 0);
  OrderBook    book(layout, 2);
  CommanderRewardAccumulator acc;
  int                        counter = 0;
  std::vector<int>           scripted_slots;
  std::size_t                next_slot = 0;
  CommanderPolicy            policy = [&](CommanderObservation const &obs) {
    int const slot = scripted_slots.at(next_slot++);
    CHECK(obs.mask(slot));
    return slot;
  };

  // Agent 0 waits, agent 1 heads for door 0.
  scripted_slots = {layout.wait_slot(), 0};
  acc.add(-2.0);
  auto start = issue_orders(w, book, {}, true, policy, acc, counter, layout);
  REQUIRE(start.decisions.size() == 2);
  CHECK(start.decisions[0].agent == 0);
  CHECK(start.decisions[1].agent == 1);
  CHECK(start.decisions[0].reward == -2.0);
  CHECK(start.decisions[1].reward == 0.0);
  CHECK(book.order(0)->kind == OrderKind::wait);
  CHECK(book.order(1)->door == 0);

  // Nothing resolves: nobody is asked.
  acc.add(-1.0);
  env_step(w, std::vector<PA>{PA::wait, PA::move_north});
  auto res = book.evaluate(w);
  CHECK(res.empty());
  auto quiet = issue_orders(w, book, res, false, policy, acc, counter, layout);
  CHECK(quiet.decisions.empty());
  CHECK(acc.pending() == -1.0);

  // Agent 1 reaches room 1; both agents get new orders, agent 0's wait closes first.
  scripted_slots.insert(scripted_slots.end(), {0, layout.wait_slot()});
  env_step(w, std::vector<PA>{PA::wait, PA::move_east});
  acc.add(-0.5);
  env_step(w, std::vector<PA>{PA::wait, PA::move_east});
  res = book.evaluate(w);
  REQUIRE(res.size() == 1);
  CHECK(res[0].agent == 1);
  CHECK(res[0].outcome == OrderOutcome::completed);
  auto next = issue_orders(w, book, res, false, policy, acc, counter, layout);
  REQUIRE(next.decisions.size() == 2);
  CHECK(next.decisions[0].agent == 0);
  CHECK(next.decisions[0].reward == -1.5);
  CHECK(next.decisions[1].reward == 0.0);
  REQUIRE(next.closed_waits.size() == 1);
  CHECK(next.closed_waits[0].agent == 0);
  CHECK(next.closed_waits[0].outcome == OrderOutcome::completed);
  CHECK(counter == 4);
  CHECK(book.issued() == 4);
  CHECK(next.decisions[1].index == 3);
}

TEST_CASE("observation encodings")
{
  auto const   nine = oracle::fixture("nine_room.scn");
  FeudalLayout layout(*nine);
  auto const   w = reset_with_agents(nine, std::vector<Coord>{{1, 1}, {6, 6}}, 0);
  std::vector<std::optional<Order>> orders{make_order(w, 0, layout.wait_slot(), layout), make_order(w, 1, 2, layout)};

  SUBCASE("agent view has a fixed width")
  {
    for (auto const &room : nine->floorplan.rooms) {
      auto const here = reset_with_agents(nine, std::vector<Coord>{room.cells[4], {1, 1}}, 0);
      auto const obs = encode_agent_obs(here, 0, make_order(here, 0, layout.wait_slot(), layout), layout);
      CHECK(static_cast<std::size_t>(obs.features().size()) == layout.agent_observation_size());
    }
  }
  SUBCASE("wait sets the last order position")
  {
    auto const   obs = encode_agent_obs(w, 0, *orders[0], layout);
    auto const   f = obs.features();
    int const    r = layout.r_max();
    Eigen::Index const order_at = r * r + 2 + 3 * layout.d_max() + 3 * layout.e_max();
    CHECK(f.segment(order_at, layout.order_slots()).sum() == 1.0);
    CHECK(f(order_at + layout.wait_slot()) == 1.0);
    CHECK(obs.key() == encode_agent_obs(w, 0, *orders[0], layout).key());
  }
  SUBCASE("identical worlds encode identically")
  {
    auto const a = encode_commander_obs(w, orders, 0, layout);
    auto const b = encode_commander_obs(reset_with_agents(nine, std::vector<Coord>{{1, 1}, {6, 6}}, 0), orders, 0, layout);
    CHECK(a.features == b.features);
    CHECK(a.key == b.key);
    CHECK(static_cast<std::size_t>(a.features.size()) == layout.commander_observation_size());
  }
  SUBCASE("moving one agent touches only its own block")
  {
    int const          m = layout.rooms();
    int const          n = layout.agents();
    int const          per_agent = 1 + m + layout.doors() + 1;
    Eigen::Index const block0 = m + n + m + layout.d_max();
    auto const         base = encode_commander_obs(w, orders, 0, layout);
    for (auto const &room : nine->floorplan.rooms) {
      auto moved = w;
      moved.agents[1].cell = room.cells[2];
      moved.agents[1].room = room.id;
      auto const enc = encode_commander_obs(moved, orders, 0, layout);
      for (Eigen::Index i = 0; i < enc.features.size(); ++i) {
        bool const own = i >= block0 + per_agent && i < block0 + 2 * per_agent;
        if (!own) { CHECK(enc.features(i) == base.features(i)); }
      }
      // Agent 1's room one-hot moved with it.
      CHECK(enc.features(block0 + per_agent + 1 + room.id) == 1.0);
    }
  }
  SUBCASE("dead agents are an all-zero slot")
  {
    auto dead = w;
    dead.agents[1].alive = false;
    dead.agents[1].hp = 0;
    auto const         enc = encode_commander_obs(dead, orders, 0, layout);
    int const          m = layout.rooms();
    int const          per_agent = 1 + m + layout.doors() + 1;
    Eigen::Index const block1 = m + layout.agents() + m + layout.d_max() + per_agent;
    CHECK(enc.features.segment(block1, per_agent).isZero());
  }
  SUBCASE("door distances are normalized by the room diameter")
  {
    auto const   enc = encode_commander_obs(w, orders, 0, layout);
    Eigen::Index at = layout.rooms() + layout.agents() + layout.rooms();
    auto const  &frame = layout.frame(0);
    // (1,1) to the door at (4,2) is four steps, to (2,4) four steps.
    CHECK(enc.features(at) == doctest::Approx(4.0 / frame.diameter));
    CHECK(enc.features(at + 1) == doctest::Approx(4.0 / frame.diameter));
    CHECK(enc.features(at + 2) == 0.0);
  }
}

TEST_CASE("scripted agents")
{
  SUBCASE("shoot on sight")
  {
    auto const   s = oracle::scenario_from("[map]\n#########\n#A..+...#\n#..E#...#\n#########\n");
    FeudalLayout l(*s);
    auto const   w = reset(s, 0);
    auto const   obs = encode_agent_obs(w, 0, make_order(w, 0, 0, l), l);
    CHECK(scripted_agent_policy(obs) == PA::shoot);
  }
  SUBCASE("corridor east")
  {
    auto const   s = oracle::scenario_from(kTwoRooms);
    FeudalLayout l(*s);
    auto const   w = reset(s, 0);
    auto const   obs = encode_agent_obs(w, 0, make_order(w, 0, 0, l), l);
    CHECK(scripted_agent_policy(obs) == PA::move_east);
  }
  SUBCASE("wait order holds still")
  {
    auto const   s = oracle::fixture("nine_room.scn");
    FeudalLayout l(*s);
    auto const   w = reset_with_agents(s, std::vector<Coord>{{1, 1}}, 0);
    CHECK(scripted_agent_policy(encode_agent_obs(w, 0, make_order(w, 0, l.wait_slot(), l), l)) == PA::wait);
  }
}

TEST_CASE("scripted agents finish every door order within diameter + 1 steps")
{
  for (auto const *name : {"seven_room.scn", "nine_room.scn"}) {
    for (bool sync : {false, true}) {
      auto const scenario = with(oracle::fixture(name), [&](Scenario &s) {
        s.ruleset.order_sync = sync;
        s.agent_spawns.resize(1);
        s.step_limit = 10000;
      });
      FeudalLayout layout(*scenario);
      for (auto const &room : scenario->floorplan.rooms) {
        int const diameter = layout.frame(room.id).diameter;
        for (auto cell : room.cells) {
          for (std::size_t slot = 0; slot < room.doors.size(); ++slot) {
            auto w = reset_with_agents(scenario, std::vector<Coord>{cell}, 0);
            if (w.done) { continue; }
            auto const order = make_order(w, 0, static_cast<int>(slot), layout);
            auto const [outcome, steps] = run_scripted(w, 0, order, layout);
            INFO(name << " sync=" << sync << " room " << room.id << " cell (" << cell.x << "," << cell.y << ") slot "
                      << slot);
            CHECK(outcome == OrderOutcome::completed);
            CHECK(steps <= diameter + 1);
          }
        }
      }
    }
  }
}

TEST_CASE("order bookkeeping over random episodes")
{
  auto const scenario = with(oracle::fixture("nine_room.scn"), [](Scenario &s) {
    s.agent_spawns = {{1, 1}, {3, 3}, {9, 9}};
    s.step_limit = 150;
  });
  FeudalLayout    layout(*scenario);
  std::mt19937_64 rng(11);
  for (int episode = 0; episode < 100; ++episode) {
    auto                       w = reset(scenario, 0);
    OrderBook                  book(layout, static_cast<int>(w.agents.size()));
    CommanderRewardAccumulator acc;
    int                        counter = 0;
    CommanderPolicy            policy = [&](CommanderObservation const &obs) {
      std::vector<int> valid;
      for (int k = 0; k < obs.mask.size(); ++k) {
        if (obs.mask(k)) { valid.push_back(k); }
      }
      return valid[std::uniform_int_distribution<std::size_t>(0, valid.size() - 1)(rng)];
    };
    std::size_t decisions = issue_orders(w, book, {}, true, policy, acc, counter, layout).decisions.size();
    bool const  noisy = episode % 2 == 0;
    while (!w.done) {
      std::vector<PA> actions(w.agents.size(), PA::wait);
      for (std::size_t i = 0; i < w.agents.size(); ++i) {
        if (!w.agents[i].alive) { continue; }
        actions[i] = noisy ? static_cast<PA>(std::uniform_int_distribution<int>(0, 5)(rng))
                           : scripted_agent_policy(encode_agent_obs(w, static_cast<int>(i), *book.order(i), layout));
      }
      acc.add(env_step(w, actions).reward);
      auto const res = book.evaluate(w);
      for (auto const &r : res) {
        CHECK(w.timestep - r.order.issued_at <= r.order.deadline - r.order.issued_at);
        CHECK(r.outcome != OrderOutcome::in_progress);
      }
      auto const issued = issue_orders(w, book, res, false, policy, acc, counter, layout);
      decisions += issued.decisions.size();
      for (std::size_t i = 0; i < w.agents.size(); ++i) {
        if (w.agents[i].alive) { CHECK(book.order(i).has_value()); }
      }
    }
    CHECK(decisions == static_cast<std::size_t>(book.issued()));
    CHECK(counter == book.issued());
  }
}

TEST_CASE("rooms with too many doors are rejected at load")
{
  // Nine one-cell rooms on top of a corridor, each with its own door.
  std::string top = "#";
  std::string doors = "#";
  std::string corridor = "#";
  for (int k = 0; k < 9; ++k) {
    top += k == 0 ? "A#" : ".#";
    doors += "+#";
    corridor += "..";
  }
  corridor.back() = '#';
  std::string const wall(top.size(), '#');
  try {
    parse_scenario("[map]\n" + wall + "\n" + top + "\n" + doors + "\n" + corridor + "\n" + wall + "\n");
    FAIL("expected too_many_doors");
  } catch (ScenarioError const &e) {
    CHECK(e.code() == ScenarioErrc::too_many_doors);
  }
}
