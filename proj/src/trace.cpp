#include "roomclear/trace.hpp"

#include <stdexcept>

namespace roomclear {

using nlohmann::json;

namespace {

PrimitiveAction parse_action(std::string const &name)
{
  for (int i = 0; i < kPrimitiveActionCount; ++i) {
    auto const a = static_cast<PrimitiveAction>(i);
    if (to_string(a) == name) { return a; }
  }
  throw std::runtime_error("trace: unknown action '" + name + "'");
}

json events_json(std::vector<Event> const &events)
{
  json out = json::array();
  for (auto const &e : events) { out.push_back({{"kind", to_string(e.kind)}, {"id", e.id}}); }
  return out;
}

} // namespace

json trace_state(WorldState const &world)
{
  json agents = json::array();
  for (auto const &a : world.agents) {
    agents.push_back({{"id", a.id}, {"x", a.cell.x}, {"y", a.cell.y}, {"hp", a.hp}, {"alive", a.alive},
                      {"room", a.room}});
  }
  json enemies = json::array();
  for (auto const &e : world.enemies) {
    enemies.push_back({{"id", e.id}, {"x", e.cell.x}, {"y", e.cell.y}, {"hp", e.hp}, {"alive", e.alive},
                       {"room", e.room}});
  }
  json civilians = json::array();
  for (auto const &c : world.civilians) {
    civilians.push_back({{"id", c.id}, {"x", c.cell.x}, {"y", c.cell.y}, {"alive", c.alive}, {"room", c.room}});
  }
  json u = json::array();
  for (Eigen::Index r = 0; r < world.clearance.u.size(); ++r) { u.push_back(world.clearance.u(r)); }
  return {{"agents", std::move(agents)}, {"enemies", std::move(enemies)}, {"civilians", std::move(civilians)},
          {"u", std::move(u)}};
}

json trace_record(int episode, WorldState const &world, std::vector<std::optional<Order>> const *orders,
                  std::span<PrimitiveAction const> actions, double reward, std::vector<Event> const &events)
{
  json rec;
  rec["episode"] = episode;
  rec["t"] = world.timestep;
  auto state = trace_state(world);
  for (auto &[key, value] : state.items()) { rec[key] = value; }

  json ord = json::array();
  if (orders) {
    for (std::size_t i = 0; i < orders->size(); ++i) {
      auto const &o = (*orders)[i];
      if (!o) {
        ord.push_back(nullptr);
      } else if (o->kind == OrderKind::wait) {
        ord.push_back({{"agent", i}, {"kind", "wait"}, {"room", o->origin_room}, {"deadline", o->deadline}});
      } else {
        ord.push_back({{"agent", i}, {"kind", "door"}, {"door", o->door}, {"room", o->origin_room},
                       {"deadline", o->deadline}, {"pass_through", o->pass_through}});
      }
    }
  }
  rec["orders"] = std::move(ord);

  json acts = json::array();
  for (auto a : actions) { acts.push_back(to_string(a)); }
  rec["actions"] = std::move(acts);
  rec["reward"] = reward;
  rec["events"] = events_json(events);
  return rec;
}

TraceWriter::TraceWriter(std::filesystem::path const &path)
{
  if (path.has_parent_path()) { std::filesystem::create_directories(path.parent_path()); }
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) { throw std::runtime_error("cannot write trace " + path.string()); }
}

void TraceWriter::write(json const &record) { out_ << record.dump() << '\n'; }

ReplayReport replay_check(std::shared_ptr<Scenario const> scenario, std::filesystem::path const &trace)
{
  std::ifstream in(trace, std::ios::binary);
  if (!in) { return {false, 0, 0, "cannot read " + trace.string()}; }
  std::vector<json> lines;
  std::string       line;
  while (std::getline(in, line)) {
    if (!line.empty()) { lines.push_back(json::parse(line)); }
  }
  return replay_check(std::move(scenario), lines);
}

ReplayReport replay_check(std::shared_ptr<Scenario const> scenario, std::vector<json> const &lines)
{
  ReplayReport report;
  auto fail = [&](std::size_t i, std::string const &what) {
    report.ok = false;
    report.message = "line " + std::to_string(i + 1) + ": " + what;
    return report;
  };

  std::optional<WorldState> world;
  int                       episode = -1;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto const &rec = lines[i];
    int const   ep = rec.at("episode").get<int>();
    if (!world || ep != episode) {
      if (world && !world->done) { return fail(i, "previous episode ended before termination"); }
      if (rec.at("t").get<int>() != 0) { return fail(i, "episode does not start at t=0"); }
      world = reset(scenario, 0);
      episode = ep;
      ++report.episodes;
    }
    if (rec.at("t").get<int>() != world->timestep) { return fail(i, "timestep mismatch"); }
    json state = trace_state(*world);
    for (auto const &key : {"agents", "enemies", "civilians", "u"}) {
      if (state.at(key) != rec.at(key)) { return fail(i, std::string("state mismatch in ") + key); }
    }
    if (i > 0 && rec.at("t").get<int>() > 0) {
      if (rec.at("events") != events_json(world->step_events)) { return fail(i, "event mismatch"); }
    }

    auto const &acts = rec.at("actions");
    if (acts.empty()) {
      if (!world->done) { return fail(i, "no actions recorded for a running episode"); }
      continue;
    }
    if (world->done) { return fail(i, "actions recorded after termination"); }
    std::vector<PrimitiveAction> actions;
    for (auto const &a : acts) { actions.push_back(parse_action(a.get<std::string>())); }
    auto const result = env_step(*world, actions);
    ++report.steps;
    if (i + 1 >= lines.size() || lines[i + 1].at("episode").get<int>() != ep) {
      return fail(i, "trace ends mid-episode");
    }
    if (lines[i + 1].at("reward").get<double>() != result.reward) { return fail(i + 1, "reward mismatch"); }
  }
  if (world && !world->done) { return fail(lines.size() - 1, "last episode did not terminate"); }
  return report;
}

} // namespace roomclear
