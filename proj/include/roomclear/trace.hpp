#pragma once

#include "roomclear/engine.hpp"
#include "roomclear/feudal.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace roomclear {

/// One line of an episode trace: the state at `t`, the orders held, the actions
/// about to be taken (empty on the last line), and the reward and events that
/// arrived with this state.
nlohmann::json trace_record(int episode, WorldState const &world, std::vector<std::optional<Order>> const *orders,
                            std::span<PrimitiveAction const> actions, double reward, std::vector<Event> const &events);

/// Just the entity and clearance part of a record.
nlohmann::json trace_state(WorldState const &world);

class TraceWriter
{
public:
  explicit TraceWriter(std::filesystem::path const &path);
  void write(nlohmann::json const &record);
  void flush() { out_.flush(); }

private:
  std::ofstream out_;
};

struct ReplayReport
{
  bool        ok = true;
  int         episodes = 0;
  int         steps = 0;
  std::string message;
};

/// Re-runs every episode of a trace through the engine from the scenario spawns
/// and compares each recorded state, reward and event list.
ReplayReport replay_check(std::shared_ptr<Scenario const> scenario, std::filesystem::path const &trace);
ReplayReport replay_check(std::shared_ptr<Scenario const> scenario, std::vector<nlohmann::json> const &lines);

} // namespace roomclear
