#pragma once

#include "roomclear/learn/ddqn.hpp"
#include "roomclear/learn/tabular.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace roomclear {

struct TabularSnapshot
{
  int                         actions = 0;
  std::int64_t                selections = 0;
  std::vector<QTable::Triple> entries;
};

struct NetSnapshot
{
  Net          online;
  Net          target;
  std::int64_t selections = 0;
  std::int64_t train_steps = 0;
};

/// One learner. Scripted agents are stored as an empty section so a checkpoint
/// always says how its agents behaved.
struct LearnerSnapshot
{
  enum class Kind : std::uint8_t
  {
    tabular,
    ddqn,
    scripted
  };
  Kind                           kind = Kind::scripted;
  std::optional<TabularSnapshot> tabular;
  std::optional<NetSnapshot>     net;
};

struct Checkpoint
{
  static constexpr int kVersion = 1;

  std::uint64_t                                    scenario_hash = 0;
  std::string                                      algo;
  std::int64_t                                     episode = 0;
  std::vector<std::pair<std::string, std::string>> hyperparameters;
  std::optional<LearnerSnapshot>                   commander;
  std::optional<LearnerSnapshot>                   agent;
};

class CheckpointError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

TabularSnapshot snapshot(TabularLearner const &learner);
NetSnapshot     snapshot(DdqnLearner const &learner);
void            restore(TabularLearner &learner, TabularSnapshot const &snap);
void            restore(DdqnLearner &learner, NetSnapshot const &snap);

std::string serialize_checkpoint(Checkpoint const &ckpt);
Checkpoint  parse_checkpoint(std::string const &text);

void       write_checkpoint(std::filesystem::path const &path, Checkpoint const &ckpt);
Checkpoint read_checkpoint(std::filesystem::path const &path);

} // namespace roomclear
