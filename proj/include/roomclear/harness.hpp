#pragma once

#include "roomclear/checkpoint.hpp"
#include "roomclear/engine.hpp"
#include "roomclear/feudal.hpp"
#include "roomclear/learn/ddqn.hpp"
#include "roomclear/learn/tabular.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace roomclear {

enum class Algorithm : std::uint8_t
{
  feudal_tabular,
  feudal_ddqn,
  joint_tabular
};

enum class AgentsMode : std::uint8_t
{
  learned,
  pretrain,
  scripted
};

std::string_view to_string(Algorithm a);
std::string_view to_string(AgentsMode m);
std::optional<Algorithm>  parse_algorithm(std::string_view text);
std::optional<AgentsMode> parse_agents_mode(std::string_view text);

class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Everything that `--hp key=value` can change. Learner keys (gamma, alpha, lr,
/// batch, capacity, target_period, clip, hidden, eps_start, eps_end, eps_decay)
/// apply to both learners unless prefixed with `commander.` or `agent.`.
struct Hyperparameters
{
  TabularParams commander_tabular;
  TabularParams agent_tabular;
  DdqnParams    commander_ddqn;
  DdqnParams    agent_ddqn;

  int    checkpoint_every = 0; ///< 0 = final checkpoint only
  double pretrain_threshold = 0.95;
  int    pretrain_window = 500;
  int    pretrain_episodes = 20000; ///< budget when train runs pretraining itself
  bool   wallclock = true;          ///< false writes 0 so metrics are reproducible byte for byte

  std::optional<RewardConfig> reward;
  std::optional<double>       r_complete;
  std::optional<int>          step_limit;
};

Hyperparameters resolve_hyperparameters(std::vector<std::pair<std::string, std::string>> const &overrides);

struct RunConfig
{
  std::string                     scenario_path;
  std::shared_ptr<Scenario const> scenario; ///< used instead of scenario_path when set
  Algorithm                       algo = Algorithm::feudal_tabular;
  AgentsMode                      agents_mode = AgentsMode::learned;
  int                             episodes = 0;
  std::uint64_t                   seed = 0;
  std::vector<std::pair<std::string, std::string>> hp;
  int                             eval_episodes = 0;
  std::filesystem::path           out; ///< empty = keep everything in memory
  bool                            trace = false;
  /// eval: checkpoint to evaluate. train with agents_mode=pretrain: pretrained agents.
  std::filesystem::path checkpoint;
};

/// Throws ConfigError on inconsistent settings.
void validate_config(RunConfig const &config);

struct EpisodeMetrics
{
  int         episode = 0;
  int         steps = 0;
  double      ret = 0.0;
  bool        success = false;
  int         agent_deaths = 0;
  bool        civilian_alive = true;
  int         orders_issued = 0;
  double      order_success_rate = 0.0;
  std::int64_t wallclock_ms = 0;
};

std::string_view metrics_header();
std::string      format_metrics_row(EpisodeMetrics const &m);

struct EvalSummary
{
  int    episodes = 0;
  double success_rate = 0.0;
  double mean_steps = 0.0;
  double median_steps = 0.0;
  double sd_steps = 0.0;
  double mean_return = 0.0;
  double mean_deaths = 0.0;
  double zero_death_rate = 0.0;
  double civilian_survival_rate = 0.0;
  std::vector<EpisodeMetrics> episodes_detail;
};

EvalSummary summarize(std::vector<EpisodeMetrics> const &episodes);

struct LearnerCounters
{
  std::int64_t pushes = 0;
  std::int64_t train_steps = 0;
};

struct TrainingResult
{
  std::vector<EpisodeMetrics> metrics;
  Checkpoint                  checkpoint; ///< final learners
  std::filesystem::path       checkpoint_path;
  std::optional<EvalSummary>  eval;
  /// Per-episode learner counters, recorded after each episode.
  std::vector<LearnerCounters> commander_counters;
  std::vector<LearnerCounters> agent_counters;
};

TrainingResult run_training(RunConfig const &config);

struct PretrainResult
{
  int                   episodes = 0;
  double                success_rate = 0.0; ///< over the last window
  bool                  reached = false;
  Checkpoint            checkpoint;
  std::filesystem::path checkpoint_path;
};

PretrainResult pretrain_agents(RunConfig const &config);

/// Spawn used by pretraining: a uniformly random room, then a uniformly random
/// free floor cell in it. `room_out` receives the room.
Coord sample_pretrain_spawn(Scenario const &scenario, std::mt19937_64 &rng, int *room_out = nullptr);

EvalSummary run_eval(RunConfig const &config, Checkpoint const &checkpoint);
EvalSummary run_eval(RunConfig const &config);

/// Loads the scenario named by the config and applies reward/step-limit overrides.
std::shared_ptr<Scenario const> effective_scenario(RunConfig const &config, Hyperparameters const &hp);
/// Hash of the scenario before overrides, as stored in checkpoints.
std::uint64_t config_scenario_hash(RunConfig const &config);

std::filesystem::path checkpoint_path(RunConfig const &config, std::int64_t episode);

} // namespace roomclear
