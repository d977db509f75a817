#include "roomclear/harness.hpp"
#include "roomclear/trace.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

using namespace roomclear;

struct Options
{
  std::string              scenario;
  std::string              algo = "feudal-tabular";
  std::string              agents_mode = "learned";
  int                      episodes = 0;
  std::uint64_t            seed = 0;
  std::vector<std::string> hp;
  std::string              out;
  bool                     trace = false;
  int                      eval_episodes = 0;
  std::string              checkpoint;
  std::string              trace_file;
};

RunConfig to_config(Options const &o)
{
  RunConfig c;
  c.scenario_path = o.scenario;
  auto const algo = parse_algorithm(o.algo);
  if (!algo) { throw ConfigError("unknown algorithm '" + o.algo + "'"); }
  c.algo = *algo;
  auto const mode = parse_agents_mode(o.agents_mode);
  if (!mode) { throw ConfigError("unknown agents mode '" + o.agents_mode + "'"); }
  c.agents_mode = *mode;
  c.episodes = o.episodes;
  c.seed = o.seed;
  for (auto const &kv : o.hp) {
    auto const eq = kv.find('=');
    if (eq == std::string::npos) { throw ConfigError("--hp expects key=value, got '" + kv + "'"); }
    c.hp.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
  c.out = o.out;
  c.trace = o.trace;
  c.eval_episodes = o.eval_episodes;
  c.checkpoint = o.checkpoint;
  return c;
}

void print_summary(EvalSummary const &s)
{
  std::printf("eval episodes=%d success_rate=%.4f mean_steps=%.3f median_steps=%.1f sd_steps=%.3f "
              "mean_return=%.4f mean_deaths=%.4f zero_death_rate=%.4f civilian_survival=%.4f\n",
              s.episodes, s.success_rate, s.mean_steps, s.median_steps, s.sd_steps, s.mean_return, s.mean_deaths,
              s.zero_death_rate, s.civilian_survival_rate);
}

void add_common(CLI::App *cmd, Options &o)
{
  cmd->add_option("--scenario", o.scenario, "Scenario file")->required();
  cmd->add_option("--algo", o.algo, "feudal-tabular | feudal-ddqn | joint-tabular");
  cmd->add_option("--agents-mode", o.agents_mode, "learned | pretrain | scripted");
  cmd->add_option("--seed", o.seed, "Run seed");
  cmd->add_option("--hp", o.hp, "Hyperparameter override key=value (repeatable)");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_flag("--trace", o.trace, "Write JSON-lines traces");
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Room-clearance gridworld with a feudal commander/agent training stack"};
  app.require_subcommand(1);
  Options o;

  auto *train = app.add_subcommand("train", "Train a commander (and agents)");
  add_common(train, o);
  train->add_option("--episodes", o.episodes, "Training episodes");
  train->add_option("--eval-episodes", o.eval_episodes, "Greedy evaluation episodes after training");
  train->add_option("--checkpoint", o.checkpoint, "Pretrained agent checkpoint (agents-mode pretrain)");

  auto *pretrain = app.add_subcommand("pretrain", "Pretrain the shared agent learner on random orders");
  add_common(pretrain, o);
  pretrain->add_option("--episodes", o.episodes, "Episode budget");

  auto *eval = app.add_subcommand("eval", "Evaluate a checkpoint greedily");
  add_common(eval, o);
  eval->add_option("--checkpoint", o.checkpoint, "Checkpoint to evaluate")->required();
  eval->add_option("--eval-episodes", o.eval_episodes, "Evaluation episodes (default 100)");

  auto *replay = app.add_subcommand("replay-check", "Re-simulate a trace and compare every state");
  replay->add_option("--scenario", o.scenario, "Scenario file")->required();
  replay->add_option("--trace-file", o.trace_file, "Trace to check")->required();
  replay->add_option("--hp", o.hp, "Same overrides as the traced run");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      auto const config = to_config(o);
      auto const result = run_training(config);
      int        wins = 0;
      for (auto const &m : result.metrics) { wins += m.success ? 1 : 0; }
      std::printf("trained episodes=%zu successes=%d\n", result.metrics.size(), wins);
      if (!result.checkpoint_path.empty()) { std::printf("checkpoint %s\n", result.checkpoint_path.c_str()); }
      if (result.eval) { print_summary(*result.eval); }
    } else if (*pretrain) {
      auto const result = pretrain_agents(to_config(o));
      std::printf("pretrain episodes=%d success_rate=%.4f threshold_reached=%s\n", result.episodes,
                  result.success_rate, result.reached ? "yes" : "no");
      if (!result.checkpoint_path.empty()) { std::printf("checkpoint %s\n", result.checkpoint_path.c_str()); }
      if (!result.reached) { std::fprintf(stderr, "pretraining budget exhausted below threshold\n"); }
    } else if (*eval) {
      print_summary(run_eval(to_config(o)));
    } else if (*replay) {
      auto const config = to_config(o);
      auto const hp = resolve_hyperparameters(config.hp);
      auto const report = replay_check(effective_scenario(config, hp), o.trace_file);
      std::printf("replay episodes=%d steps=%d %s%s\n", report.episodes, report.steps, report.ok ? "ok" : "MISMATCH ",
                  report.message.c_str());
      return report.ok ? 0 : 1;
    }
  } catch (std::exception const &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
