#include "roomclear/harness.hpp"

#include "roomclear/baseline.hpp"
#include "roomclear/trace.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <deque>
#include <fstream>
#include <numeric>

namespace roomclear {

// Names -----------------------------------------------------------------------------

std::string_view to_string(Algorithm a)
{
  switch (a) {
  case Algorithm::feudal_tabular: return "feudal-tabular";
  case Algorithm::feudal_ddqn: return "feudal-ddqn";
  case Algorithm::joint_tabular: return "joint-tabular";
  }
  return "?";
}

std::string_view to_string(AgentsMode m)
{
  switch (m) {
  case AgentsMode::learned: return "learned";
  case AgentsMode::pretrain: return "pretrain";
  case AgentsMode::scripted: return "scripted";
  }
  return "?";
}

std::optional<Algorithm> parse_algorithm(std::string_view text)
{
  for (auto a : {Algorithm::feudal_tabular, Algorithm::feudal_ddqn, Algorithm::joint_tabular}) {
    if (to_string(a) == text) { return a; }
  }
  return std::nullopt;
}

std::optional<AgentsMode> parse_agents_mode(std::string_view text)
{
  if (text == "learned-concurrent") { return AgentsMode::learned; }
  if (text == "pretrain-then-freeze") { return AgentsMode::pretrain; }
  for (auto m : {AgentsMode::learned, AgentsMode::pretrain, AgentsMode::scripted}) {
    if (to_string(m) == text) { return m; }
  }
  return std::nullopt;
}

// Hyperparameters -------------------------------------------------------------------

namespace {

template <class T>
T parse_number(std::string const &key, std::string const &value)
{
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("hyperparameter " + key + ": cannot parse '" + value + "'");
  }
  return out;
}

bool parse_flag(std::string const &key, std::string const &value)
{
  if (value == "1" || value == "true") { return true; }
  if (value == "0" || value == "false") { return false; }
  throw ConfigError("hyperparameter " + key + ": expected true/false, got '" + value + "'");
}

std::vector<int> parse_hidden(std::string const &key, std::string const &value)
{
  std::vector<int> out;
  if (value.empty() || value == "none") { return out; }
  std::size_t start = 0;
  while (start <= value.size()) {
    auto const sep = value.find_first_of("x,", start);
    auto const item = value.substr(start, sep == std::string::npos ? std::string::npos : sep - start);
    int const  width = parse_number<int>(key, item);
    if (width <= 0) { throw ConfigError("hyperparameter " + key + ": layer widths must be positive"); }
    out.push_back(width);
    if (sep == std::string::npos) { break; }
    start = sep + 1;
  }
  return out;
}

bool apply_learner_key(std::string const &name, std::string const &key, std::string const &value, TabularParams &tab,
                       DdqnParams &net)
{
  if (name == "gamma") {
    tab.gamma = net.gamma = parse_number<double>(key, value);
  } else if (name == "alpha") {
    tab.alpha = parse_number<double>(key, value);
  } else if (name == "lr") {
    net.lr = parse_number<double>(key, value);
  } else if (name == "batch") {
    net.batch = parse_number<int>(key, value);
  } else if (name == "capacity") {
    net.capacity = parse_number<std::size_t>(key, value);
  } else if (name == "target_period") {
    net.target_period = parse_number<int>(key, value);
  } else if (name == "clip") {
    net.clip_norm = parse_number<double>(key, value);
  } else if (name == "hidden") {
    net.hidden = parse_hidden(key, value);
  } else if (name == "eps_start") {
    tab.epsilon.start = net.epsilon.start = parse_number<double>(key, value);
  } else if (name == "eps_end") {
    tab.epsilon.end = net.epsilon.end = parse_number<double>(key, value);
  } else if (name == "eps_decay") {
    tab.epsilon.decay_steps = net.epsilon.decay_steps = parse_number<std::int64_t>(key, value);
  } else {
    return false;
  }
  return true;
}

void check_ranges(TabularParams const &tab, DdqnParams const &net, std::string const &who)
{
  auto bad = [&](std::string const &what) { throw ConfigError(who + " " + what); };
  if (!(tab.alpha > 0.0 && tab.alpha <= 1.0)) { bad("alpha must be in (0, 1]"); }
  if (!(tab.gamma >= 0.0 && tab.gamma <= 1.0)) { bad("gamma must be in [0, 1]"); }
  if (!(tab.epsilon.start >= 0.0 && tab.epsilon.start <= 1.0 && tab.epsilon.end >= 0.0 && tab.epsilon.end <= 1.0)) {
    bad("epsilon must be in [0, 1]");
  }
  if (tab.epsilon.end > tab.epsilon.start) { bad("eps_end must not exceed eps_start"); }
  if (net.batch <= 0 || net.capacity == 0) { bad("batch and capacity must be positive"); }
  if (!(net.lr > 0.0)) { bad("lr must be positive"); }
}

} // namespace

Hyperparameters resolve_hyperparameters(std::vector<std::pair<std::string, std::string>> const &overrides)
{
  Hyperparameters hp;
  for (auto const &[key, value] : overrides) {
    if (key.starts_with("commander.")) {
      if (!apply_learner_key(key.substr(10), key, value, hp.commander_tabular, hp.commander_ddqn)) {
        throw ConfigError("unknown hyperparameter " + key);
      }
    } else if (key.starts_with("agent.")) {
      if (!apply_learner_key(key.substr(6), key, value, hp.agent_tabular, hp.agent_ddqn)) {
        throw ConfigError("unknown hyperparameter " + key);
      }
    } else if (apply_learner_key(key, key, value, hp.commander_tabular, hp.commander_ddqn)) {
      apply_learner_key(key, key, value, hp.agent_tabular, hp.agent_ddqn);
    } else if (key == "checkpoint_every") {
      hp.checkpoint_every = parse_number<int>(key, value);
    } else if (key == "pretrain_threshold") {
      hp.pretrain_threshold = parse_number<double>(key, value);
    } else if (key == "pretrain_window") {
      hp.pretrain_window = parse_number<int>(key, value);
    } else if (key == "pretrain_episodes") {
      hp.pretrain_episodes = parse_number<int>(key, value);
    } else if (key == "wallclock") {
      hp.wallclock = parse_flag(key, value);
    } else if (key == "reward") {
      try {
        hp.reward = parse_reward_config(value);
      } catch (ScenarioError const &e) {
        throw ConfigError("hyperparameter reward: " + std::string(e.what()));
      }
    } else if (key == "r_complete") {
      hp.r_complete = parse_number<double>(key, value);
    } else if (key == "step_limit") {
      hp.step_limit = parse_number<int>(key, value);
      if (*hp.step_limit <= 0) { throw ConfigError("step_limit must be positive"); }
    } else {
      throw ConfigError("unknown hyperparameter " + key);
    }
  }
  check_ranges(hp.commander_tabular, hp.commander_ddqn, "commander");
  check_ranges(hp.agent_tabular, hp.agent_ddqn, "agent");
  if (hp.pretrain_window <= 0) { throw ConfigError("pretrain_window must be positive"); }
  return hp;
}

void validate_config(RunConfig const &config)
{
  if (config.algo == Algorithm::joint_tabular && config.agents_mode != AgentsMode::learned) {
    throw ConfigError("agents mode " + std::string(to_string(config.agents_mode)) +
                      " requires a feudal algorithm");
  }
  if (config.episodes < 0 || config.eval_episodes < 0) { throw ConfigError("episode counts must be non-negative"); }
  if (!config.scenario && config.scenario_path.empty()) { throw ConfigError("no scenario given"); }
  for (auto const &[k, v] : config.hp) {
    if (k.empty() || v.empty()) { throw ConfigError("hyperparameters must look like key=value"); }
    if (v.find('\n') != std::string::npos) { throw ConfigError("hyperparameter values must be single-line"); }
  }
}

std::shared_ptr<Scenario const> effective_scenario(RunConfig const &config, Hyperparameters const &hp)
{
  Scenario s = config.scenario ? *config.scenario : load_scenario(config.scenario_path);
  if (hp.reward) { s.reward = *hp.reward; }
  if (hp.r_complete) { s.r_complete = *hp.r_complete; }
  if (hp.step_limit) { s.step_limit = *hp.step_limit; }
  return std::make_shared<Scenario const>(std::move(s));
}

std::uint64_t config_scenario_hash(RunConfig const &config)
{
  return config.scenario ? scenario_hash(*config.scenario) : scenario_hash(load_scenario(config.scenario_path));
}

std::filesystem::path checkpoint_path(RunConfig const &config, std::int64_t episode)
{
  return config.out / (std::string(to_string(config.algo)) + "-" + std::to_string(config.seed) + "-ep" +
                       std::to_string(episode) + ".ckpt");
}

// Metrics ----------------------------------------------------------------------------

std::string_view metrics_header()
{
  return "episode,steps,return,success,agent_deaths,civilian_alive,orders_issued,order_success_rate,wallclock_ms";
}

namespace {

std::string fmt_double(double v)
{
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::filesystem::path run_file(RunConfig const &config, std::string const &suffix)
{
  return config.out / (std::string(to_string(config.algo)) + "-" + std::to_string(config.seed) + suffix);
}

class MetricsWriter
{
public:
  explicit MetricsWriter(std::filesystem::path const &path)
  {
    if (path.has_parent_path()) { std::filesystem::create_directories(path.parent_path()); }
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) { throw std::runtime_error("cannot write metrics " + path.string()); }
    out_ << metrics_header() << '\n';
    out_.flush();
  }
  void write(EpisodeMetrics const &m)
  {
    out_ << format_metrics_row(m) << '\n';
    out_.flush();
  }

private:
  std::ofstream out_;
};

} // namespace

std::string format_metrics_row(EpisodeMetrics const &m)
{
  std::string row;
  row += std::to_string(m.episode) + ',' + std::to_string(m.steps) + ',' + fmt_double(m.ret) + ',';
  row += std::string(m.success ? "1" : "0") + ',' + std::to_string(m.agent_deaths) + ',';
  row += std::string(m.civilian_alive ? "1" : "0") + ',' + std::to_string(m.orders_issued) + ',';
  row += fmt_double(m.order_success_rate) + ',' + std::to_string(m.wallclock_ms);
  return row;
}

EvalSummary summarize(std::vector<EpisodeMetrics> const &episodes)
{
  EvalSummary s;
  s.episodes = static_cast<int>(episodes.size());
  s.episodes_detail = episodes;
  if (episodes.empty()) { return s; }
  double const n = static_cast<double>(episodes.size());
  std::vector<double> steps;
  for (auto const &m : episodes) {
    steps.push_back(m.steps);
    s.success_rate += m.success ? 1.0 : 0.0;
    s.mean_return += m.ret;
    s.mean_deaths += m.agent_deaths;
    s.zero_death_rate += m.agent_deaths == 0 ? 1.0 : 0.0;
    s.civilian_survival_rate += m.civilian_alive ? 1.0 : 0.0;
  }
  s.success_rate /= n;
  s.mean_return /= n;
  s.mean_deaths /= n;
  s.zero_death_rate /= n;
  s.civilian_survival_rate /= n;
  s.mean_steps = std::accumulate(steps.begin(), steps.end(), 0.0) / n;
  double var = 0.0;
  for (double x : steps) { var += (x - s.mean_steps) * (x - s.mean_steps); }
  s.sd_steps = std::sqrt(var / n);
  std::sort(steps.begin(), steps.end());
  auto const mid = steps.size() / 2;
  s.median_steps = steps.size() % 2 ? steps[mid] : 0.5 * (steps[mid - 1] + steps[mid]);
  return s;
}

// Learners behind one interface -------------------------------------------------------

namespace {

struct Obs
{
  StateKey        key;
  Eigen::VectorXd x;
};

class Policy
{
public:
  virtual ~Policy() = default;
  virtual bool wants_features() const = 0;
  virtual int  act(Obs const &s, ActionMask const &mask, std::mt19937_64 &rng, bool explore) = 0;
  virtual void push(Obs const &s, int a, double r, Obs const &next, bool done, ActionMask const &next_mask,
                    std::mt19937_64 &rng) = 0;
  virtual LearnerCounters counters() const = 0;
  virtual LearnerSnapshot snapshot() const = 0;
  virtual void            restore(LearnerSnapshot const &snap) = 0;
};

class TabularPolicy final : public Policy
{
public:
  TabularPolicy(int actions, TabularParams params) : learner_(actions, params) {}

  bool wants_features() const override { return false; }
  int  act(Obs const &s, ActionMask const &mask, std::mt19937_64 &rng, bool explore) override
  {
    return learner_.act(s.key, mask, rng, explore);
  }
  void push(Obs const &s, int a, double r, Obs const &next, bool done, ActionMask const &next_mask,
            std::mt19937_64 &) override
  {
    learner_.push(KeyTransition{s.key, a, r, next.key, done, next_mask});
  }
  LearnerCounters counters() const override { return {learner_.pushes(), learner_.train_steps()}; }
  LearnerSnapshot snapshot() const override
  {
    return {LearnerSnapshot::Kind::tabular, roomclear::snapshot(learner_), std::nullopt};
  }
  void restore(LearnerSnapshot const &snap) override
  {
    if (snap.kind != LearnerSnapshot::Kind::tabular) { throw CheckpointError("checkpoint holds no tabular learner"); }
    roomclear::restore(learner_, *snap.tabular);
  }

private:
  TabularLearner learner_;
};

class DdqnPolicy final : public Policy
{
public:
  DdqnPolicy(int inputs, int actions, DdqnParams params, std::mt19937_64 &rng)
    : learner_(inputs, actions, std::move(params), rng)
  {
  }

  bool wants_features() const override { return true; }
  int  act(Obs const &s, ActionMask const &mask, std::mt19937_64 &rng, bool explore) override
  {
    return learner_.act(s.x, mask, rng, explore);
  }
  void push(Obs const &s, int a, double r, Obs const &next, bool done, ActionMask const &next_mask,
            std::mt19937_64 &rng) override
  {
    learner_.push(VectorTransition{s.x, a, r, next.x, done, next_mask}, rng);
  }
  LearnerCounters counters() const override { return {learner_.pushes(), learner_.train_steps()}; }
  LearnerSnapshot snapshot() const override
  {
    return {LearnerSnapshot::Kind::ddqn, std::nullopt, roomclear::snapshot(learner_)};
  }
  void restore(LearnerSnapshot const &snap) override
  {
    if (snap.kind != LearnerSnapshot::Kind::ddqn) { throw CheckpointError("checkpoint holds no network learner"); }
    roomclear::restore(learner_, *snap.net);
  }

private:
  DdqnLearner learner_;
};

std::unique_ptr<Policy> make_policy(Algorithm algo, int inputs, int actions, TabularParams const &tab,
                                    DdqnParams const &net, std::mt19937_64 &rng)
{
  if (algo == Algorithm::feudal_ddqn) { return std::make_unique<DdqnPolicy>(inputs, actions, net, rng); }
  return std::make_unique<TabularPolicy>(actions, tab);
}

Obs observe(AgentObservation const &o, bool features)
{
  Obs s;
  if (features) {
    s.x = o.features();
  } else {
    s.key = o.key();
  }
  return s;
}

struct EpisodeOptions
{
  bool explore_commander = true;
  bool learn_commander = true;
  bool explore_agents = true;
  bool learn_agents = true;
};

std::int64_t elapsed_ms(std::chrono::steady_clock::time_point start, bool enabled)
{
  if (!enabled) { return 0; }
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
}

void fill_outcome(EpisodeMetrics &m, WorldState const &world)
{
  m.steps = world.timestep;
  m.success = world.done_reason == DoneReason::cleared;
  m.agent_deaths = static_cast<int>(
      std::count_if(world.agents.begin(), world.agents.end(), [](AgentState const &a) { return !a.alive; }));
  m.civilian_alive = std::all_of(world.civilians.begin(), world.civilians.end(),
                                 [](CivilianState const &c) { return c.alive; });
}

// Feudal run --------------------------------------------------------------------------

class FeudalSession
{
public:
  FeudalSession(std::shared_ptr<Scenario const> scenario, Algorithm algo, bool scripted_agents,
                Hyperparameters const &hp, std::mt19937_64 &rng)
    : scenario_(std::move(scenario))
    , layout_(*scenario_)
  {
    commander_ = make_policy(algo, static_cast<int>(layout_.commander_observation_size()), layout_.order_slots(),
                             hp.commander_tabular, hp.commander_ddqn, rng);
    if (!scripted_agents) {
      agent_ = make_policy(algo, static_cast<int>(layout_.agent_observation_size()), kPrimitiveActionCount,
                           hp.agent_tabular, hp.agent_ddqn, rng);
    }
  }

  Policy       &commander() { return *commander_; }
  Policy       *agent() { return agent_.get(); }
  FeudalLayout const &layout() const { return layout_; }

  EpisodeMetrics run_episode(int index, std::mt19937_64 &rng, EpisodeOptions const &opt, TraceWriter *trace,
                             bool wallclock);

  /// One order for one agent on an otherwise agent-free map. Returns nullopt
  /// when the sampled start needs no work (the building is already clear).
  std::optional<bool> run_pretrain_episode(std::shared_ptr<Scenario const> const &solo, std::mt19937_64 &rng);

private:
  std::shared_ptr<Scenario const> scenario_;
  FeudalLayout                    layout_;
  std::unique_ptr<Policy>         commander_;
  std::unique_ptr<Policy>         agent_;
  ActionMask const                agent_mask_ = all_actions(kPrimitiveActionCount);
};

EpisodeMetrics FeudalSession::run_episode(int index, std::mt19937_64 &rng, EpisodeOptions const &opt,
                                          TraceWriter *trace, bool wallclock)
{
  auto const start = std::chrono::steady_clock::now();
  WorldState world = reset(scenario_, 0);
  auto const n = world.agents.size();
  OrderBook  book(layout_, static_cast<int>(n));
  CommanderRewardAccumulator reward;
  int                        decisions = 0;

  struct Pending
  {
    Obs        s;
    int        a;
  };
  std::optional<Pending> last;
  int                    resolved = 0;
  int                    completed = 0;
  double                 ret = 0.0;

  CommanderPolicy const policy = [&](CommanderObservation const &o) {
    return commander_->act(Obs{o.key, o.features}, o.mask, rng, opt.explore_commander);
  };
  auto record = [&](IssueResult const &issued) {
    for (auto const &dp : issued.decisions) {
      Obs s{dp.observation.key, dp.observation.features};
      if (last && opt.learn_commander) {
        commander_->push(last->s, last->a, dp.reward, s, false, dp.observation.mask, rng);
      }
      last = Pending{std::move(s), dp.action};
    }
  };

  if (!world.done) { record(issue_orders(world, book, {}, true, policy, reward, decisions, layout_)); }

  double                         arrived_reward = 0.0;
  std::vector<Event>             arrived_events;
  std::vector<PrimitiveAction>   actions(n);
  std::vector<std::optional<Obs>> before(n);
  std::vector<int>               chosen(n);
  bool const                     features = agent_ && agent_->wants_features();
  while (!world.done) {
    for (std::size_t i = 0; i < n; ++i) {
      actions[i] = PrimitiveAction::wait;
      before[i].reset();
      auto const &order = book.order(static_cast<int>(i));
      if (!world.agents[i].alive || !order) { continue; }
      auto const obs = encode_agent_obs(world, static_cast<int>(i), *order, layout_);
      if (!agent_) {
        actions[i] = scripted_agent_policy(obs);
        continue;
      }
      Obs s = observe(obs, features);
      chosen[i] = agent_->act(s, agent_mask_, rng, opt.explore_agents);
      actions[i] = static_cast<PrimitiveAction>(chosen[i]);
      if (opt.learn_agents) { before[i] = std::move(s); }
    }
    if (trace) { trace->write(trace_record(index, world, &book.orders(), actions, arrived_reward, arrived_events)); }

    auto const step = env_step(world, actions);
    ret += step.reward;
    reward.add(step.reward);
    arrived_reward = step.reward;
    arrived_events = step.events;

    auto resolutions = book.evaluate(world);
    bool const reissue = !world.done && std::any_of(resolutions.begin(), resolutions.end(),
                                                    [](Resolution const &r) { return !r.agent_died; });
    if (reissue) {
      auto closed = book.close_waits(world);
      resolutions.insert(resolutions.end(), closed.begin(), closed.end());
    }
    for (auto const &r : resolutions) {
      ++resolved;
      completed += r.outcome == OrderOutcome::completed ? 1 : 0;
    }

    for (std::size_t i = 0; i < n; ++i) {
      if (!before[i]) { continue; }
      auto const hit = std::find_if(resolutions.begin(), resolutions.end(),
                                    [&](Resolution const &r) { return r.agent == static_cast<int>(i); });
      if (hit != resolutions.end()) {
        agent_->push(*before[i], chosen[i], agent_reward(hit->outcome), *before[i], true, agent_mask_, rng);
      } else {
        // Still working on the order (possibly cut off by the end of the episode).
        auto const next = observe(encode_agent_obs(world, static_cast<int>(i), *book.order(static_cast<int>(i)),
                                                   layout_),
                                  features);
        agent_->push(*before[i], chosen[i], 0.0, next, false, agent_mask_, rng);
      }
    }

    if (!world.done) { record(issue_orders(world, book, resolutions, false, policy, reward, decisions, layout_)); }
  }
  if (trace) { trace->write(trace_record(index, world, &book.orders(), {}, arrived_reward, arrived_events)); }
  if (last && opt.learn_commander) {
    commander_->push(last->s, last->a, reward.take(), last->s, true, all_actions(layout_.order_slots()), rng);
  }

  EpisodeMetrics m;
  m.episode = index;
  m.ret = ret;
  fill_outcome(m, world);
  m.orders_issued = book.issued();
  m.order_success_rate = resolved ? static_cast<double>(completed) / resolved : 0.0;
  m.wallclock_ms = elapsed_ms(start, wallclock);
  return m;
}

std::optional<bool> FeudalSession::run_pretrain_episode(std::shared_ptr<Scenario const> const &solo,
                                                        std::mt19937_64 &rng)
{
  std::array<Coord, 1> const cells{sample_pretrain_spawn(*scenario_, rng)};
  WorldState                 world = reset_with_agents(solo, cells, 0);
  if (world.done) { return std::nullopt; }

  OrderBook  book(layout_, 1);
  auto const mask = order_space(world, 0, layout_);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(mask.count()) - 1);
  int                                k = pick(rng);
  int                                slot = 0;
  for (; slot < mask.size(); ++slot) {
    if (mask(slot) && k-- == 0) { break; }
  }
  book.assign(world, 0, slot);

  bool const features = agent_->wants_features();
  std::array<PrimitiveAction, 1> action{};
  while (!world.done) {
    Obs s = observe(encode_agent_obs(world, 0, *book.order(0), layout_), features);
    int const a = agent_->act(s, agent_mask_, rng, true);
    action[0] = static_cast<PrimitiveAction>(a);
    env_step(world, action);
    auto const resolutions = book.evaluate(world);
    if (!resolutions.empty()) {
      auto const outcome = resolutions.front().outcome;
      agent_->push(s, a, agent_reward(outcome), s, true, agent_mask_, rng);
      return outcome == OrderOutcome::completed;
    }
    auto const next = observe(encode_agent_obs(world, 0, *book.order(0), layout_), features);
    agent_->push(s, a, 0.0, next, false, agent_mask_, rng);
  }
  return false;
}

// Joint-action run ----------------------------------------------------------------------

class JointSession
{
public:
  JointSession(std::shared_ptr<Scenario const> scenario, Hyperparameters const &hp)
    : scenario_(std::move(scenario))
    , learner_(static_cast<int>(scenario_->agent_spawns.size()), joint_action_set(*scenario_), hp.commander_tabular)
  {
  }

  JointActionLearner &learner() { return learner_; }

  EpisodeMetrics run_episode(int index, std::mt19937_64 &rng, bool explore, bool learn, TraceWriter *trace,
                             bool wallclock)
  {
    auto const start = std::chrono::steady_clock::now();
    WorldState world = reset(scenario_, 0);
    StateKey   key = joint_state_key(world);
    double     ret = 0.0;
    double     arrived_reward = 0.0;
    std::vector<Event> arrived_events;
    while (!world.done) {
      int const  joint = learner_.act(key, rng, explore);
      auto const actions = learner_.decode(joint, world);
      if (trace) { trace->write(trace_record(index, world, nullptr, actions, arrived_reward, arrived_events)); }
      auto const step = env_step(world, actions);
      ret += step.reward;
      arrived_reward = step.reward;
      arrived_events = step.events;
      StateKey next = joint_state_key(world);
      if (learn) { learner_.push(KeyTransition{key, joint, step.reward, next, world.done, ActionMask{}}); }
      key = std::move(next);
    }
    if (trace) { trace->write(trace_record(index, world, nullptr, {}, arrived_reward, arrived_events)); }
    EpisodeMetrics m;
    m.episode = index;
    m.ret = ret;
    fill_outcome(m, world);
    m.wallclock_ms = elapsed_ms(start, wallclock);
    return m;
  }

private:
  std::shared_ptr<Scenario const> scenario_;
  JointActionLearner              learner_;
};

LearnerSnapshot scripted_snapshot() { return {LearnerSnapshot::Kind::scripted, std::nullopt, std::nullopt}; }

Checkpoint make_checkpoint(RunConfig const &config, std::uint64_t hash, std::int64_t episode)
{
  Checkpoint c;
  c.scenario_hash = hash;
  c.algo = std::string(to_string(config.algo));
  c.episode = episode;
  c.hyperparameters = config.hp;
  c.hyperparameters.emplace_back("agents_mode", std::string(to_string(config.agents_mode)));
  return c;
}

void check_hash(Checkpoint const &ckpt, std::uint64_t hash)
{
  if (ckpt.scenario_hash != hash) { throw ConfigError("checkpoint/scenario hash mismatch"); }
}

std::vector<std::pair<std::string, std::string>> without_agents_mode(
    std::vector<std::pair<std::string, std::string>> hp)
{
  std::erase_if(hp, [](auto const &kv) { return kv.first == "agents_mode"; });
  return hp;
}

EvalSummary evaluate_feudal(FeudalSession &session, RunConfig const &config, Hyperparameters const &hp, int episodes,
                            std::mt19937_64 &rng)
{
  std::optional<TraceWriter> trace;
  if (config.trace && !config.out.empty()) { trace.emplace(run_file(config, "-eval-trace.jsonl")); }
  EpisodeOptions const        greedy{false, false, false, false};
  std::vector<EpisodeMetrics> out;
  for (int e = 0; e < episodes; ++e) {
    out.push_back(session.run_episode(e, rng, greedy, trace ? &*trace : nullptr, hp.wallclock));
  }
  return summarize(out);
}

EvalSummary evaluate_joint(JointSession &session, RunConfig const &config, Hyperparameters const &hp, int episodes,
                           std::mt19937_64 &rng)
{
  std::optional<TraceWriter> trace;
  if (config.trace && !config.out.empty()) { trace.emplace(run_file(config, "-eval-trace.jsonl")); }
  std::vector<EpisodeMetrics> out;
  for (int e = 0; e < episodes; ++e) {
    out.push_back(session.run_episode(e, rng, false, false, trace ? &*trace : nullptr, hp.wallclock));
  }
  return summarize(out);
}

} // namespace

// Pretraining ---------------------------------------------------------------------------

Coord sample_pretrain_spawn(Scenario const &scenario, std::mt19937_64 &rng, int *room_out)
{
  auto const &plan = scenario.floorplan;
  auto taken = [&](Coord c) {
    return std::any_of(scenario.enemies.begin(), scenario.enemies.end(),
                       [&](EnemySpec const &e) { return e.spawn == c; }) ||
           std::find(scenario.civilians.begin(), scenario.civilians.end(), c) != scenario.civilians.end();
  };
  std::vector<std::vector<Coord>> free(plan.rooms.size());
  std::vector<int>                usable;
  for (auto const &room : plan.rooms) {
    for (auto c : room.cells) {
      if (!taken(c)) { free[room.id].push_back(c); }
    }
    if (!free[room.id].empty()) { usable.push_back(room.id); }
  }
  if (usable.empty()) { throw ConfigError("no free floor cell for pretraining spawns"); }
  std::uniform_int_distribution<std::size_t> pick_room(0, usable.size() - 1);
  int const                                  room = usable[pick_room(rng)];
  std::uniform_int_distribution<std::size_t> pick_cell(0, free[room].size() - 1);
  if (room_out) { *room_out = room; }
  return free[room][pick_cell(rng)];
}

namespace {

PretrainResult pretrain_into(FeudalSession &session, RunConfig const &config, Hyperparameters const &hp,
                             std::shared_ptr<Scenario const> const &scenario, int budget, std::mt19937_64 &rng)
{
  Scenario solo_spec = *scenario;
  solo_spec.agent_spawns.resize(1);
  auto const solo = std::make_shared<Scenario const>(std::move(solo_spec));

  PretrainResult   result;
  std::deque<bool> window;
  int              hits = 0;
  while (result.episodes < budget) {
    auto const outcome = session.run_pretrain_episode(solo, rng);
    ++result.episodes;
    if (!outcome) { continue; }
    window.push_back(*outcome);
    hits += *outcome ? 1 : 0;
    if (static_cast<int>(window.size()) > hp.pretrain_window) {
      hits -= window.front() ? 1 : 0;
      window.pop_front();
    }
    if (static_cast<int>(window.size()) == hp.pretrain_window) {
      result.success_rate = static_cast<double>(hits) / hp.pretrain_window;
      if (result.success_rate >= hp.pretrain_threshold) {
        result.reached = true;
        break;
      }
    }
  }
  if (!result.reached && !window.empty()) { result.success_rate = static_cast<double>(hits) / window.size(); }

  result.checkpoint = make_checkpoint(config, config_scenario_hash(config), result.episodes);
  result.checkpoint.agent = session.agent()->snapshot();
  if (!config.out.empty()) {
    result.checkpoint_path = config.out / (std::string(to_string(config.algo)) + "-" + std::to_string(config.seed) +
                                           "-pretrain-ep" + std::to_string(result.episodes) + ".ckpt");
    write_checkpoint(result.checkpoint_path, result.checkpoint);
  }
  return result;
}

} // namespace

PretrainResult pretrain_agents(RunConfig const &config)
{
  validate_config(config);
  if (config.algo == Algorithm::joint_tabular) { throw ConfigError("pretraining requires a feudal algorithm"); }
  auto const      hp = resolve_hyperparameters(config.hp);
  auto const      scenario = effective_scenario(config, hp);
  std::mt19937_64 rng(config.seed);
  FeudalSession   session(scenario, config.algo, false, hp, rng);
  return pretrain_into(session, config, hp, scenario, config.episodes, rng);
}

// Training ------------------------------------------------------------------------------

TrainingResult run_training(RunConfig const &config)
{
  validate_config(config);
  auto const      hp = resolve_hyperparameters(config.hp);
  auto const      scenario = effective_scenario(config, hp);
  auto const      hash = config_scenario_hash(config);
  std::mt19937_64 rng(config.seed);

  std::optional<MetricsWriter> metrics;
  std::optional<TraceWriter>   trace;
  if (!config.out.empty()) {
    metrics.emplace(run_file(config, "-metrics.csv"));
    if (config.trace) { trace.emplace(run_file(config, "-trace.jsonl")); }
  }

  TrainingResult result;
  auto after_episode = [&](EpisodeMetrics const &m, auto const &save) {
    result.metrics.push_back(m);
    if (metrics) { metrics->write(m); }
    if (trace) { trace->flush(); }
    if (hp.checkpoint_every > 0 && !config.out.empty() && (m.episode + 1) % hp.checkpoint_every == 0 &&
        m.episode + 1 < config.episodes) {
      write_checkpoint(checkpoint_path(config, m.episode + 1), save(m.episode + 1));
    }
  };

  if (config.algo == Algorithm::joint_tabular) {
    JointSession session(scenario, hp);
    auto         save = [&](std::int64_t episode) {
      auto c = make_checkpoint(config, hash, episode);
      c.commander = LearnerSnapshot{LearnerSnapshot::Kind::tabular, snapshot(session.learner().learner()),
                                    std::nullopt};
      return c;
    };
    for (int e = 0; e < config.episodes; ++e) {
      auto const m = session.run_episode(e, rng, true, true, trace ? &*trace : nullptr, hp.wallclock);
      auto const &l = session.learner().learner();
      result.commander_counters.push_back({l.pushes(), l.train_steps()});
      after_episode(m, save);
    }
    result.checkpoint = save(config.episodes);
    if (config.eval_episodes > 0) {
      result.eval = evaluate_joint(session, config, hp, config.eval_episodes, rng);
    }
  } else {
    bool const    scripted = config.agents_mode == AgentsMode::scripted;
    FeudalSession session(scenario, config.algo, scripted, hp, rng);
    if (config.agents_mode == AgentsMode::pretrain) {
      Checkpoint agents;
      if (!config.checkpoint.empty()) {
        agents = read_checkpoint(config.checkpoint);
        check_hash(agents, hash);
        if (!agents.agent) { throw ConfigError("checkpoint " + config.checkpoint.string() + " has no agent section"); }
      } else {
        agents = pretrain_into(session, config, hp, scenario, hp.pretrain_episodes, rng).checkpoint;
      }
      session.agent()->restore(*agents.agent);
    }
    EpisodeOptions opt;
    if (config.agents_mode != AgentsMode::learned) {
      opt.explore_agents = false;
      opt.learn_agents = false;
    }
    auto save = [&](std::int64_t episode) {
      auto c = make_checkpoint(config, hash, episode);
      c.commander = session.commander().snapshot();
      c.agent = session.agent() ? session.agent()->snapshot() : scripted_snapshot();
      return c;
    };
    for (int e = 0; e < config.episodes; ++e) {
      auto const m = session.run_episode(e, rng, opt, trace ? &*trace : nullptr, hp.wallclock);
      result.commander_counters.push_back(session.commander().counters());
      result.agent_counters.push_back(session.agent() ? session.agent()->counters() : LearnerCounters{});
      after_episode(m, save);
    }
    result.checkpoint = save(config.episodes);
    if (config.eval_episodes > 0) {
      result.eval = evaluate_feudal(session, config, hp, config.eval_episodes, rng);
    }
  }

  if (!config.out.empty()) {
    result.checkpoint_path = checkpoint_path(config, config.episodes);
    write_checkpoint(result.checkpoint_path, result.checkpoint);
  }
  return result;
}

// Evaluation ----------------------------------------------------------------------------

EvalSummary run_eval(RunConfig const &config, Checkpoint const &checkpoint)
{
  validate_config(config);
  auto const hash = config_scenario_hash(config);
  check_hash(checkpoint, hash);
  auto const algo = parse_algorithm(checkpoint.algo);
  if (!algo) { throw ConfigError("checkpoint names unknown algorithm " + checkpoint.algo); }

  RunConfig cfg = config;
  cfg.algo = *algo;
  cfg.hp = without_agents_mode(config.hp);
  auto const      hp = resolve_hyperparameters(cfg.hp);
  auto const      scenario = effective_scenario(cfg, hp);
  std::mt19937_64 rng(cfg.seed);
  int const       episodes = cfg.eval_episodes > 0 ? cfg.eval_episodes : 100;

  if (!checkpoint.commander) { throw ConfigError("checkpoint has no commander section"); }
  if (*algo == Algorithm::joint_tabular) {
    JointSession session(scenario, hp);
    if (checkpoint.commander->kind != LearnerSnapshot::Kind::tabular) {
      throw CheckpointError("joint checkpoint must hold a tabular learner");
    }
    restore(session.learner().learner(), *checkpoint.commander->tabular);
    return evaluate_joint(session, cfg, hp, episodes, rng);
  }
  bool const scripted = !checkpoint.agent || checkpoint.agent->kind == LearnerSnapshot::Kind::scripted;
  FeudalSession session(scenario, *algo, scripted, hp, rng);
  session.commander().restore(*checkpoint.commander);
  if (!scripted) { session.agent()->restore(*checkpoint.agent); }
  return evaluate_feudal(session, cfg, hp, episodes, rng);
}

EvalSummary run_eval(RunConfig const &config)
{
  if (config.checkpoint.empty()) { throw ConfigError("eval needs a checkpoint"); }
  return run_eval(config, read_checkpoint(config.checkpoint));
}

} // namespace roomclear
