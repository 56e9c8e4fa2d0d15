#pragma once

#include "primsim/common.hpp"
#include "primsim/synthetic.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace primsim {

enum class MicroAction : std::uint8_t {
  Forward,
  TurnLeft,
  TurnRight,
  Push,
  WipeCircular,
  WipeLine,
  PickSponge,
  Idle,
};

inline constexpr std::size_t kMicroActionCount = 8;

std::string_view to_string(MicroAction a);
MicroAction micro_action_from_string(std::string_view name);

/// A macro-action: fixed micro-action sequence with a class label. Option
/// order inside a library is the option id order used for tie-breaking.
struct OptionSpec {
  std::string id;
  std::string class_label;
  std::vector<MicroAction> micro_actions;

  std::size_t duration() const { return micro_actions.size(); }
  void validate(bool annotated) const;
};

using OptionLibrary = std::vector<OptionSpec>;

void validate_library(const OptionLibrary& library, bool annotated);

enum class Heading : std::uint8_t { North, East, South, West };

/// Row grows southwards, col grows eastwards.
struct Cell {
  int row = 0;
  int col = 0;
  bool operator==(const Cell&) const = default;
};

Cell ahead(Cell c, Heading h);
int manhattan(Cell a, Cell b);

struct StepResult {
  double reward = 0.0;
  bool done = false;
  bool success = false;
};

// ---------------------------------------------------------------- crate task

struct CrateRewards {
  double closer = 5.0;
  double away = -20.0;
  /// Charged when a step increases the agent's distance to the crate.
  double agent_away = -20.0;
  double per_action = -1.0;
  double goal = 1000.0;
  double speed_bonus = 1500.0;
};

struct CrateConfig {
  int rows = 6;
  int cols = 6;
  Cell goal{5, 5};
  /// The speed bonus is paid when the crate reaches the goal within this
  /// many micro-actions.
  int speed_cap = 40;
  /// Episode ends after this many micro-actions.
  int step_cap = 1000;
  CrateRewards rewards;
};

struct CrateState {
  Cell agent;
  Heading heading = Heading::North;
  Cell crate;
  Cell goal;
  /// Agent adjacent to the crate and facing it.
  bool hands_on_crate = false;
  /// Change of crate-to-goal distance caused by the last micro-action.
  int crate_displacement = 0;
  int steps = 0;
};

struct CrateStep {
  CrateState state;
  StepResult result;
};

/// Deterministic crate dynamics. Forward moves one cell unless blocked by the
/// border or the crate; push moves the crate one cell along the heading when
/// the agent faces it and the cell beyond is free, and the agent follows.
/// Actions that do not apply are no-ops costing the per-action reward.
CrateStep crate_step(const CrateConfig& config, const CrateState& state, MicroAction action);

// ----------------------------------------------------------------- wipe task

struct WipeRewards {
  double find_sponge = 100.0;
  double wipe = 10.0;
  double hard_section = 150.0;
  double per_action = -1.0;
  double move_away = -50.0;
  double drop_sponge = -250.0;
  double clear = 1000.0;
  double time_bonus = 1500.0;
};

/// The surface runs along the northern border: the agent wipes column c
/// while standing in row 0, column c, facing north.
struct WipeConfig {
  int rows = 4;
  int cols = 5;
  int speed_cap = 60;
  int step_cap = 1000;
  WipeRewards rewards;
};

struct WipeState {
  Cell agent;
  Heading heading = Heading::North;
  bool holding = false;
  Cell sponge;
  /// Dirt level per surface section, each in [0, 3].
  std::vector<int> dirt;
  /// Sections that started at level 3.
  std::vector<bool> hard;
  int steps = 0;
};

struct WipeStep {
  WipeState state;
  StepResult result;
};

/// Deterministic wipe dynamics. Picking the sponge while holding it drops it
/// in place. Moving away from the surface while holding costs move_away.
/// Either wipe stroke lowers the faced section by one level.
WipeStep wipe_step(const WipeConfig& config, const WipeState& state, MicroAction action);

// --------------------------------------------------------------- environments

class Environment {
 public:
  virtual ~Environment() = default;
  /// Draws a random start state.
  virtual void reset(std::mt19937_64& rng) = 0;
  virtual StepResult step(MicroAction action) = 0;
  /// Discretized state used as the Q-table key.
  virtual std::uint64_t state_key() const = 0;
  virtual std::string task() const = 0;
};

/// State key: agent-to-crate and crate-to-goal offsets, each axis clamped to
/// [-2, 2] and stored shifted by 2 (3 bits each), then heading (2 bits) and
/// the hands-on-crate flag (1 bit).
class CrateEnvironment final : public Environment {
 public:
  explicit CrateEnvironment(CrateConfig config = {});
  void reset(std::mt19937_64& rng) override;
  StepResult step(MicroAction action) override;
  std::uint64_t state_key() const override;
  std::string task() const override { return "crate"; }

  const CrateState& state() const { return state_; }
  void set_state(const CrateState& state);
  const CrateConfig& config() const { return config_; }

 private:
  CrateConfig config_;
  CrateState state_;
};

/// State key: agent cell (4 bits each), heading (2 bits), holding flag,
/// sponge cell (4 bits each, zero while held), 2 bits of dirt per section.
class WipeEnvironment final : public Environment {
 public:
  explicit WipeEnvironment(WipeConfig config = {});
  void reset(std::mt19937_64& rng) override;
  StepResult step(MicroAction action) override;
  std::uint64_t state_key() const override;
  std::string task() const override { return "wipe"; }

  const WipeState& state() const { return state_; }
  void set_state(const WipeState& state);
  const WipeConfig& config() const { return config_; }

 private:
  WipeConfig config_;
  WipeState state_;
};

using EnvironmentFactory = std::function<std::unique_ptr<Environment>()>;

// ------------------------------------------------------------------- options

struct OptionOutcome {
  /// Sum of gamma^t r_t over the executed micro-actions.
  double discounted = 0.0;
  double undiscounted = 0.0;
  std::size_t duration = 0;
  bool done = false;
  bool success = false;
  std::vector<double> step_rewards;
};

/// Runs the option's micro-actions in order, stopping early when the episode
/// ends.
OptionOutcome execute_option(Environment& env, const OptionSpec& option, double gamma);

/// Walk, turn, push and sidestep classes are task relevant; wipe, sponge,
/// idle and gesture classes are distractors.
OptionLibrary crate_option_library();
std::vector<std::string> crate_relevant_classes();

OptionLibrary wipe_option_library();
std::vector<std::string> wipe_relevant_classes();

/// One single-step option per micro-action, all in class "micro".
OptionLibrary micro_option_library();

/// Every option repeated `copies` times inside its class (ids suffixed #k).
OptionLibrary duplicate_options(const OptionLibrary& library, std::size_t copies);
OptionLibrary remove_classes(const OptionLibrary& library, const std::vector<std::string>& classes);

struct OptionCorruption {
  OptionLibrary library;
  std::vector<std::string> corrupted_ids;
};

/// Relabels option classes with the same exact-count semantics as
/// corrupt_labels.
OptionCorruption corrupt_option_labels(const OptionLibrary& library, double rate,
                                       CorruptionMode mode,
                                       const std::vector<std::string>& targets,
                                       std::uint64_t seed);

// ------------------------------------------------------------------ learning

class QTable {
 public:
  explicit QTable(std::size_t options = 0) : options_(options) {}

  std::size_t options() const { return options_; }
  std::size_t states() const { return rows_.size(); }

  double value(std::uint64_t state, std::size_t option) const;
  std::uint32_t visits(std::uint64_t state, std::size_t option) const;
  /// 0 for unseen states.
  double max_value(std::uint64_t state) const;
  void set(std::uint64_t state, std::size_t option, double value);
  void visit(std::uint64_t state, std::size_t option);
  void set_visits(std::uint64_t state, std::size_t option, std::uint32_t count);

  /// Known state keys in ascending order.
  std::vector<std::uint64_t> keys() const;

 private:
  struct Row {
    std::vector<double> q;
    std::vector<std::uint32_t> n;
  };
  Row& row(std::uint64_t state);
  const Row* find(std::uint64_t state) const;

  std::size_t options_;
  std::unordered_map<std::uint64_t, Row> rows_;
};

/// Q(s,o) += alpha [R + gamma^tau max Q(s',.) - Q(s,o)]; the bootstrap term
/// is dropped when s' is terminal.
void smdp_update(QTable& q, std::uint64_t s, std::size_t o, double reward, std::size_t tau,
                 std::uint64_t s_next, double alpha, double gamma, bool terminal = false);

/// One-step Q-learning, kept separate so the tau = 1 reduction can be checked.
void q_learning_update(QTable& q, std::uint64_t s, std::size_t a, double reward,
                       std::uint64_t s_next, double alpha, double gamma, bool terminal = false);

enum class SelectionMode { Annotated, Flat };

std::string_view to_string(SelectionMode mode);
SelectionMode selection_mode_from_string(std::string_view name);

/// Classes in order of their first option.
struct OptionClasses {
  std::vector<std::string> labels;
  std::vector<std::vector<std::size_t>> members;

  explicit OptionClasses(const OptionLibrary& library);
};

/// A class is masked in a state when at least one of its options has been
/// tried min_visits times and every option tried that often has Q below
/// threshold. When every class is masked none is.
struct MaskConfig {
  bool enabled = true;
  double threshold = 0.0;
  std::uint32_t min_visits = 3;
};

std::vector<bool> class_mask(const QTable& q, std::uint64_t state, const OptionClasses& classes,
                             const MaskConfig& mask);

/// Annotated: epsilon-greedy over classes, the greedy branch ranking the
/// unmasked classes by their best Q, then epsilon-greedy inside the class. Flat: epsilon-greedy over all
/// options. Greedy ties go to the lowest option index.
std::size_t select_option(const QTable& q, std::uint64_t state, const OptionClasses& classes,
                          SelectionMode mode, double epsilon, std::mt19937_64& rng,
                          const MaskConfig& mask = {});

struct LearnConfig {
  double gamma = 0.8;
  double alpha_exponent = 0.85;
  double alpha_min = 1e-4;
  double alpha_max = 1.0;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  std::size_t episodes = 1000;
  std::size_t max_macro_actions = 100;
  MaskConfig mask;
  std::uint64_t seed = 0;

  void validate() const;
  /// clamp((1 + visits)^-exponent, alpha_min, alpha_max).
  double alpha(std::uint32_t visits) const;
  /// Linear from epsilon_start at the first episode to epsilon_end at the last.
  double epsilon(std::size_t episode) const;
};

struct CurvePoint {
  std::size_t episode = 0;
  double reward = 0.0;
  double epsilon = 0.0;
  /// Mean learning rate of the episode's updates.
  double alpha = 0.0;
  std::size_t macro_actions = 0;
  std::size_t micro_actions = 0;
  bool success = false;
};

struct TrainResult {
  std::vector<CurvePoint> curve;
  QTable q;
  /// Greedy option index per known state key.
  std::vector<std::pair<std::uint64_t, std::size_t>> policy;
};

struct EpisodeStep {
  std::size_t option = 0;
  std::uint64_t state = 0;
  std::vector<double> micro_rewards;
  /// Undiscounted sum of micro_rewards.
  double option_return = 0.0;
};

struct EpisodeLog {
  std::vector<EpisodeStep> steps;
  double total_reward = 0.0;
  bool success = false;
};

TrainResult train(Environment& env, const OptionLibrary& library, const LearnConfig& config,
                  SelectionMode mode);

/// Runs one episode with a fixed table and exploration rate, no learning.
EpisodeLog run_episode(Environment& env, const OptionLibrary& library, const QTable& q,
                       SelectionMode mode, double epsilon, std::size_t max_macro_actions,
                       double gamma, std::mt19937_64& rng, const MaskConfig& mask = {});

/// Independent training runs, one per seed (seed replaces config.seed).
std::vector<TrainResult> train_many(const EnvironmentFactory& make_env,
                                    const OptionLibrary& library, const LearnConfig& config,
                                    SelectionMode mode, const std::vector<std::uint64_t>& seeds,
                                    int jobs);

/// Mean reward over the last `window` episodes (all when fewer).
double final_reward(const std::vector<CurvePoint>& curve, std::size_t window = 100);
/// Mean reward over the whole curve.
double area_under_curve(const std::vector<CurvePoint>& curve);
std::size_t successes(const std::vector<CurvePoint>& curve, std::size_t window = 100);

// ---------------------------------------------------------- tabular checks

/// Deterministic SMDP given by its option outcomes: options[s][o].
struct SmdpTransition {
  std::size_t next = 0;
  double reward = 0.0;
  std::size_t duration = 1;
  bool terminal = false;
};

struct TabularSmdp {
  std::vector<std::vector<SmdpTransition>> options;

  void validate() const;
};

/// Optimal Q by value iteration, iterated until the sup-norm change is below tol.
std::vector<std::vector<double>> value_iteration(const TabularSmdp& smdp, double gamma,
                                                 double tol = 1e-13,
                                                 std::size_t max_sweeps = 100000);

/// Q-learning on the SMDP from uniformly drawn (state, option) pairs using
/// the configured learning-rate schedule.
QTable learn_tabular(const TabularSmdp& smdp, const LearnConfig& config, std::size_t updates);

/// Greedy option per state, ties to the lowest index.
std::vector<std::size_t> greedy_policy(const std::vector<std::vector<double>>& q);
std::vector<std::size_t> greedy_policy(const QTable& q, const TabularSmdp& smdp);

}  // namespace primsim
