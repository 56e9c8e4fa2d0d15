#include "primsim/rl.hpp"

#include "primsim/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>

namespace primsim {

namespace {

constexpr std::array<std::string_view, kMicroActionCount> kMicroNames = {
    "forward", "turn-left", "turn-right", "push", "wipe-circular", "wipe-line", "pick-sponge", "idle"};

Heading turn_left(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 3) % 4); }
Heading turn_right(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 1) % 4); }

bool inside(Cell c, int rows, int cols) { return c.row >= 0 && c.row < rows && c.col >= 0 && c.col < cols; }

void check_grid(int rows, int cols, const char* task) {
  if (rows < 2 || cols < 2 || rows > 8 || cols > 8)
    throw InvalidArgument(std::string(task) + " grid must be between 2x2 and 8x8");
}

Cell random_cell(std::mt19937_64& rng, int r0, int r1, int c0, int c1) {
  std::uniform_int_distribution<int> row(r0, r1);
  std::uniform_int_distribution<int> col(c0, c1);
  const int r = row(rng);
  return {r, col(rng)};
}

Heading random_heading(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> h(0, 3);
  return static_cast<Heading>(h(rng));
}

std::uint64_t u(int v) { return static_cast<std::uint64_t>(v); }

// Offset buckets -2..2: sign times min(|d|, 2).
int bucket(int d) { return d < 0 ? -std::min(-d, 2) : std::min(d, 2); }

}  // namespace

std::string_view to_string(MicroAction a) { return kMicroNames.at(static_cast<std::size_t>(a)); }

MicroAction micro_action_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kMicroNames.size(); ++i) {
    if (kMicroNames[i] == name) return static_cast<MicroAction>(i);
  }
  throw InvalidArgument("unknown micro-action '" + std::string(name) + "'");
}

void OptionSpec::validate(bool annotated) const {
  if (id.empty()) throw InvalidArgument("option id must be non-empty");
  if (micro_actions.empty()) throw InvalidArgument("option '" + id + "' has no micro-actions");
  if (annotated && class_label.empty())
    throw InvalidArgument("option '" + id + "' needs a class label in annotated mode");
}

void validate_library(const OptionLibrary& library, bool annotated) {
  if (library.empty()) throw InvalidArgument("option library is empty");
  std::set<std::string> ids;
  for (const auto& o : library) {
    o.validate(annotated);
    if (!ids.insert(o.id).second) throw InvalidArgument("duplicate option id '" + o.id + "'");
  }
}

Cell ahead(Cell c, Heading h) {
  switch (h) {
    case Heading::North: return {c.row - 1, c.col};
    case Heading::East: return {c.row, c.col + 1};
    case Heading::South: return {c.row + 1, c.col};
    case Heading::West: return {c.row, c.col - 1};
  }
  return c;
}

int manhattan(Cell a, Cell b) { return std::abs(a.row - b.row) + std::abs(a.col - b.col); }

CrateStep crate_step(const CrateConfig& config, const CrateState& state, MicroAction action) {
  const auto& rw = config.rewards;
  CrateStep out{state, {}};
  CrateState& n = out.state;
  double r = rw.per_action;
  n.steps = state.steps + 1;
  const int before = manhattan(state.crate, state.goal);
  switch (action) {
    case MicroAction::Forward: {
      const Cell next = ahead(n.agent, n.heading);
      if (inside(next, config.rows, config.cols) && !(next == n.crate)) n.agent = next;
      break;
    }
    case MicroAction::TurnLeft: n.heading = turn_left(n.heading); break;
    case MicroAction::TurnRight: n.heading = turn_right(n.heading); break;
    case MicroAction::Push: {
      const Cell front = ahead(n.agent, n.heading);
      if (front == n.crate) {
        const Cell beyond = ahead(n.crate, n.heading);
        if (inside(beyond, config.rows, config.cols)) {
          n.crate = beyond;
          n.agent = front;
        }
      }
      break;
    }
    default: break;
  }
  const int after = manhattan(n.crate, n.goal);
  n.crate_displacement = after - before;
  if (after < before) r += rw.closer;
  if (after > before) r += rw.away;
  if (manhattan(n.agent, n.crate) > manhattan(state.agent, state.crate)) r += rw.agent_away;
  n.hands_on_crate = ahead(n.agent, n.heading) == n.crate;
  if (n.crate == n.goal) {
    r += rw.goal;
    if (n.steps <= config.speed_cap) r += rw.speed_bonus;
    out.result.done = true;
    out.result.success = true;
  } else if (n.steps >= config.step_cap) {
    out.result.done = true;
  }
  out.result.reward = r;
  return out;
}

WipeStep wipe_step(const WipeConfig& config, const WipeState& state, MicroAction action) {
  const auto& rw = config.rewards;
  WipeStep out{state, {}};
  WipeState& n = out.state;
  double r = rw.per_action;
  n.steps = state.steps + 1;
  switch (action) {
    case MicroAction::Forward: {
      const Cell next = ahead(n.agent, n.heading);
      if (inside(next, config.rows, config.cols)) {
        if (n.holding && next.row > n.agent.row) r += rw.move_away;
        n.agent = next;
      }
      break;
    }
    case MicroAction::TurnLeft: n.heading = turn_left(n.heading); break;
    case MicroAction::TurnRight: n.heading = turn_right(n.heading); break;
    case MicroAction::WipeCircular:
    case MicroAction::WipeLine: {
      auto& level = n.dirt[static_cast<std::size_t>(n.agent.col)];
      if (n.holding && n.agent.row == 0 && n.heading == Heading::North && level > 0) {
        --level;
        r += rw.wipe;
        if (level == 0 && n.hard[static_cast<std::size_t>(n.agent.col)]) r += rw.hard_section;
      }
      break;
    }
    case MicroAction::PickSponge:
      if (n.holding) {
        n.holding = false;
        n.sponge = n.agent;
        r += rw.drop_sponge;
      } else if (n.agent == n.sponge) {
        n.holding = true;
        r += rw.find_sponge;
      }
      break;
    default: break;
  }
  if (std::all_of(n.dirt.begin(), n.dirt.end(), [](int d) { return d == 0; })) {
    r += rw.clear;
    if (n.steps <= config.speed_cap) r += rw.time_bonus;
    out.result.done = true;
    out.result.success = true;
  } else if (n.steps >= config.step_cap) {
    out.result.done = true;
  }
  out.result.reward = r;
  return out;
}

CrateEnvironment::CrateEnvironment(CrateConfig config) : config_(config) {
  check_grid(config_.rows, config_.cols, "crate");
  if (!inside(config_.goal, config_.rows, config_.cols)) throw InvalidArgument("crate goal outside the grid");
  if (config_.rows < 3 || config_.cols < 3) throw InvalidArgument("crate grid must be at least 3x3");
  state_.goal = config_.goal;
}

void CrateEnvironment::reset(std::mt19937_64& rng) {
  CrateState s;
  s.goal = config_.goal;
  do {
    s.crate = random_cell(rng, 1, config_.rows - 2, 1, config_.cols - 2);
  } while (s.crate == s.goal);
  do {
    s.agent = random_cell(rng, 0, config_.rows - 1, 0, config_.cols - 1);
  } while (s.agent == s.crate);
  s.heading = random_heading(rng);
  s.hands_on_crate = ahead(s.agent, s.heading) == s.crate;
  state_ = s;
}

StepResult CrateEnvironment::step(MicroAction action) {
  auto out = crate_step(config_, state_, action);
  state_ = out.state;
  return out.result;
}

std::uint64_t CrateEnvironment::state_key() const {
  const auto& s = state_;
  std::uint64_t k = u(bucket(s.crate.row - s.agent.row) + 2);
  k = (k << 3) | u(bucket(s.crate.col - s.agent.col) + 2);
  k = (k << 3) | u(bucket(s.goal.row - s.crate.row) + 2);
  k = (k << 3) | u(bucket(s.goal.col - s.crate.col) + 2);
  k = (k << 2) | static_cast<std::uint64_t>(s.heading);
  k = (k << 1) | (s.hands_on_crate ? 1U : 0U);
  return k;
}

void CrateEnvironment::set_state(const CrateState& state) {
  if (!inside(state.agent, config_.rows, config_.cols) || !inside(state.crate, config_.rows, config_.cols))
    throw InvalidArgument("crate state outside the grid");
  if (state.agent == state.crate) throw InvalidArgument("agent and crate share a cell");
  state_ = state;
  state_.goal = config_.goal;
  state_.hands_on_crate = ahead(state_.agent, state_.heading) == state_.crate;
}

WipeEnvironment::WipeEnvironment(WipeConfig config) : config_(config) {
  check_grid(config_.rows, config_.cols, "wipe");
}

void WipeEnvironment::reset(std::mt19937_64& rng) {
  WipeState s;
  s.agent = random_cell(rng, 0, config_.rows - 1, 0, config_.cols - 1);
  do {
    s.sponge = random_cell(rng, 0, config_.rows - 1, 0, config_.cols - 1);
  } while (s.sponge == s.agent);
  s.heading = random_heading(rng);
  std::uniform_int_distribution<int> level(1, 3);
  for (int c = 0; c < config_.cols; ++c) {
    s.dirt.push_back(level(rng));
    s.hard.push_back(s.dirt.back() == 3);
  }
  state_ = s;
}

StepResult WipeEnvironment::step(MicroAction action) {
  auto out = wipe_step(config_, state_, action);
  state_ = std::move(out.state);
  return out.result;
}

std::uint64_t WipeEnvironment::state_key() const {
  const auto& s = state_;
  std::uint64_t k = u(s.agent.row);
  k = (k << 4) | u(s.agent.col);
  k = (k << 2) | static_cast<std::uint64_t>(s.heading);
  k = (k << 1) | (s.holding ? 1U : 0U);
  k = (k << 4) | (s.holding ? 0U : u(s.sponge.row));
  k = (k << 4) | (s.holding ? 0U : u(s.sponge.col));
  for (int d : s.dirt) k = (k << 2) | u(d);
  return k;
}

void WipeEnvironment::set_state(const WipeState& state) {
  if (!inside(state.agent, config_.rows, config_.cols) || !inside(state.sponge, config_.rows, config_.cols))
    throw InvalidArgument("wipe state outside the grid");
  if (state.dirt.size() != static_cast<std::size_t>(config_.cols) || state.hard.size() != state.dirt.size())
    throw InvalidArgument("wipe state needs one dirt level per section");
  for (int d : state.dirt) {
    if (d < 0 || d > 3) throw InvalidArgument("dirt levels must lie in [0, 3]");
  }
  state_ = state;
}

OptionOutcome execute_option(Environment& env, const OptionSpec& option, double gamma) {
  OptionOutcome out;
  double discount = 1.0;
  for (MicroAction a : option.micro_actions) {
    const StepResult r = env.step(a);
    out.discounted += discount * r.reward;
    out.undiscounted += r.reward;
    out.step_rewards.push_back(r.reward);
    discount *= gamma;
    ++out.duration;
    if (r.done) {
      out.done = true;
      out.success = r.success;
      break;
    }
  }
  return out;
}

namespace {

using MA = MicroAction;

void add(OptionLibrary& lib, std::string id, std::string cls, std::vector<MicroAction> acts) {
  lib.push_back({std::move(id), std::move(cls), std::move(acts)});
}

void add_walk_turn(OptionLibrary& lib) {
  add(lib, "walk-1", "walk", {MA::Forward});
  add(lib, "walk-2", "walk", {MA::Forward, MA::Forward});
  add(lib, "walk-3", "walk", {MA::Forward, MA::Forward, MA::Forward});
  add(lib, "turn-left", "turn", {MA::TurnLeft});
  add(lib, "turn-right", "turn", {MA::TurnRight});
  add(lib, "turn-around", "turn", {MA::TurnLeft, MA::TurnLeft});
}

// Every sequence over `alphabet` with length in [1, max_len], named
// prefix-<letters>.
void add_variants(OptionLibrary& lib, const std::string& cls, const std::string& prefix,
                  const std::vector<std::pair<char, MicroAction>>& alphabet, std::size_t max_len) {
  std::vector<std::size_t> digits;
  for (std::size_t len = 1; len <= max_len; ++len) {
    digits.assign(len, 0);
    while (true) {
      std::string name = prefix + "-";
      std::vector<MicroAction> acts;
      for (std::size_t d : digits) {
        name += alphabet[d].first;
        acts.push_back(alphabet[d].second);
      }
      add(lib, name, cls, acts);
      std::size_t i = len;
      while (i > 0 && ++digits[i - 1] == alphabet.size()) digits[--i] = 0;
      if (i == 0) break;
    }
  }
}

void add_idle_gesture(OptionLibrary& lib) {
  for (std::size_t n = 1; n <= 4; ++n)
    add(lib, "idle-" + std::to_string(n), "idle", std::vector<MicroAction>(n, MA::Idle));
  add(lib, "nod", "gesture", {MA::TurnLeft, MA::TurnRight});
  add(lib, "look-around", "gesture", {MA::TurnRight, MA::TurnLeft});
  add(lib, "fidget", "gesture", {MA::TurnLeft, MA::TurnRight, MA::TurnRight, MA::TurnLeft});
  add(lib, "sway", "gesture", {MA::TurnRight, MA::TurnLeft, MA::TurnLeft, MA::TurnRight});
  add(lib, "glance-left", "gesture", {MA::TurnLeft, MA::Idle, MA::TurnRight});
  add(lib, "glance-right", "gesture", {MA::TurnRight, MA::Idle, MA::TurnLeft});
  add(lib, "shuffle", "gesture", {MA::Idle, MA::TurnLeft, MA::TurnRight});
  add(lib, "stretch", "gesture", {MA::Idle, MA::TurnRight, MA::TurnLeft});
}

}  // namespace

OptionLibrary crate_option_library() {
  OptionLibrary lib;
  add_walk_turn(lib);
  add(lib, "push-1", "push", {MA::Push});
  add(lib, "push-2", "push", {MA::Push, MA::Push});
  add(lib, "push-3", "push", {MA::Push, MA::Push, MA::Push});
  add(lib, "sidestep-left", "sidestep", {MA::TurnLeft, MA::Forward, MA::TurnRight});
  add(lib, "sidestep-right", "sidestep", {MA::TurnRight, MA::Forward, MA::TurnLeft});
  add(lib, "circle-left", "sidestep",
      {MA::TurnLeft, MA::Forward, MA::TurnRight, MA::Forward, MA::TurnRight});
  add(lib, "circle-right", "sidestep",
      {MA::TurnRight, MA::Forward, MA::TurnLeft, MA::Forward, MA::TurnLeft});
  add_variants(lib, "wipe", "wipe", {{'c', MA::WipeCircular}, {'l', MA::WipeLine}}, 3);
  add(lib, "pick-sponge", "sponge", {MA::PickSponge});
  add(lib, "pick-twice", "sponge", {MA::PickSponge, MA::PickSponge});
  add(lib, "reach-sponge", "sponge", {MA::PickSponge, MA::Idle});
  add(lib, "lift-sponge", "sponge", {MA::Idle, MA::PickSponge});
  add(lib, "squeeze-sponge", "sponge", {MA::PickSponge, MA::Idle, MA::Idle});
  add(lib, "inspect-sponge", "sponge", {MA::Idle, MA::Idle, MA::PickSponge});
  add_idle_gesture(lib);
  return lib;
}

std::vector<std::string> crate_relevant_classes() { return {"walk", "turn", "push", "sidestep"}; }

OptionLibrary wipe_option_library() {
  OptionLibrary lib;
  add_walk_turn(lib);
  add_variants(lib, "wipe", "wipe", {{'c', MA::WipeCircular}, {'l', MA::WipeLine}}, 3);
  add(lib, "pick-sponge", "sponge", {MA::PickSponge});
  add(lib, "push-1", "push", {MA::Push});
  add(lib, "push-2", "push", {MA::Push, MA::Push});
  add(lib, "push-3", "push", {MA::Push, MA::Push, MA::Push});
  add_idle_gesture(lib);
  return lib;
}

std::vector<std::string> wipe_relevant_classes() { return {"walk", "turn", "wipe", "sponge"}; }

OptionLibrary micro_option_library() {
  OptionLibrary lib;
  for (std::size_t i = 0; i < kMicroActionCount; ++i) {
    const auto a = static_cast<MicroAction>(i);
    add(lib, std::string(to_string(a)), "micro", {a});
  }
  return lib;
}

OptionLibrary duplicate_options(const OptionLibrary& library, std::size_t copies) {
  if (copies == 0) throw InvalidArgument("copies must be at least 1");
  OptionLibrary out;
  for (const auto& o : library) {
    for (std::size_t k = 0; k < copies; ++k) {
      OptionSpec c = o;
      if (k > 0) c.id += "#" + std::to_string(k);
      out.push_back(std::move(c));
    }
  }
  return out;
}

OptionLibrary remove_classes(const OptionLibrary& library, const std::vector<std::string>& classes) {
  OptionLibrary out;
  for (const auto& o : library) {
    if (std::find(classes.begin(), classes.end(), o.class_label) == classes.end()) out.push_back(o);
  }
  return out;
}

OptionCorruption corrupt_option_labels(const OptionLibrary& library, double rate, CorruptionMode mode,
                                       const std::vector<std::string>& targets, std::uint64_t seed) {
  std::vector<std::string> labels;
  for (const auto& o : library) labels.push_back(o.class_label);
  OptionCorruption out{library, {}};
  for (const auto& [index, label] : plan_label_corruption(labels, rate, mode, targets, seed)) {
    out.library[index].class_label = label;
    out.corrupted_ids.push_back(library[index].id);
  }
  return out;
}

// --------------------------------------------------------------------- QTable

const QTable::Row* QTable::find(std::uint64_t state) const {
  auto it = rows_.find(state);
  return it == rows_.end() ? nullptr : &it->second;
}

QTable::Row& QTable::row(std::uint64_t state) {
  auto [it, inserted] = rows_.try_emplace(state);
  if (inserted) {
    it->second.q.assign(options_, 0.0);
    it->second.n.assign(options_, 0);
  }
  return it->second;
}

double QTable::value(std::uint64_t state, std::size_t option) const {
  const Row* r = find(state);
  return r ? r->q.at(option) : 0.0;
}

std::uint32_t QTable::visits(std::uint64_t state, std::size_t option) const {
  const Row* r = find(state);
  return r ? r->n.at(option) : 0;
}

double QTable::max_value(std::uint64_t state) const {
  const Row* r = find(state);
  if (!r || r->q.empty()) return 0.0;
  return *std::max_element(r->q.begin(), r->q.end());
}

void QTable::set(std::uint64_t state, std::size_t option, double value) {
  if (option >= options_) throw InvalidArgument("option index out of range");
  if (!std::isfinite(value)) throw InvalidArgument("Q values must be finite");
  row(state).q[option] = value;
}

void QTable::visit(std::uint64_t state, std::size_t option) {
  if (option >= options_) throw InvalidArgument("option index out of range");
  ++row(state).n[option];
}

void QTable::set_visits(std::uint64_t state, std::size_t option, std::uint32_t count) {
  if (option >= options_) throw InvalidArgument("option index out of range");
  row(state).n[option] = count;
}

std::vector<std::uint64_t> QTable::keys() const {
  std::vector<std::uint64_t> k;
  k.reserve(rows_.size());
  for (const auto& [key, r] : rows_) k.push_back(key);
  std::sort(k.begin(), k.end());
  return k;
}

void smdp_update(QTable& q, std::uint64_t s, std::size_t o, double reward, std::size_t tau,
                 std::uint64_t s_next, double alpha, double gamma, bool terminal) {
  if (tau < 1) throw InvalidArgument("option duration must be at least 1");
  const double bootstrap = terminal ? 0.0 : std::pow(gamma, static_cast<double>(tau)) * q.max_value(s_next);
  const double old = q.value(s, o);
  q.set(s, o, old + alpha * (reward + bootstrap - old));
}

void q_learning_update(QTable& q, std::uint64_t s, std::size_t a, double reward, std::uint64_t s_next,
                       double alpha, double gamma, bool terminal) {
  const double target = reward + (terminal ? 0.0 : gamma * q.max_value(s_next));
  const double old = q.value(s, a);
  q.set(s, a, old + alpha * (target - old));
}

std::string_view to_string(SelectionMode mode) {
  return mode == SelectionMode::Annotated ? "annotated" : "flat";
}

SelectionMode selection_mode_from_string(std::string_view name) {
  if (name == "annotated") return SelectionMode::Annotated;
  if (name == "flat") return SelectionMode::Flat;
  throw InvalidArgument("unknown selection mode '" + std::string(name) + "'");
}

OptionClasses::OptionClasses(const OptionLibrary& library) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < library.size(); ++i) {
    auto [it, inserted] = index.try_emplace(library[i].class_label, labels.size());
    if (inserted) {
      labels.push_back(library[i].class_label);
      members.emplace_back();
    }
    members[it->second].push_back(i);
  }
}

std::vector<bool> class_mask(const QTable& q, std::uint64_t state, const OptionClasses& classes,
                             const MaskConfig& mask) {
  std::vector<bool> masked(classes.labels.size(), false);
  if (!mask.enabled) return masked;
  bool all = true;
  for (std::size_t c = 0; c < classes.members.size(); ++c) {
    bool tried = false;
    bool below = true;
    for (std::size_t o : classes.members[c]) {
      if (q.visits(state, o) >= mask.min_visits) {
        tried = true;
        if (q.value(state, o) >= mask.threshold) below = false;
      }
    }
    masked[c] = tried && below;
    all = all && masked[c];
  }
  if (all) masked.assign(masked.size(), false);
  return masked;
}

namespace {

// Lowest index among the maximizers.
std::size_t argmax_of(const QTable& q, std::uint64_t state, const std::vector<std::size_t>& options) {
  std::size_t best = options.front();
  double best_q = q.value(state, best);
  for (std::size_t o : options) {
    const double v = q.value(state, o);
    if (v > best_q || (v == best_q && o < best)) {
      best = o;
      best_q = v;
    }
  }
  return best;
}

template <typename T>
const T& pick_uniform(const std::vector<T>& items, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, items.size() - 1);
  return items[d(rng)];
}

std::vector<std::size_t> all_options(const OptionClasses& classes) {
  std::vector<std::size_t> out;
  for (const auto& m : classes.members) out.insert(out.end(), m.begin(), m.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::size_t select_option(const QTable& q, std::uint64_t state, const OptionClasses& classes,
                          SelectionMode mode, double epsilon, std::mt19937_64& rng,
                          const MaskConfig& mask) {
  if (classes.members.empty()) throw InvalidArgument("option library is empty");
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (mode == SelectionMode::Flat) {
    const auto options = all_options(classes);
    if (coin(rng) < epsilon) return pick_uniform(options, rng);
    return argmax_of(q, state, options);
  }

  std::size_t cls = 0;
  if (coin(rng) < epsilon) {
    std::vector<std::size_t> all(classes.members.size());
    for (std::size_t c = 0; c < all.size(); ++c) all[c] = c;
    cls = pick_uniform(all, rng);
  } else {
    const auto masked = class_mask(q, state, classes, mask);
    std::size_t best_option = 0;
    double best_q = 0.0;
    bool first = true;
    for (std::size_t c = 0; c < masked.size(); ++c) {
      if (masked[c]) continue;
      const std::size_t o = argmax_of(q, state, classes.members[c]);
      const double v = q.value(state, o);
      if (first || v > best_q || (v == best_q && o < best_option)) {
        cls = c;
        best_option = o;
        best_q = v;
        first = false;
      }
    }
  }
  const auto& members = classes.members[cls];
  if (coin(rng) < epsilon) return pick_uniform(members, rng);
  return argmax_of(q, state, members);
}

void LearnConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("gamma must lie in (0, 1)");
  if (!(alpha_exponent > 0.0)) throw InvalidArgument("alpha_exponent must be positive");
  if (!(alpha_min > 0.0 && alpha_min <= alpha_max && alpha_max <= 1.0))
    throw InvalidArgument("alpha bounds must satisfy 0 < alpha_min <= alpha_max <= 1");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 && epsilon_end <= 1.0))
    throw InvalidArgument("epsilon schedule must lie in [0, 1]");
  if (max_macro_actions == 0) throw InvalidArgument("max_macro_actions must be at least 1");
}

double LearnConfig::alpha(std::uint32_t visits) const {
  return std::clamp(std::pow(1.0 + visits, -alpha_exponent), alpha_min, alpha_max);
}

double LearnConfig::epsilon(std::size_t episode) const {
  if (episodes <= 1) return epsilon_start;
  const double f = static_cast<double>(std::min(episode, episodes - 1)) / static_cast<double>(episodes - 1);
  return epsilon_start + (epsilon_end - epsilon_start) * f;
}

namespace {

struct EpisodeStats {
  double reward = 0.0;
  double alpha_sum = 0.0;
  std::size_t updates = 0;
  std::size_t macro = 0;
  std::size_t micro = 0;
  bool success = false;
};

// One episode from the environment's current state. Learns into `table` when set.
EpisodeStats play(Environment& env, const OptionLibrary& library, const OptionClasses& classes,
                  const QTable& q, SelectionMode mode, double epsilon, std::size_t cap, double gamma,
                  std::mt19937_64& rng, const MaskConfig& mask, const LearnConfig* learn,
                  QTable* table, EpisodeLog* log) {
  EpisodeStats st;
  for (std::size_t m = 0; m < cap; ++m) {
    const std::uint64_t s = env.state_key();
    const std::size_t o = select_option(q, s, classes, mode, epsilon, rng, mask);
    const OptionOutcome out = execute_option(env, library[o], gamma);
    const std::uint64_t s_next = env.state_key();
    if (table) {
      const double alpha = learn->alpha(table->visits(s, o));
      smdp_update(*table, s, o, out.discounted, out.duration, s_next, alpha, gamma, out.done);
      table->visit(s, o);
      st.alpha_sum += alpha;
      ++st.updates;
    }
    if (log) log->steps.push_back({o, s, out.step_rewards, out.undiscounted});
    st.reward += out.undiscounted;
    st.micro += out.duration;
    ++st.macro;
    if (out.done) {
      st.success = out.success;
      break;
    }
  }
  return st;
}

std::size_t greedy_option(const QTable& q, std::uint64_t state, const OptionClasses& classes,
                          SelectionMode mode, const MaskConfig& mask) {
  std::mt19937_64 unused(0);
  return select_option(q, state, classes, mode, 0.0, unused, mask);
}

}  // namespace

TrainResult train(Environment& env, const OptionLibrary& library, const LearnConfig& config,
                  SelectionMode mode) {
  config.validate();
  validate_library(library, mode == SelectionMode::Annotated);
  const OptionClasses classes(library);
  TrainResult result{{}, QTable(library.size()), {}};
  std::mt19937_64 start_rng(derive_seed(config.seed, 0));
  std::mt19937_64 pick_rng(derive_seed(config.seed, 1));
  result.curve.reserve(config.episodes);
  for (std::size_t e = 0; e < config.episodes; ++e) {
    const double eps = config.epsilon(e);
    env.reset(start_rng);
    const EpisodeStats st = play(env, library, classes, result.q, mode, eps, config.max_macro_actions,
                                 config.gamma, pick_rng, config.mask, &config, &result.q, nullptr);
    result.curve.push_back({e, st.reward, eps, st.updates ? st.alpha_sum / static_cast<double>(st.updates) : 0.0,
                            st.macro, st.micro, st.success});
  }
  for (std::uint64_t key : result.q.keys())
    result.policy.emplace_back(key, greedy_option(result.q, key, classes, mode, config.mask));
  return result;
}

EpisodeLog run_episode(Environment& env, const OptionLibrary& library, const QTable& q,
                       SelectionMode mode, double epsilon, std::size_t max_macro_actions, double gamma,
                       std::mt19937_64& rng, const MaskConfig& mask) {
  validate_library(library, mode == SelectionMode::Annotated);
  if (q.options() != library.size()) throw InvalidArgument("Q-table does not match the option library");
  const OptionClasses classes(library);
  EpisodeLog log;
  const EpisodeStats st = play(env, library, classes, q, mode, epsilon, max_macro_actions, gamma, rng,
                               mask, nullptr, nullptr, &log);
  log.total_reward = st.reward;
  log.success = st.success;
  return log;
}

std::vector<TrainResult> train_many(const EnvironmentFactory& make_env, const OptionLibrary& library,
                                    const LearnConfig& config, SelectionMode mode,
                                    const std::vector<std::uint64_t>& seeds, int jobs) {
  std::vector<TrainResult> out(seeds.size());
  parallel_for(seeds.size(), jobs, [&](std::size_t i) {
    auto env = make_env();
    LearnConfig c = config;
    c.seed = seeds[i];
    out[i] = train(*env, library, c, mode);
  });
  return out;
}

double final_reward(const std::vector<CurvePoint>& curve, std::size_t window) {
  if (curve.empty()) return 0.0;
  const std::size_t n = std::min(window, curve.size());
  double sum = 0.0;
  for (std::size_t i = curve.size() - n; i < curve.size(); ++i) sum += curve[i].reward;
  return sum / static_cast<double>(n);
}

double area_under_curve(const std::vector<CurvePoint>& curve) { return final_reward(curve, curve.size()); }

std::size_t successes(const std::vector<CurvePoint>& curve, std::size_t window) {
  const std::size_t n = std::min(window, curve.size());
  std::size_t count = 0;
  for (std::size_t i = curve.size() - n; i < curve.size(); ++i) count += curve[i].success ? 1 : 0;
  return count;
}

void TabularSmdp::validate() const {
  if (options.empty()) throw InvalidArgument("SMDP has no states");
  for (const auto& row : options) {
    if (row.empty()) throw InvalidArgument("every SMDP state needs an option");
    for (const auto& t : row) {
      if (t.next >= options.size()) throw InvalidArgument("SMDP transition leaves the state set");
      if (t.duration < 1) throw InvalidArgument("SMDP option duration must be at least 1");
    }
  }
}

std::vector<std::vector<double>> value_iteration(const TabularSmdp& smdp, double gamma, double tol,
                                                 std::size_t max_sweeps) {
  smdp.validate();
  std::vector<std::vector<double>> q(smdp.options.size());
  for (std::size_t s = 0; s < q.size(); ++s) q[s].assign(smdp.options[s].size(), 0.0);
  auto v = [&](std::size_t s) { return *std::max_element(q[s].begin(), q[s].end()); };
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double change = 0.0;
    auto next = q;
    for (std::size_t s = 0; s < q.size(); ++s) {
      for (std::size_t o = 0; o < q[s].size(); ++o) {
        const auto& t = smdp.options[s][o];
        next[s][o] = t.reward + (t.terminal ? 0.0 : std::pow(gamma, static_cast<double>(t.duration)) * v(t.next));
        change = std::max(change, std::abs(next[s][o] - q[s][o]));
      }
    }
    q = std::move(next);
    if (change < tol) break;
  }
  return q;
}

QTable learn_tabular(const TabularSmdp& smdp, const LearnConfig& config, std::size_t updates) {
  smdp.validate();
  config.validate();
  std::size_t width = 0;
  for (const auto& row : smdp.options) width = std::max(width, row.size());
  QTable q(width);
  std::mt19937_64 rng(derive_seed(config.seed, 0));
  std::uniform_int_distribution<std::size_t> state(0, smdp.options.size() - 1);
  for (std::size_t i = 0; i < updates; ++i) {
    const std::size_t s = state(rng);
    std::uniform_int_distribution<std::size_t> option(0, smdp.options[s].size() - 1);
    const std::size_t o = option(rng);
    const auto& t = smdp.options[s][o];
    smdp_update(q, s, o, t.reward, t.duration, t.next, config.alpha(q.visits(s, o)), config.gamma, t.terminal);
    q.visit(s, o);
  }
  return q;
}

std::vector<std::size_t> greedy_policy(const std::vector<std::vector<double>>& q) {
  std::vector<std::size_t> out;
  for (const auto& row : q)
    out.push_back(static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin()));
  return out;
}

std::vector<std::size_t> greedy_policy(const QTable& q, const TabularSmdp& smdp) {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < smdp.options.size(); ++s) {
    std::size_t best = 0;
    for (std::size_t o = 1; o < smdp.options[s].size(); ++o) {
      if (q.value(s, o) > q.value(s, best)) best = o;
    }
    out.push_back(best);
  }
  return out;
}

}  // namespace primsim
