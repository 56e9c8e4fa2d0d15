#include "primsim/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>

namespace primsim {

namespace {

constexpr double kPi = std::numbers::pi;

// Joint angles in radians; arm and thigh angles are measured from straight
// down, lean from vertical.
struct Pose {
  double lean = 0.0;
  double arm = 0.15;
  double elbow = 0.1;
  double hip = 0.0;
  double knee = 0.05;
  double lift = 0.0;
  double yaw_scale = 1.0;
};

const std::vector<std::string> kChainTags = {"hands", "arms",  "arms", "head", "torso", "torso",
                                             "torso", "legs",  "legs", "feet", "feet"};

Point rotate_by(double angle, double x, double y) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * x - s * y, s * x + c * y, 0.0};
}

// Chain order: l_hand, l_elbow, l_shoulder, neck, chest, waist, pelvis,
// r_hip, r_knee, r_ankle, r_toe.
std::vector<Point> pose_points(const Pose& p) {
  const Point pelvis(0.0, 0.95 + p.lift, 0.0);
  const Point up = rotate_by(-p.lean, 0.0, 1.0);
  const Point waist = pelvis + 0.2 * up;
  const Point chest = waist + 0.2 * up;
  const Point neck = chest + 0.15 * up;
  const Point shoulder = neck + rotate_by(-p.lean, -0.18, -0.05);
  const Point upper_arm = rotate_by(-p.lean, -std::sin(p.arm), -std::cos(p.arm));
  const Point elbow = shoulder + 0.3 * upper_arm;
  const double fore = p.arm + p.elbow;
  const Point hand = elbow + 0.27 * rotate_by(-p.lean, -std::sin(fore), -std::cos(fore));
  const Point hip = pelvis + Point(0.1, -0.03, 0.0);
  const Point knee = hip + 0.45 * Point(std::sin(p.hip), -std::cos(p.hip), 0.0);
  const double shin = p.hip - p.knee;
  const Point ankle = knee + 0.43 * Point(std::sin(shin), -std::cos(shin), 0.0);
  const Point toe = ankle + 0.13 * Point(std::cos(shin), std::sin(shin), 0.0);
  std::vector<Point> pts{hand, elbow, shoulder, neck, chest, waist, pelvis, hip, knee, ankle, toe};
  for (auto& q : pts) q.x() *= p.yaw_scale;
  return pts;
}

struct Style {
  double amplitude = 1.0;
  double phase = 0.0;
};

double bump(double t) {
  const double s = std::sin(kPi * t);
  return s * s;
}

Pose class_pose(const std::string& name, double t, const Style& st) {
  const double a = st.amplitude;
  const double w = 4.0 * kPi * t + st.phase;  // two cycles
  Pose p;
  if (name == "wave") {
    p.arm = 2.4 * a;
    p.elbow = 0.6 + 0.5 * a * std::sin(w);
  } else if (name == "bend") {
    p.lean = 1.2 * a * bump(t);
    p.arm = 0.15 + 0.3 * p.lean;
  } else if (name == "jump") {
    const double c = 0.5 * (1.0 - std::cos(w));
    p.knee = 0.05 + 0.9 * a * c;
    p.hip = 0.5 * p.knee;
    p.lift = 0.15 * a * std::max(0.0, std::sin(w - 0.5 * kPi));
    p.arm = 0.15 + 1.5 * a * (1.0 - c);
  } else if (name == "walk") {
    p.hip = 0.45 * a * std::sin(w);
    p.knee = 0.05 + 0.25 * a * (1.0 - std::cos(w));
    p.arm = 0.3 + 0.3 * a * std::sin(w + kPi);
  } else if (name == "spin") {
    p.arm = 1.5 * a;
    p.yaw_scale = 0.4 + 0.3 * (1.0 + std::cos(w));
  } else if (name == "crouch") {
    const double b = bump(t);
    p.knee = 0.05 + 1.7 * a * b;
    p.hip = 0.85 * a * b;
    p.lean = 0.5 * a * b;
    p.arm = 0.15 + 1.2 * a * b;
  } else {
    throw InvalidArgument("unknown motion class '" + name + "'");
  }
  return p;
}

}  // namespace

void GeneratorSpec::validate() const {
  const auto& classes = motion_classes();
  if (std::find(classes.begin(), classes.end(), class_name) == classes.end())
    throw InvalidArgument("unknown motion class '" + class_name + "'");
  if (duration_frames < 8) throw InvalidArgument("duration_frames must be at least 8");
  if (!(speed_factor > 0.0) || !std::isfinite(speed_factor))
    throw InvalidArgument("speed_factor must be positive");
  if (!(actor_scale > 0.0) || !std::isfinite(actor_scale))
    throw InvalidArgument("actor_scale must be positive");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    throw InvalidArgument("noise_sigma must be >= 0");
  if (!(style_jitter >= 0.0 && style_jitter < 1.0))
    throw InvalidArgument("style_jitter must lie in [0, 1)");
}

const std::vector<std::string>& motion_classes() {
  static const std::vector<std::string> classes = {"wave", "bend", "jump", "walk", "spin", "crouch"};
  return classes;
}

std::vector<std::string> motion_tags_for(const std::string& class_name) {
  static const std::map<std::string, std::vector<std::string>> tags = {
      {"wave", {"left arm raised", "left elbow oscillating"}},
      {"bend", {"arms hanging", "torso flexing forward"}},
      {"jump", {"arms raising", "knees flexing"}},
      {"walk", {"arms swinging", "legs swinging"}},
      {"spin", {"arms extended", "body rotating"}},
      {"crouch", {"arms reaching forward", "knees flexing", "torso leaning"}},
  };
  auto it = tags.find(class_name);
  if (it == tags.end()) throw InvalidArgument("unknown motion class '" + class_name + "'");
  return it->second;
}

MotionSequence generate(const GeneratorSpec& spec) {
  spec.validate();
  std::mt19937_64 style_rng(derive_seed(spec.seed, 0));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Style style;
  style.amplitude = 1.0 + spec.style_jitter * unit(style_rng);
  style.phase = 3.0 * spec.style_jitter * unit(style_rng);

  const auto frames = static_cast<std::size_t>(std::max<long>(
      2, std::lround(static_cast<double>(spec.duration_frames) / spec.speed_factor)));
  std::mt19937_64 noise_rng(derive_seed(spec.seed, 1));
  std::normal_distribution<double> noise(0.0, 1.0);

  MotionSequence seq;
  seq.id = spec.id.empty() ? spec.class_name + "-" + std::to_string(spec.seed) : spec.id;
  seq.action_label = spec.class_name;
  seq.motion_labels = motion_tags_for(spec.class_name);
  seq.frames.reserve(frames);
  seq.frame_times.reserve(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(frames - 1);
    auto pts = pose_points(class_pose(spec.class_name, t, style));
    for (auto& p : pts) {
      p = spec.actor_scale * rotate_by(spec.viewpoint_angle, p.x(), p.y());
      if (spec.noise_sigma > 0.0) {
        p.x() += spec.noise_sigma * noise(noise_rng);
        p.y() += spec.noise_sigma * noise(noise_rng);
      }
    }
    seq.frames.push_back(Shape::chain(std::move(pts), 2, kChainTags));
    seq.frame_times.push_back(static_cast<double>(i) / kFrameRate);
  }
  return seq;
}

std::vector<GeneratorSpec> default_suite_specs(const SuiteOptions& options) {
  std::vector<GeneratorSpec> specs;
  std::mt19937_64 rng(derive_seed(options.seed, 7));
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  std::uniform_real_distribution<double> scale(0.8, 1.25);
  std::size_t index = 0;
  for (const auto& name : motion_classes()) {
    for (std::size_t k = 0; k < options.instances_per_class; ++k, ++index) {
      GeneratorSpec s;
      s.class_name = name;
      s.duration_frames = options.duration_frames;
      s.speed_factor = options.speed_factor;
      s.viewpoint_angle = angle(rng);
      s.actor_scale = scale(rng);
      s.noise_sigma = options.noise_sigma;
      s.seed = derive_seed(options.seed, index);
      s.id = name + "-" + std::to_string(k);
      specs.push_back(s);
    }
  }
  return specs;
}

PrimitiveLibrary generate_suite(const SuiteOptions& options) {
  std::vector<MotionSequence> entries;
  for (const auto& spec : default_suite_specs(options)) entries.push_back(generate(spec));
  return PrimitiveLibrary(std::move(entries));
}

std::vector<std::pair<std::size_t, std::string>> plan_label_corruption(
    const std::vector<std::string>& labels, double rate, CorruptionMode mode,
    const std::vector<std::string>& targets, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw InvalidArgument("corruption rate must lie in [0, 1]");
  const std::set<std::string> distinct(labels.begin(), labels.end());
  if (mode == CorruptionMode::ClassTargeted) {
    for (const auto& t : targets) {
      if (!distinct.contains(t)) throw InvalidArgument("targeted class '" + t + "' does not exist");
    }
  }
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (mode == CorruptionMode::Uniform ||
        std::find(targets.begin(), targets.end(), labels[i]) != targets.end())
      eligible.push_back(i);
  }
  const std::vector<std::string> pool(distinct.begin(), distinct.end());
  const auto count = static_cast<std::size_t>(std::floor(rate * static_cast<double>(eligible.size()) + 1e-9));
  std::vector<std::pair<std::size_t, std::string>> plan;
  if (count == 0 || pool.size() < 2) return plan;

  std::mt19937_64 rng(seed);
  std::shuffle(eligible.begin(), eligible.end(), rng);
  eligible.resize(count);
  std::sort(eligible.begin(), eligible.end());
  for (std::size_t i : eligible) {
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 2);
    std::size_t j = pick(rng);
    // Skip over the original label so the draw is uniform over the others.
    const auto original = static_cast<std::size_t>(
        std::find(pool.begin(), pool.end(), labels[i]) - pool.begin());
    if (j >= original) ++j;
    plan.emplace_back(i, pool[j]);
  }
  return plan;
}

CorruptionResult corrupt_labels(const PrimitiveLibrary& library, double rate, CorruptionMode mode,
                                const std::vector<std::string>& targets, std::uint64_t seed) {
  std::vector<std::string> labels;
  for (const auto& e : library.entries()) labels.push_back(e.action_label);
  auto entries = library.entries();
  CorruptionResult result;
  for (const auto& [index, label] : plan_label_corruption(labels, rate, mode, targets, seed)) {
    entries[index].action_label = label;
    result.corrupted_ids.push_back(entries[index].id);
  }
  result.library = PrimitiveLibrary(std::move(entries));
  return result;
}

}  // namespace primsim
