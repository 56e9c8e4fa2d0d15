#pragma once

#include "primsim/annotation.hpp"
#include "primsim/sequence.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace primsim {

/// Parametric motion classes over an articulated planar figure sampled as a
/// tagged 11-point chain (left arm, spine, right leg).
struct GeneratorSpec {
  std::string class_name = "wave";
  /// Frame count at speed_factor 1.
  std::size_t duration_frames = 16;
  double speed_factor = 1.0;
  /// Global in-plane rotation, radians.
  double viewpoint_angle = 0.0;
  double actor_scale = 1.0;
  /// Standard deviation of i.i.d. Gaussian noise per coordinate, figure units.
  double noise_sigma = 0.0;
  /// Relative per-instance amplitude and timing variation drawn from seed.
  double style_jitter = 0.1;
  std::uint64_t seed = 0;
  std::string id;

  void validate() const;
};

/// Built-in class names: wave, bend, jump, walk, spin, crouch.
const std::vector<std::string>& motion_classes();

/// Ground-truth motion tags of a class.
std::vector<std::string> motion_tags_for(const std::string& class_name);

/// Figure height at actor_scale 1 (used to express noise relative to size).
inline constexpr double kFigureHeight = 1.75;

/// Frame rate of generated sequences at speed 1.
inline constexpr double kFrameRate = 25.0;

/// Deterministic given the spec. Frames are sampled from the analytic joint
/// trajectory at round(duration_frames / speed_factor) equally spaced phases.
MotionSequence generate(const GeneratorSpec& spec);

struct SuiteOptions {
  std::size_t instances_per_class = 8;
  std::size_t duration_frames = 16;
  double noise_sigma = 0.0;
  double speed_factor = 1.0;
  std::uint64_t seed = 0;
};

/// Per-instance specs of the default suite: every built-in class, random
/// viewpoint, actor scale in [0.8, 1.25] and style jitter.
std::vector<GeneratorSpec> default_suite_specs(const SuiteOptions& options);

PrimitiveLibrary generate_suite(const SuiteOptions& options);

enum class CorruptionMode { Uniform, ClassTargeted };

/// Indices to relabel and their new labels: floor(rate * eligible) entries,
/// eligible being all labels (uniform) or those in `targets`. New labels
/// are drawn uniformly from the other labels present.
std::vector<std::pair<std::size_t, std::string>> plan_label_corruption(
    const std::vector<std::string>& labels, double rate, CorruptionMode mode,
    const std::vector<std::string>& targets, std::uint64_t seed);

struct CorruptionResult {
  PrimitiveLibrary library;
  std::vector<std::string> corrupted_ids;
};

CorruptionResult corrupt_labels(const PrimitiveLibrary& library, double rate, CorruptionMode mode,
                                const std::vector<std::string>& targets, std::uint64_t seed);

}  // namespace primsim
