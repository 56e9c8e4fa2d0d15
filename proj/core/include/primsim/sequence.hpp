#pragma once

#include "primsim/metric.hpp"

#include <Eigen/Core>

#include <string>
#include <utility>
#include <vector>

namespace primsim {

/// A labeled sequence of poses; the unit of annotation.
struct MotionSequence {
  std::string id;
  std::vector<Shape> frames;
  /// Strictly increasing, seconds.
  std::vector<double> frame_times;
  std::string action_label;
  std::vector<std::string> motion_labels;

  std::size_t length() const { return frames.size(); }
  void validate() const;
};

struct SelfSimilarityMatrix {
  Eigen::MatrixXd values;
  /// Region restriction the matrix was computed under; empty = whole shape.
  std::vector<std::string> region;
};

struct AlignmentResult {
  std::vector<std::pair<std::size_t, std::size_t>> path;
  double raw_cost = 0.0;
  double normalized_cost = 0.0;
};

struct SequenceOptions {
  GeodesicOptions geodesic;
  AlignOptions align;
  /// Recompute the loop reparameterization for every frame pair instead of
  /// reusing the one found on the first frames.
  bool strict_correspondence = false;
  /// Concurrency budget for frame-pair geodesics; results do not depend on it.
  int jobs = 1;
};

/// values(i, j) = geodesic distance between frames i and j. With a region
/// restriction, points tagged inside the region get multiplier 1 and all
/// others 0.
SelfSimilarityMatrix self_similarity(const MotionSequence& sequence, const MetricConfig& config,
                                     const std::vector<std::string>& region = {},
                                     const SequenceOptions& options = {});

/// T_A x T_B matrix of frame-pair geodesic distances. Rotation is solved per
/// frame pair; loop reparameterization is shared per sequence pair unless
/// strict_correspondence is set.
Eigen::MatrixXd frame_cost_matrix(const MotionSequence& a, const MotionSequence& b,
                                  const MetricConfig& config,
                                  const SequenceOptions& options = {});

/// Dynamic time warping with steps (1,0), (0,1), (1,1) from (0,0) to the far
/// corner. Ties prefer the diagonal, then (1,0), then (0,1).
AlignmentResult dtw_align(const Eigen::MatrixXd& cost);

/// Path-length normalized DTW cost over frame-pair geodesic distances.
double sequence_distance(const MotionSequence& a, const MotionSequence& b,
                         const MetricConfig& config, const SequenceOptions& options = {});

/// Pairwise sequence distances (upper triangle computed, then mirrored).
Eigen::MatrixXd sequence_distance_matrix(const std::vector<MotionSequence>& sequences,
                                         const MetricConfig& config,
                                         const SequenceOptions& options = {});

}  // namespace primsim
