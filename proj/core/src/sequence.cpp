#include "primsim/sequence.hpp"

#include "primsim/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace primsim {

void MotionSequence::validate() const {
  if (frames.size() < 2) throw InvalidArgument("sequence '" + id + "' needs at least 2 frames");
  if (frame_times.size() != frames.size())
    throw InvalidArgument("sequence '" + id + "' has mismatched frame_times");
  for (std::size_t i = 1; i < frame_times.size(); ++i) {
    if (!(frame_times[i] > frame_times[i - 1]))
      throw InvalidArgument("sequence '" + id + "' frame_times must increase strictly");
  }
  for (const auto& f : frames) {
    if (f.topology() != frames.front().topology() || f.dim() != frames.front().dim() ||
        f.size() != frames.front().size())
      throw IncompatibleShapes("sequence '" + id + "' mixes frame samplings");
  }
}

namespace {

// Frames resampled to a common count (when the two sequences differ) and
// similarity-normalized once, ready for per-pair rotation.
std::vector<Shape> prepare_frames(const MotionSequence& seq, std::size_t common,
                                  const AlignOptions& options) {
  std::vector<Shape> out;
  out.reserve(seq.frames.size());
  for (const auto& f : seq.frames) {
    Shape s = f.size() == common ? f : resample(f, common);
    out.push_back(options.normalize_scale ? centroid_and_scale_normalize(s).first
                                          : centroid_normalize(s).first);
  }
  return out;
}

MetricConfig region_config(const MetricConfig& config, const MotionSequence& seq,
                           const std::vector<std::string>& region) {
  if (region.empty()) return config;
  std::set<std::string> present;
  for (const auto& f : seq.frames) present.insert(f.region_tags().begin(), f.region_tags().end());
  MetricConfig out = config;
  out.region_emphasis.clear();
  for (const auto& tag : region) {
    if (!present.contains(tag)) throw InvalidArgument("unknown region tag '" + tag + "'");
  }
  for (const auto& tag : present) {
    out.region_emphasis[tag] =
        std::find(region.begin(), region.end(), tag) != region.end() ? 1.0 : 0.0;
  }
  return out;
}

// Frame-pair distances for the listed (i, j) index pairs.
void pair_distances(const std::vector<Shape>& fa, const std::vector<Shape>& fb,
                    const MetricConfig& config, const SequenceOptions& options,
                    const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                    std::vector<double>& out) {
  const GeodesicSolver solver(fa.front(), config);
  Reparameterization shared;
  if (!options.strict_correspondence) shared = best_reparameterization(fa.front(), fb.front());
  out.assign(pairs.size(), 0.0);
  parallel_for(pairs.size(), options.jobs, [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    const Reparameterization reparam =
        options.strict_correspondence ? best_reparameterization(fa[i], fb[j]) : shared;
    const Shape moved = apply_reparameterization(fb[j], reparam);
    const Shape rotated = rotate(moved, kabsch_rotation(fa[i], moved));
    out[k] = solver.length(fa[i].points(), rotated.points(), options.geodesic);
  });
}

void check_pair(const MotionSequence& a, const MotionSequence& b) {
  a.validate();
  b.validate();
  const Shape& fa = a.frames.front();
  const Shape& fb = b.frames.front();
  if (fa.topology() != fb.topology() || fa.dim() != fb.dim())
    throw IncompatibleShapes("sequences '" + a.id + "' and '" + b.id + "' are not align-compatible");
  if (fa.topology() == Topology::Grid && !fa.compatible_with(fb))
    throw IncompatibleShapes("grid sequences must share the template sampling");
}

}  // namespace

SelfSimilarityMatrix self_similarity(const MotionSequence& sequence, const MetricConfig& config,
                                     const std::vector<std::string>& region,
                                     const SequenceOptions& options) {
  sequence.validate();
  const MetricConfig cfg = region_config(config, sequence, region);
  const std::size_t t = sequence.length();
  const auto frames = prepare_frames(sequence, sequence.frames.front().size(), options.align);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = i + 1; j < t; ++j) pairs.emplace_back(i, j);
  }
  SequenceOptions strict = options;
  strict.strict_correspondence = true;
  std::vector<double> d;
  pair_distances(frames, frames, cfg, strict, pairs, d);
  SelfSimilarityMatrix out;
  out.region = region;
  out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(t));
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(pairs[k].first);
    const auto j = static_cast<Eigen::Index>(pairs[k].second);
    out.values(i, j) = d[k];
    out.values(j, i) = d[k];
  }
  return out;
}

Eigen::MatrixXd frame_cost_matrix(const MotionSequence& a, const MotionSequence& b,
                                  const MetricConfig& config, const SequenceOptions& options) {
  check_pair(a, b);
  const std::size_t common = std::max(a.frames.front().size(), b.frames.front().size());
  const auto fa = prepare_frames(a, common, options.align);
  const auto fb = prepare_frames(b, common, options.align);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(fa.size() * fb.size());
  for (std::size_t i = 0; i < fa.size(); ++i) {
    for (std::size_t j = 0; j < fb.size(); ++j) pairs.emplace_back(i, j);
  }
  std::vector<double> d;
  pair_distances(fa, fb, config, options, pairs, d);
  Eigen::MatrixXd cost(static_cast<Eigen::Index>(fa.size()), static_cast<Eigen::Index>(fb.size()));
  for (std::size_t k = 0; k < pairs.size(); ++k)
    cost(static_cast<Eigen::Index>(pairs[k].first), static_cast<Eigen::Index>(pairs[k].second)) = d[k];
  return cost;
}

AlignmentResult dtw_align(const Eigen::MatrixXd& cost) {
  const Eigen::Index rows = cost.rows();
  const Eigen::Index cols = cost.cols();
  if (rows == 0 || cols == 0) throw InvalidArgument("dtw_align needs a non-empty cost matrix");
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!std::isfinite(cost(i, j)) || cost(i, j) < 0.0)
        throw InvalidArgument("dtw_align needs finite non-negative costs");
    }
  }
  // 0 = diagonal, 1 = from (i-1, j), 2 = from (i, j-1).
  Eigen::MatrixXd acc(rows, cols);
  Eigen::Matrix<unsigned char, Eigen::Dynamic, Eigen::Dynamic> from(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (i == 0 && j == 0) {
        acc(i, j) = cost(i, j);
        from(i, j) = 0;
        continue;
      }
      double best = std::numeric_limits<double>::infinity();
      unsigned char choice = 0;
      if (i > 0 && j > 0) {
        best = acc(i - 1, j - 1);
        choice = 0;
      }
      if (i > 0 && acc(i - 1, j) < best) {
        best = acc(i - 1, j);
        choice = 1;
      }
      if (j > 0 && acc(i, j - 1) < best) {
        best = acc(i, j - 1);
        choice = 2;
      }
      acc(i, j) = cost(i, j) + best;
      from(i, j) = choice;
    }
  }
  AlignmentResult result;
  Eigen::Index i = rows - 1;
  Eigen::Index j = cols - 1;
  result.path.emplace_back(i, j);
  while (i > 0 || j > 0) {
    switch (from(i, j)) {
      case 0:
        --i;
        --j;
        break;
      case 1:
        --i;
        break;
      default:
        --j;
        break;
    }
    result.path.emplace_back(i, j);
  }
  std::reverse(result.path.begin(), result.path.end());
  double raw = 0.0;
  for (const auto& [pi, pj] : result.path)
    raw += cost(static_cast<Eigen::Index>(pi), static_cast<Eigen::Index>(pj));
  result.raw_cost = raw;
  result.normalized_cost = raw / static_cast<double>(result.path.size());
  return result;
}

double sequence_distance(const MotionSequence& a, const MotionSequence& b,
                         const MetricConfig& config, const SequenceOptions& options) {
  return dtw_align(frame_cost_matrix(a, b, config, options)).normalized_cost;
}

Eigen::MatrixXd sequence_distance_matrix(const std::vector<MotionSequence>& sequences,
                                         const MetricConfig& config,
                                         const SequenceOptions& options) {
  const std::size_t n = sequences.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  std::vector<double> d(pairs.size());
  SequenceOptions inner = options;
  inner.jobs = 1;
  parallel_for(pairs.size(), options.jobs, [&](std::size_t k) {
    d[k] = sequence_distance(sequences[pairs[k].first], sequences[pairs[k].second], config, inner);
  });
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(pairs[k].first);
    const auto j = static_cast<Eigen::Index>(pairs[k].second);
    out(i, j) = d[k];
    out(j, i) = d[k];
  }
  return out;
}

}  // namespace primsim
