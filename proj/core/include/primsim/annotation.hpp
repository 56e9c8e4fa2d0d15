#pragma once

#include "primsim/sequence.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace primsim {

/// Labeled motion examples. Every entry carries an action label and motion
/// tags; ids are unique.
class PrimitiveLibrary {
 public:
  PrimitiveLibrary() = default;
  explicit PrimitiveLibrary(std::vector<MotionSequence> entries);

  const std::vector<MotionSequence>& entries() const { return entries_; }
  const std::map<std::string, std::vector<std::string>>& class_index() const { return class_index_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Labels in lexicographic order.
  std::vector<std::string> labels() const;
  /// True when some class has exactly one example.
  bool one_shot() const;

 private:
  std::vector<MotionSequence> entries_;
  std::map<std::string, std::vector<std::string>> class_index_;
};

struct Neighbor {
  std::string id;
  std::string action_label;
  double distance = 0.0;
};

struct Annotation {
  std::string action_label;
  std::vector<std::string> motion_labels;
  double confidence = 0.0;
  /// Ascending by distance.
  std::vector<Neighbor> neighbors;
};

/// A labeled reference entry with its precomputed distance to the query.
struct Candidate {
  std::string id;
  std::string action_label;
  std::vector<std::string> motion_labels;
  double distance = 0.0;
};

inline constexpr double kDistanceEpsilon = 1e-9;

/// Weighted k-nearest-neighbor vote with weights 1 / (d + 1e-9). Class ties
/// go to the class of the nearest neighbor, then to the lexicographically
/// smallest label. Motion tags are those carried by at least half of the
/// winning class's neighbors.
Annotation knn_vote(std::vector<Candidate> candidates, std::size_t k);

Annotation knn_annotate(const MotionSequence& query, const PrimitiveLibrary& library,
                        std::size_t k, const MetricConfig& config,
                        const SequenceOptions& options = {});

struct BaggingOptions {
  std::size_t bags = 10;
  std::uint64_t seed = 0;
  /// Every bag is the full library (used to check the B = 1 reduction).
  bool full_library_bags = false;
};

/// Class-stratified bootstrap ensemble of knn_vote with majority voting.
/// Falls back to a single knn_vote when any class has one example.
Annotation bagged_vote(const std::vector<Candidate>& candidates, std::size_t k,
                       const BaggingOptions& options);

Annotation bagged_annotate(const MotionSequence& query, const PrimitiveLibrary& library,
                           std::size_t k, const BaggingOptions& bagging,
                           const MetricConfig& config, const SequenceOptions& options = {});

enum class Protocol { Split, OneShot };

struct EvaluationOptions {
  Protocol protocol = Protocol::Split;
  /// Fraction of each class used for training under the split protocol.
  double split_fraction = 0.5;
  std::size_t trials = 100;
  std::size_t k = 5;
  /// 0 disables bagging.
  std::size_t bags = 0;
  std::uint64_t seed = 0;
};

struct TagScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ClassBreakdown {
  std::size_t tested = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
};

struct EvaluationReport {
  std::vector<double> trial_accuracy;
  double mean_accuracy = 0.0;
  double stddev_accuracy = 0.0;
  double mean_motion_exact = 0.0;
  double stddev_motion_exact = 0.0;
  std::map<std::string, TagScore> tag_scores;
  double macro_tag_f1 = 0.0;
  /// labels x labels counts, rows = truth, cols = prediction.
  std::vector<std::string> labels;
  std::vector<std::vector<std::size_t>> confusion;
  std::map<std::string, ClassBreakdown> per_class;
};

/// Monte Carlo evaluation over a precomputed library distance matrix.
/// Deterministic in (seed, library, protocol).
EvaluationReport evaluate(const PrimitiveLibrary& library, const Eigen::MatrixXd& distances,
                          const EvaluationOptions& options);

/// Computes the library distance matrix, then evaluates.
EvaluationReport evaluate(const PrimitiveLibrary& library, const EvaluationOptions& options,
                          const MetricConfig& config, const SequenceOptions& sequence_options = {});

}  // namespace primsim
