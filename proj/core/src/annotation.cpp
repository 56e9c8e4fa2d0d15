#include "primsim/annotation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace primsim {

PrimitiveLibrary::PrimitiveLibrary(std::vector<MotionSequence> entries)
    : entries_(std::move(entries)) {
  std::set<std::string> ids;
  for (const auto& e : entries_) {
    if (e.action_label.empty()) throw InvalidArgument("library entry '" + e.id + "' has no action label");
    if (!ids.insert(e.id).second) throw InvalidArgument("duplicate library id '" + e.id + "'");
    class_index_[e.action_label].push_back(e.id);
  }
}

std::vector<std::string> PrimitiveLibrary::labels() const {
  std::vector<std::string> out;
  for (const auto& [label, ids] : class_index_) out.push_back(label);
  return out;
}

bool PrimitiveLibrary::one_shot() const {
  return std::any_of(class_index_.begin(), class_index_.end(),
                     [](const auto& kv) { return kv.second.size() == 1; });
}

Annotation knn_vote(std::vector<Candidate> candidates, std::size_t k) {
  if (candidates.empty()) throw InvalidArgument("cannot annotate against an empty library");
  if (k == 0) throw InvalidArgument("k must be at least 1");
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& x, const Candidate& y) { return x.distance < y.distance; });
  k = std::min(k, candidates.size());

  std::map<std::string, double> mass;
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double w = 1.0 / (candidates[i].distance + kDistanceEpsilon);
    mass[candidates[i].action_label] += w;
    total += w;
  }
  double best = -1.0;
  for (const auto& [label, m] : mass) best = std::max(best, m);
  std::vector<std::string> tied;
  for (const auto& [label, m] : mass) {
    if (m == best) tied.push_back(label);
  }
  std::string winner = tied.front();
  if (tied.size() > 1) {
    const auto& nearest = candidates.front().action_label;
    if (std::find(tied.begin(), tied.end(), nearest) != tied.end()) winner = nearest;
  }

  Annotation out;
  out.action_label = winner;
  out.confidence = mass[winner] / total;
  std::map<std::string, std::size_t> tag_counts;
  std::size_t members = 0;
  for (std::size_t i = 0; i < k; ++i) {
    out.neighbors.push_back({candidates[i].id, candidates[i].action_label, candidates[i].distance});
    if (candidates[i].action_label != winner) continue;
    ++members;
    std::set<std::string> unique(candidates[i].motion_labels.begin(), candidates[i].motion_labels.end());
    for (const auto& tag : unique) ++tag_counts[tag];
  }
  for (const auto& [tag, count] : tag_counts) {
    if (2 * count >= members) out.motion_labels.push_back(tag);
  }
  return out;
}

namespace {

std::vector<Candidate> candidates_for(const MotionSequence& query, const PrimitiveLibrary& library,
                                      const MetricConfig& config, const SequenceOptions& options) {
  if (library.empty()) throw InvalidArgument("cannot annotate against an empty library");
  std::vector<Candidate> out;
  out.reserve(library.size());
  for (const auto& e : library.entries()) {
    out.push_back({e.id, e.action_label, e.motion_labels,
                   sequence_distance(query, e, config, options)});
  }
  return out;
}

std::vector<std::string> sorted_tags(std::vector<std::string> tags) {
  std::sort(tags.begin(), tags.end());
  tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
  return tags;
}

}  // namespace

Annotation knn_annotate(const MotionSequence& query, const PrimitiveLibrary& library,
                        std::size_t k, const MetricConfig& config,
                        const SequenceOptions& options) {
  return knn_vote(candidates_for(query, library, config, options), k);
}

Annotation bagged_vote(const std::vector<Candidate>& candidates, std::size_t k,
                       const BaggingOptions& options) {
  if (candidates.empty()) throw InvalidArgument("cannot annotate against an empty library");
  if (options.bags == 0) throw InvalidArgument("bagging needs at least one bag");
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < candidates.size(); ++i) by_class[candidates[i].action_label].push_back(i);
  const bool one_shot = std::any_of(by_class.begin(), by_class.end(),
                                    [](const auto& kv) { return kv.second.size() == 1; });
  if (one_shot) return knn_vote(candidates, k);

  std::mt19937_64 rng(options.seed);
  std::vector<Annotation> outcomes;
  outcomes.reserve(options.bags);
  for (std::size_t b = 0; b < options.bags; ++b) {
    std::vector<Candidate> bag;
    bag.reserve(candidates.size());
    if (options.full_library_bags) {
      bag = candidates;
    } else {
      for (const auto& [label, members] : by_class) {
        std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
        for (std::size_t i = 0; i < members.size(); ++i) bag.push_back(candidates[members[pick(rng)]]);
      }
    }
    outcomes.push_back(knn_vote(std::move(bag), k));
  }

  std::map<std::string, std::size_t> votes;
  for (const auto& o : outcomes) ++votes[o.action_label];
  std::string winner;
  std::size_t best = 0;
  for (const auto& [label, count] : votes) {
    if (count > best) {
      best = count;
      winner = label;
    }
  }
  // Plurality motion-tag set among the bags that voted for the winner.
  std::map<std::vector<std::string>, std::size_t> tag_sets;
  const Annotation* representative = nullptr;
  for (const auto& o : outcomes) {
    if (o.action_label != winner) continue;
    if (!representative) representative = &o;
    ++tag_sets[sorted_tags(o.motion_labels)];
  }
  Annotation out;
  out.action_label = winner;
  std::size_t tag_best = 0;
  for (const auto& [set, count] : tag_sets) {
    if (count > tag_best) {
      tag_best = count;
      out.motion_labels = set;
    }
  }
  out.confidence = static_cast<double>(best) / static_cast<double>(outcomes.size());
  out.neighbors = representative->neighbors;
  return out;
}

Annotation bagged_annotate(const MotionSequence& query, const PrimitiveLibrary& library,
                           std::size_t k, const BaggingOptions& bagging,
                           const MetricConfig& config, const SequenceOptions& options) {
  return bagged_vote(candidates_for(query, library, config, options), k, bagging);
}

EvaluationReport evaluate(const PrimitiveLibrary& library, const Eigen::MatrixXd& distances,
                          const EvaluationOptions& options) {
  const std::size_t n = library.size();
  if (n == 0) throw InvalidArgument("cannot evaluate an empty library");
  if (static_cast<std::size_t>(distances.rows()) != n || static_cast<std::size_t>(distances.cols()) != n)
    throw InvalidArgument("distance matrix does not match the library");
  if (options.trials == 0) throw InvalidArgument("evaluation needs at least one trial");
  if (options.protocol == Protocol::Split) {
    if (!(options.split_fraction > 0.0 && options.split_fraction < 1.0))
      throw InvalidArgument("split_fraction must lie in (0, 1)");
    for (const auto& [label, ids] : library.class_index()) {
      if (ids.size() < 2)
        throw InvalidArgument("class '" + label +
                              "' has a single example; use the one-shot protocol");
    }
  }

  const auto& entries = library.entries();
  EvaluationReport report;
  report.labels = library.labels();
  std::map<std::string, std::size_t> label_index;
  for (std::size_t i = 0; i < report.labels.size(); ++i) label_index[report.labels[i]] = i;
  report.confusion.assign(report.labels.size(), std::vector<std::size_t>(report.labels.size(), 0));

  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < n; ++i) members[entries[i].action_label].push_back(i);

  struct TagCounts {
    std::size_t tp = 0, fp = 0, fn = 0;
  };
  std::map<std::string, TagCounts> tag_counts;
  std::vector<double> motion_exact;

  for (std::size_t trial = 0; trial < options.trials; ++trial) {
    std::mt19937_64 rng(derive_seed(options.seed, trial));
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    for (const auto& [label, idx] : members) {
      std::vector<std::size_t> shuffled = idx;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      std::size_t n_train = 1;
      if (options.protocol == Protocol::Split) {
        const auto want = static_cast<std::size_t>(
            std::lround(options.split_fraction * static_cast<double>(shuffled.size())));
        n_train = std::clamp<std::size_t>(want, 1, shuffled.size() - 1);
      }
      train.insert(train.end(), shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_train));
      test.insert(test.end(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_train), shuffled.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    if (test.empty()) continue;

    std::size_t correct = 0;
    std::size_t exact = 0;
    for (std::size_t q : test) {
      std::vector<Candidate> candidates;
      candidates.reserve(train.size());
      for (std::size_t t : train) {
        candidates.push_back({entries[t].id, entries[t].action_label, entries[t].motion_labels,
                              distances(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(t))});
      }
      Annotation a;
      if (options.bags > 0) {
        BaggingOptions bag;
        bag.bags = options.bags;
        bag.seed = derive_seed(derive_seed(options.seed, trial), q);
        a = bagged_vote(candidates, options.k, bag);
      } else {
        a = knn_vote(std::move(candidates), options.k);
      }
      const auto& truth = entries[q];
      if (a.action_label == truth.action_label) ++correct;
      ++report.confusion[label_index[truth.action_label]][label_index[a.action_label]];
      auto& cls = report.per_class[truth.action_label];
      ++cls.tested;
      if (a.action_label == truth.action_label) ++cls.correct;

      const auto predicted = sorted_tags(a.motion_labels);
      const auto expected = sorted_tags(truth.motion_labels);
      if (predicted == expected) ++exact;
      for (const auto& tag : predicted) {
        if (std::binary_search(expected.begin(), expected.end(), tag)) {
          ++tag_counts[tag].tp;
        } else {
          ++tag_counts[tag].fp;
        }
      }
      for (const auto& tag : expected) {
        if (!std::binary_search(predicted.begin(), predicted.end(), tag)) ++tag_counts[tag].fn;
      }
    }
    report.trial_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(test.size()));
    motion_exact.push_back(static_cast<double>(exact) / static_cast<double>(test.size()));
  }

  auto mean_std = [](const std::vector<double>& xs) {
    if (xs.empty()) return std::pair{0.0, 0.0};
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var = xs.size() > 1 ? var / static_cast<double>(xs.size() - 1) : 0.0;
    return std::pair{mean, std::sqrt(var)};
  };
  std::tie(report.mean_accuracy, report.stddev_accuracy) = mean_std(report.trial_accuracy);
  std::tie(report.mean_motion_exact, report.stddev_motion_exact) = mean_std(motion_exact);

  double f1_sum = 0.0;
  for (const auto& [tag, c] : tag_counts) {
    TagScore s;
    s.precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    s.recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
    s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    report.tag_scores[tag] = s;
    f1_sum += s.f1;
  }
  report.macro_tag_f1 = tag_counts.empty() ? 0.0 : f1_sum / static_cast<double>(tag_counts.size());
  for (auto& [label, cls] : report.per_class)
    cls.accuracy = cls.tested > 0 ? static_cast<double>(cls.correct) / static_cast<double>(cls.tested) : 0.0;
  return report;
}

EvaluationReport evaluate(const PrimitiveLibrary& library, const EvaluationOptions& options,
                          const MetricConfig& config, const SequenceOptions& sequence_options) {
  return evaluate(library, sequence_distance_matrix(library.entries(), config, sequence_options),
                  options);
}

}  // namespace primsim
