#pragma once

#include "primsim/annotation.hpp"
#include "primsim/rl.hpp"
#include "primsim/sequence.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace primsim::io {

namespace fs = std::filesystem;

/// {"topology":"chain|loop|grid","rows":R,"cols":C,"points":[[x,y(,z)],...],
///  "region_tags":[...]}; rows/cols are only required for grids and the
/// point width gives the dimension.
Shape parse_shape(const std::string& json_text);
std::string shape_to_json(const Shape& shape);

/// {"id","action_label","motion_labels":[...],"frame_times":[...],"frames":[shape,...]}
MotionSequence parse_sequence(const std::string& json_text);
std::string sequence_to_json(const MotionSequence& sequence);

struct MetricFile {
  MetricConfig metric;
  GeodesicOptions geodesic;
};

/// Geodesic settings for frame-pair workloads (self-similarity, sequence
/// distances, annotation): coarse time grid and a looser tolerance.
inline GeodesicOptions sequence_geodesic_defaults() { return {4, 1e-3, 2000}; }

/// {"volume_weight","curvature_weight","position_weight","region_emphasis":{tag:m},
///  "geodesic":{"steps","tolerance","max_iterations"}}; every key optional,
/// missing keys keep the values of `base`.
MetricFile parse_metric(const std::string& json_text, const MetricFile& base = {});
std::string metric_to_json(const MetricFile& file);

std::string read_text(const fs::path& path);
/// Creates parent directories.
void write_text(const fs::path& path, const std::string& text);

Shape read_shape(const fs::path& path);
MotionSequence read_sequence(const fs::path& path);
MetricFile read_metric(const fs::path& path, const MetricFile& base = {});

/// Manifest {"entries":[{"id","file","action_label","motion_labels"}]}; files
/// are relative to the manifest's directory. Labels in the manifest override
/// those stored in the sequence files.
PrimitiveLibrary read_library(const fs::path& manifest);
/// Writes one sequence file per entry under dir/sequences and the manifest
/// dir/library.json. Returns every written path, manifest last.
std::vector<fs::path> write_library(const fs::path& dir, const PrimitiveLibrary& library);

/// Full-precision CSV with an "id" header row and column.
std::string matrix_to_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& row_ids,
                          const std::vector<std::string>& col_ids);
std::string matrix_to_json(const Eigen::MatrixXd& m, const std::vector<std::string>& row_ids,
                           const std::vector<std::string>& col_ids);
/// Cool (blue) for 0 through warm (red) for the maximum entry.
std::string matrix_to_svg(const Eigen::MatrixXd& m, int cell_pixels = 12);

std::string annotation_to_json(const std::string& query_id, const Annotation& annotation);
std::string report_to_json(const EvaluationReport& report, const EvaluationOptions& options);

/// {"options":[{"id","class","micro_actions":["forward",...]}]}
OptionLibrary parse_option_library(const std::string& json_text);
std::string option_library_to_json(const OptionLibrary& library);

/// Keys of LearnConfig plus "mask":{"enabled","threshold","min_visits"}; all optional.
LearnConfig parse_learn_config(const std::string& json_text);
std::string learn_config_to_json(const LearnConfig& config);

/// episode,reward,epsilon,alpha,macro_actions,micro_actions,success
std::string curve_to_csv(const std::vector<CurvePoint>& curve);
/// {"state-key": "option id"} with decimal keys.
std::string policy_to_json(const TrainResult& result, const OptionLibrary& library);
/// Full table: {"options":[ids],"states":{"key":{"q":[...],"n":[...]}}}.
std::string qtable_to_json(const QTable& q, const OptionLibrary& library);
QTable parse_qtable(const std::string& json_text, const OptionLibrary& library);

struct RunManifest {
  std::string command;
  /// Serialized JSON object of the resolved configuration.
  std::string config_json = "{}";
  std::vector<std::pair<std::string, std::uint64_t>> seeds;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string tool_version;
  /// Only recorded on request so that manifests stay reproducible.
  std::optional<double> wall_clock_seconds;
};

std::string manifest_to_json(const RunManifest& manifest);

/// %.17g formatting shared by all text outputs.
std::string format_double(double v);

}  // namespace primsim::io
