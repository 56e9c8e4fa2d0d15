#include "primsim/io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace primsim::io {

using nlohmann::json;

namespace {

json parse(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed ") + what + " JSON: " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument(std::string("field '") + key + "' has the wrong type");
  }
}

const json& require(const json& j, const char* key, const char* what) {
  if (!j.is_object() || !j.contains(key))
    throw InvalidArgument(std::string(what) + " JSON lacks '" + key + "'");
  return j.at(key);
}

json shape_json(const Shape& s) {
  json j;
  j["topology"] = to_string(s.topology());
  if (s.topology() == Topology::Grid) {
    j["rows"] = s.rows();
    j["cols"] = s.cols();
  }
  json pts = json::array();
  for (const auto& p : s.points()) {
    if (s.dim() == 2)
      pts.push_back({p.x(), p.y()});
    else
      pts.push_back({p.x(), p.y(), p.z()});
  }
  j["points"] = std::move(pts);
  j["region_tags"] = s.region_tags();
  return j;
}

Shape shape_from(const json& j) {
  const auto topology = topology_from_string(require(j, "topology", "shape").get<std::string>());
  const json& pts = require(j, "points", "shape");
  if (!pts.is_array() || pts.empty()) throw InvalidArgument("shape points must be a non-empty array");
  const std::size_t width = pts.front().size();
  if (width != 2 && width != 3) throw InvalidArgument("shape points must have 2 or 3 coordinates");
  std::vector<Point> points;
  for (const auto& p : pts) {
    if (!p.is_array() || p.size() != width) throw InvalidArgument("shape points must share one dimension");
    Point q = Point::Zero();
    for (std::size_t i = 0; i < width; ++i) {
      if (!p[i].is_number()) throw InvalidArgument("shape coordinates must be numbers");
      q[static_cast<Eigen::Index>(i)] = p[i].get<double>();
    }
    points.push_back(q);
  }
  auto tags = get_or<std::vector<std::string>>(j, "region_tags", {});
  const int dim = static_cast<int>(width);
  switch (topology) {
    case Topology::Chain: return Shape::chain(std::move(points), dim, std::move(tags));
    case Topology::Loop: return Shape::loop(std::move(points), dim, std::move(tags));
    case Topology::Grid:
      return Shape::grid(get_or<std::size_t>(j, "rows", 0), get_or<std::size_t>(j, "cols", 0),
                         std::move(points), dim, std::move(tags));
  }
  throw InvalidArgument("unknown topology");
}

json sequence_json(const MotionSequence& s) {
  json j;
  j["id"] = s.id;
  j["action_label"] = s.action_label;
  j["motion_labels"] = s.motion_labels;
  j["frame_times"] = s.frame_times;
  json frames = json::array();
  for (const auto& f : s.frames) frames.push_back(shape_json(f));
  j["frames"] = std::move(frames);
  return j;
}

MotionSequence sequence_from(const json& j) {
  MotionSequence s;
  s.id = get_or<std::string>(j, "id", "");
  s.action_label = get_or<std::string>(j, "action_label", "");
  s.motion_labels = get_or<std::vector<std::string>>(j, "motion_labels", {});
  for (const auto& f : require(j, "frames", "sequence")) s.frames.push_back(shape_from(f));
  if (j.contains("frame_times")) {
    s.frame_times = get_or<std::vector<double>>(j, "frame_times", {});
  } else {
    for (std::size_t i = 0; i < s.frames.size(); ++i) s.frame_times.push_back(static_cast<double>(i));
  }
  s.validate();
  return s;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Shape parse_shape(const std::string& json_text) { return shape_from(parse(json_text, "shape")); }
std::string shape_to_json(const Shape& shape) { return dump(shape_json(shape)); }

MotionSequence parse_sequence(const std::string& json_text) {
  return sequence_from(parse(json_text, "sequence"));
}
std::string sequence_to_json(const MotionSequence& sequence) { return dump(sequence_json(sequence)); }

MetricFile parse_metric(const std::string& json_text, const MetricFile& base) {
  const json j = parse(json_text, "metric");
  if (!j.is_object()) throw InvalidArgument("metric JSON must be an object");
  MetricFile f = base;
  f.metric.volume_weight = get_or(j, "volume_weight", f.metric.volume_weight);
  f.metric.curvature_weight = get_or(j, "curvature_weight", f.metric.curvature_weight);
  f.metric.position_weight = get_or(j, "position_weight", f.metric.position_weight);
  f.metric.region_emphasis = get_or(j, "region_emphasis", f.metric.region_emphasis);
  if (j.contains("geodesic")) {
    const json& g = j.at("geodesic");
    f.geodesic.steps = get_or(g, "steps", f.geodesic.steps);
    f.geodesic.tolerance = get_or(g, "tolerance", f.geodesic.tolerance);
    f.geodesic.max_iterations = get_or(g, "max_iterations", f.geodesic.max_iterations);
  }
  f.metric.validate();
  if (f.geodesic.steps < 1) throw InvalidArgument("geodesic steps must be at least 1");
  return f;
}

std::string metric_to_json(const MetricFile& f) {
  json j;
  j["volume_weight"] = f.metric.volume_weight;
  j["curvature_weight"] = f.metric.curvature_weight;
  j["position_weight"] = f.metric.position_weight;
  j["region_emphasis"] = f.metric.region_emphasis;
  j["geodesic"] = {{"steps", f.geodesic.steps},
                   {"tolerance", f.geodesic.tolerance},
                   {"max_iterations", f.geodesic.max_iterations}};
  return dump(j);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

Shape read_shape(const fs::path& path) { return parse_shape(read_text(path)); }
MotionSequence read_sequence(const fs::path& path) { return parse_sequence(read_text(path)); }
MetricFile read_metric(const fs::path& path, const MetricFile& base) {
  return parse_metric(read_text(path), base);
}

PrimitiveLibrary read_library(const fs::path& manifest) {
  const json j = parse(read_text(manifest), "library manifest");
  const fs::path base = manifest.parent_path();
  std::vector<MotionSequence> entries;
  for (const auto& e : require(j, "entries", "library manifest")) {
    MotionSequence s = read_sequence(base / require(e, "file", "library entry").get<std::string>());
    s.id = get_or(e, "id", s.id);
    s.action_label = get_or(e, "action_label", s.action_label);
    s.motion_labels = get_or(e, "motion_labels", s.motion_labels);
    entries.push_back(std::move(s));
  }
  return PrimitiveLibrary(std::move(entries));
}

std::vector<fs::path> write_library(const fs::path& dir, const PrimitiveLibrary& library) {
  std::vector<fs::path> written;
  json entries = json::array();
  for (const auto& s : library.entries()) {
    const std::string rel = "sequences/" + s.id + ".json";
    write_text(dir / rel, sequence_to_json(s));
    written.push_back(dir / rel);
    entries.push_back({{"id", s.id},
                       {"file", rel},
                       {"action_label", s.action_label},
                       {"motion_labels", s.motion_labels}});
  }
  write_text(dir / "library.json", dump(json{{"entries", entries}}));
  written.push_back(dir / "library.json");
  return written;
}

std::string matrix_to_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& row_ids,
                          const std::vector<std::string>& col_ids) {
  if (row_ids.size() != static_cast<std::size_t>(m.rows()) || col_ids.size() != static_cast<std::size_t>(m.cols()))
    throw InvalidArgument("matrix ids do not match its size");
  std::string out = "id";
  for (const auto& c : col_ids) out += "," + csv_field(c);
  out += "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out += csv_field(row_ids[static_cast<std::size_t>(i)]);
    for (Eigen::Index k = 0; k < m.cols(); ++k) out += "," + format_double(m(i, k));
    out += "\n";
  }
  return out;
}

std::string matrix_to_json(const Eigen::MatrixXd& m, const std::vector<std::string>& row_ids,
                           const std::vector<std::string>& col_ids) {
  if (row_ids.size() != static_cast<std::size_t>(m.rows()) || col_ids.size() != static_cast<std::size_t>(m.cols()))
    throw InvalidArgument("matrix ids do not match its size");
  return dump(json{{"rows", row_ids}, {"cols", col_ids}, {"values", matrix_json(m)}});
}

std::string matrix_to_svg(const Eigen::MatrixXd& m, int cell_pixels) {
  const double top = m.size() ? std::max(m.maxCoeff(), 0.0) : 0.0;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << m.cols() * cell_pixels << "\" height=\""
      << m.rows() * cell_pixels << "\">\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      const double t = top > 0.0 ? std::clamp(m(i, k) / top, 0.0, 1.0) : 0.0;
      // blue -> cyan -> yellow -> red
      double r, g, b;
      if (t < 1.0 / 3.0) {
        r = 0.0, g = 3.0 * t, b = 1.0;
      } else if (t < 2.0 / 3.0) {
        r = 3.0 * t - 1.0, g = 1.0, b = 2.0 - 3.0 * t;
      } else {
        r = 1.0, g = 3.0 - 3.0 * t, b = 0.0;
      }
      char color[8];
      std::snprintf(color, sizeof color, "#%02x%02x%02x", static_cast<int>(std::lround(255 * r)),
                    static_cast<int>(std::lround(255 * g)), static_cast<int>(std::lround(255 * b)));
      svg << "<rect x=\"" << k * cell_pixels << "\" y=\"" << i * cell_pixels << "\" width=\"" << cell_pixels
          << "\" height=\"" << cell_pixels << "\" fill=\"" << color << "\"/>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string annotation_to_json(const std::string& query_id, const Annotation& a) {
  json neighbors = json::array();
  for (const auto& n : a.neighbors)
    neighbors.push_back({{"id", n.id}, {"action_label", n.action_label}, {"distance", n.distance}});
  return dump(json{{"query", query_id},
                   {"action_label", a.action_label},
                   {"motion_labels", a.motion_labels},
                   {"confidence", a.confidence},
                   {"neighbors", neighbors}});
}

std::string report_to_json(const EvaluationReport& r, const EvaluationOptions& o) {
  json tags = json::object();
  for (const auto& [tag, s] : r.tag_scores)
    tags[tag] = {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
  json per_class = json::object();
  for (const auto& [label, c] : r.per_class)
    per_class[label] = {{"tested", c.tested}, {"correct", c.correct}, {"accuracy", c.accuracy}};
  json j;
  j["protocol"] = o.protocol == Protocol::OneShot ? "one-shot" : "split";
  j["trials"] = o.trials;
  j["k"] = o.k;
  j["bags"] = o.bags;
  j["split_fraction"] = o.split_fraction;
  j["seed"] = o.seed;
  j["mean_accuracy"] = r.mean_accuracy;
  j["stddev_accuracy"] = r.stddev_accuracy;
  j["mean_motion_exact"] = r.mean_motion_exact;
  j["stddev_motion_exact"] = r.stddev_motion_exact;
  j["macro_tag_f1"] = r.macro_tag_f1;
  j["trial_accuracy"] = r.trial_accuracy;
  j["tag_scores"] = tags;
  j["labels"] = r.labels;
  j["confusion"] = r.confusion;
  j["per_class"] = per_class;
  return dump(j);
}

OptionLibrary parse_option_library(const std::string& json_text) {
  const json j = parse(json_text, "option library");
  OptionLibrary lib;
  for (const auto& o : require(j, "options", "option library")) {
    OptionSpec spec;
    spec.id = require(o, "id", "option").get<std::string>();
    spec.class_label = get_or<std::string>(o, "class", "");
    for (const auto& a : require(o, "micro_actions", "option"))
      spec.micro_actions.push_back(micro_action_from_string(a.get<std::string>()));
    lib.push_back(std::move(spec));
  }
  validate_library(lib, false);
  return lib;
}

std::string option_library_to_json(const OptionLibrary& library) {
  json options = json::array();
  for (const auto& o : library) {
    json acts = json::array();
    for (auto a : o.micro_actions) acts.push_back(std::string(to_string(a)));
    options.push_back({{"id", o.id}, {"class", o.class_label}, {"micro_actions", acts}});
  }
  return dump(json{{"options", options}});
}

LearnConfig parse_learn_config(const std::string& json_text) {
  const json j = parse(json_text, "learn config");
  if (!j.is_object()) throw InvalidArgument("learn config JSON must be an object");
  LearnConfig c;
  c.gamma = get_or(j, "gamma", c.gamma);
  c.alpha_exponent = get_or(j, "alpha_exponent", c.alpha_exponent);
  c.alpha_min = get_or(j, "alpha_min", c.alpha_min);
  c.alpha_max = get_or(j, "alpha_max", c.alpha_max);
  c.epsilon_start = get_or(j, "epsilon_start", c.epsilon_start);
  c.epsilon_end = get_or(j, "epsilon_end", c.epsilon_end);
  c.episodes = get_or(j, "episodes", c.episodes);
  c.max_macro_actions = get_or(j, "max_macro_actions", c.max_macro_actions);
  c.seed = get_or(j, "seed", c.seed);
  if (j.contains("mask")) {
    const json& m = j.at("mask");
    c.mask.enabled = get_or(m, "enabled", c.mask.enabled);
    c.mask.threshold = get_or(m, "threshold", c.mask.threshold);
    c.mask.min_visits = get_or(m, "min_visits", c.mask.min_visits);
  }
  c.validate();
  return c;
}

std::string learn_config_to_json(const LearnConfig& c) {
  json j;
  j["gamma"] = c.gamma;
  j["alpha_exponent"] = c.alpha_exponent;
  j["alpha_min"] = c.alpha_min;
  j["alpha_max"] = c.alpha_max;
  j["epsilon_start"] = c.epsilon_start;
  j["epsilon_end"] = c.epsilon_end;
  j["episodes"] = c.episodes;
  j["max_macro_actions"] = c.max_macro_actions;
  j["seed"] = c.seed;
  j["mask"] = {{"enabled", c.mask.enabled}, {"threshold", c.mask.threshold}, {"min_visits", c.mask.min_visits}};
  return dump(j);
}

std::string curve_to_csv(const std::vector<CurvePoint>& curve) {
  std::string out = "episode,reward,epsilon,alpha,macro_actions,micro_actions,success\n";
  for (const auto& p : curve) {
    out += std::to_string(p.episode) + "," + format_double(p.reward) + "," + format_double(p.epsilon) + "," +
           format_double(p.alpha) + "," + std::to_string(p.macro_actions) + "," +
           std::to_string(p.micro_actions) + "," + (p.success ? "1" : "0") + "\n";
  }
  return out;
}

std::string policy_to_json(const TrainResult& result, const OptionLibrary& library) {
  json j = json::object();
  for (const auto& [key, option] : result.policy) j[std::to_string(key)] = library.at(option).id;
  return dump(j);
}

std::string qtable_to_json(const QTable& q, const OptionLibrary& library) {
  if (q.options() != library.size()) throw InvalidArgument("Q-table does not match the option library");
  json ids = json::array();
  for (const auto& o : library) ids.push_back(o.id);
  json states = json::object();
  for (std::uint64_t key : q.keys()) {
    json values = json::array();
    json visits = json::array();
    for (std::size_t o = 0; o < q.options(); ++o) {
      values.push_back(q.value(key, o));
      visits.push_back(q.visits(key, o));
    }
    states[std::to_string(key)] = {{"q", values}, {"n", visits}};
  }
  return dump(json{{"options", ids}, {"states", states}});
}

QTable parse_qtable(const std::string& json_text, const OptionLibrary& library) {
  const json j = parse(json_text, "Q-table");
  const auto ids = require(j, "options", "Q-table").get<std::vector<std::string>>();
  if (ids.size() != library.size()) throw InvalidArgument("Q-table does not match the option library");
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] != library[i].id) throw InvalidArgument("Q-table option '" + ids[i] + "' not in library order");
  }
  QTable q(library.size());
  for (const auto& [key, row] : require(j, "states", "Q-table").items()) {
    const std::uint64_t k = std::stoull(key);
    const auto values = require(row, "q", "Q-table row").get<std::vector<double>>();
    const auto visits = get_or<std::vector<std::uint32_t>>(row, "n", {});
    for (std::size_t o = 0; o < values.size() && o < library.size(); ++o) q.set(k, o, values[o]);
    for (std::size_t o = 0; o < visits.size() && o < library.size(); ++o) q.set_visits(k, o, visits[o]);
  }
  return q;
}

std::string manifest_to_json(const RunManifest& m) {
  json seeds = json::object();
  for (const auto& [name, value] : m.seeds) seeds[name] = value;
  json j;
  j["command"] = m.command;
  j["config"] = parse(m.config_json, "config");
  j["seeds"] = seeds;
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  j["tool_version"] = m.tool_version;
  j["wall_clock_seconds"] = m.wall_clock_seconds ? json(*m.wall_clock_seconds) : json(nullptr);
  return dump(j);
}

}  // namespace primsim::io
