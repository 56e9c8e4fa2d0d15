#include "fixtures.hpp"

#include "primsim/io.hpp"
#include "primsim/synthetic.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <limits>

using namespace primsim;
using namespace fixtures;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("primsim-io-" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

bool same_points(const Shape& a, const Shape& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

}  // namespace

TEST_CASE("doubles print with full precision") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789, 0.0})
    CHECK(std::stod(io::format_double(v)) == v);
}

TEST_CASE("shape JSON round-trips every topology") {
  std::mt19937_64 rng(101);
  const auto tagged = random_chain(rng, 6).with_tags({"a", "a", "b", "b", "c", "c"});
  for (const auto& s : {tagged, random_loop(rng, 9), random_grid(rng)}) {
    const auto back = io::parse_shape(io::shape_to_json(s));
    CHECK(back.topology() == s.topology());
    CHECK(back.dim() == s.dim());
    CHECK(back.rows() == s.rows());
    CHECK(back.region_tags() == s.region_tags());
    CHECK(same_points(back, s));
  }
}

TEST_CASE("shape JSON errors") {
  CHECK_THROWS_AS(io::parse_shape("{"), InvalidArgument);
  CHECK_THROWS_AS(io::parse_shape(R"({"topology":"chain","points":[]})"), InvalidArgument);
  CHECK_THROWS_AS(io::parse_shape(R"({"topology":"chain","points":[[0,0],[1,0,0],[2,0]]})"), InvalidArgument);
  CHECK_THROWS_AS(io::parse_shape(R"({"topology":"mesh","points":[[0,0],[1,0],[2,0]]})"), InvalidArgument);
  CHECK_THROWS_AS(io::parse_shape(R"({"points":[[0,0],[1,0],[2,0]]})"), InvalidArgument);
  CHECK_THROWS_AS(io::parse_shape(R"({"topology":"chain","points":[[0,"x"],[1,0],[2,0]]})"), InvalidArgument);
  CHECK(io::parse_shape(R"({"topology":"chain","points":[[0,0],[1,0],[2,1]]})").dim() == 2);
}

TEST_CASE("sequence JSON round-trips") {
  GeneratorSpec spec;
  spec.class_name = "crouch";
  spec.noise_sigma = 0.01;
  const auto s = generate(spec);
  const auto back = io::parse_sequence(io::sequence_to_json(s));
  CHECK(back.id == s.id);
  CHECK(back.action_label == s.action_label);
  CHECK(back.motion_labels == s.motion_labels);
  CHECK(back.frame_times == s.frame_times);
  REQUIRE(back.length() == s.length());
  for (std::size_t i = 0; i < s.length(); ++i) CHECK(same_points(back.frames[i], s.frames[i]));
}

TEST_CASE("metric files keep unspecified values from the base") {
  io::MetricFile base;
  base.metric.curvature_weight = 3.0;
  base.geodesic = io::sequence_geodesic_defaults();
  const auto f = io::parse_metric(R"({"volume_weight":0.5,"region_emphasis":{"arms":2}})", base);
  CHECK(f.metric.volume_weight == 0.5);
  CHECK(f.metric.curvature_weight == 3.0);
  CHECK(f.metric.region_emphasis.at("arms") == 2.0);
  CHECK(f.geodesic.steps == 4);
  CHECK(f.geodesic.tolerance == 1e-3);
  const auto g = io::parse_metric(R"({"geodesic":{"steps":12}})");
  CHECK(g.geodesic.steps == 12);
  CHECK(g.geodesic.tolerance == GeodesicOptions{}.tolerance);

  const auto round = io::parse_metric(io::metric_to_json(f));
  CHECK(round.metric.volume_weight == f.metric.volume_weight);
  CHECK(round.metric.region_emphasis == f.metric.region_emphasis);
  CHECK(round.geodesic.max_iterations == f.geodesic.max_iterations);

  CHECK_THROWS_AS(io::parse_metric("[]"), InvalidArgument);
  CHECK_THROWS_AS(io::parse_metric(R"({"volume_weight":"heavy"})"), InvalidArgument);
  CHECK_THROWS_AS(io::parse_metric(R"({"volume_weight":0,"curvature_weight":0,"position_weight":0})"), DegenerateMetric);
  CHECK_THROWS_AS(io::parse_metric(R"({"geodesic":{"steps":0}})"), InvalidArgument);
}

TEST_CASE("library manifests round-trip through the filesystem") {
  TempDir dir("library");
  SuiteOptions o;
  o.instances_per_class = 2;
  o.seed = 102;
  const auto lib = generate_suite(o);
  const auto written = io::write_library(dir.path, lib);
  CHECK(written.size() == lib.size() + 1);
  CHECK(written.back() == dir.path / "library.json");
  const auto back = io::read_library(dir.path / "library.json");
  REQUIRE(back.size() == lib.size());
  for (std::size_t i = 0; i < lib.size(); ++i) {
    CHECK(back.entries()[i].id == lib.entries()[i].id);
    CHECK(back.entries()[i].action_label == lib.entries()[i].action_label);
  }

  // Labels in the manifest override the sequence files.
  auto manifest = json::parse(io::read_text(dir.path / "library.json"));
  manifest["entries"][0]["action_label"] = "relabeled";
  io::write_text(dir.path / "library.json", manifest.dump());
  CHECK(io::read_library(dir.path / "library.json").entries()[0].action_label == "relabeled");
  CHECK_THROWS_AS(io::read_text(dir.path / "missing.json"), Error);
}

TEST_CASE("matrix CSV has an id header row and column") {
  Eigen::MatrixXd m(2, 3);
  m << 0.0, 0.1, 1.0 / 3.0, 2.0, 3.5, 4.0;
  const auto csv = io::matrix_to_csv(m, {"r0", "r1"}, {"c0", "c1", "c2"});
  CHECK(csv.rfind("id,c0,c1,c2\nr0,0,0.10000000000000001,0.33333333333333331\n", 0) == 0);
  CHECK(csv.back() == '\n');
  CHECK_THROWS_AS(io::matrix_to_csv(m, {"r0"}, {"c0", "c1", "c2"}), InvalidArgument);
  const auto j = json::parse(io::matrix_to_json(m, {"r0", "r1"}, {"c0", "c1", "c2"}));
  CHECK(j["values"][1][2].get<double>() == 4.0);
  CHECK(j["rows"].size() == 2);
}

TEST_CASE("matrix SVG maps zero to blue and the maximum to red") {
  Eigen::MatrixXd m(1, 2);
  m << 0.0, 1.0;
  const auto svg = io::matrix_to_svg(m, 10);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("#0000ff") != std::string::npos);
  CHECK(svg.find("#ff0000") != std::string::npos);
}

TEST_CASE("option library JSON round-trips") {
  const auto lib = crate_option_library();
  const auto back = io::parse_option_library(io::option_library_to_json(lib));
  REQUIRE(back.size() == lib.size());
  for (std::size_t i = 0; i < lib.size(); ++i) {
    CHECK(back[i].id == lib[i].id);
    CHECK(back[i].class_label == lib[i].class_label);
    CHECK(back[i].micro_actions == lib[i].micro_actions);
  }
  CHECK_THROWS_AS(io::parse_option_library(R"({"options":[{"id":"x","class":"a","micro_actions":["fly"]}]})"),
                  InvalidArgument);
}

TEST_CASE("learn config JSON round-trips and keeps defaults") {
  LearnConfig c;
  c.gamma = 0.9;
  c.episodes = 77;
  c.mask.min_visits = 5;
  c.seed = 12345678901234ULL;
  const auto back = io::parse_learn_config(io::learn_config_to_json(c));
  CHECK(back.gamma == 0.9);
  CHECK(back.episodes == 77);
  CHECK(back.mask.min_visits == 5);
  CHECK(back.seed == c.seed);
  const auto partial = io::parse_learn_config(R"({"episodes":5})");
  CHECK(partial.gamma == 0.8);
  CHECK(partial.episodes == 5);
  CHECK_THROWS_AS(io::parse_learn_config(R"({"gamma":1.5})"), InvalidArgument);
}

TEST_CASE("Q-table JSON round-trips") {
  const auto lib = micro_option_library();
  QTable q(lib.size());
  q.set(3, 1, -2.5);
  q.set_visits(3, 1, 4);
  q.set(999999999999ULL, 7, 1.0 / 3.0);
  const auto back = io::parse_qtable(io::qtable_to_json(q, lib), lib);
  CHECK(back.keys() == q.keys());
  CHECK(back.value(3, 1) == -2.5);
  CHECK(back.visits(3, 1) == 4);
  CHECK(back.value(999999999999ULL, 7) == 1.0 / 3.0);
  CHECK_THROWS_AS(io::parse_qtable(io::qtable_to_json(q, lib), crate_option_library()), InvalidArgument);
}

TEST_CASE("learning curve CSV columns") {
  const std::vector<CurvePoint> curve{{0, -3.0, 1.0, 0.5, 2, 4, false}, {1, 2504.0, 0.5, 0.25, 1, 1, true}};
  const auto csv = io::curve_to_csv(curve);
  CHECK(csv == "episode,reward,epsilon,alpha,macro_actions,micro_actions,success\n"
               "0,-3,1,0.5,2,4,0\n"
               "1,2504,0.5,0.25,1,1,1\n");
}

TEST_CASE("run manifest lists outputs and omits wall-clock by default") {
  io::RunManifest m;
  m.command = "gen";
  m.seeds = {{"master", 7}};
  m.outputs = {"a.json", "manifest.json"};
  m.tool_version = "1.2.3";
  auto j = json::parse(io::manifest_to_json(m));
  CHECK(j["command"] == "gen");
  CHECK(j["outputs"].size() == 2);
  CHECK(j["seeds"]["master"] == 7);
  CHECK(j["wall_clock_seconds"].is_null());
  m.wall_clock_seconds = 1.5;
  j = json::parse(io::manifest_to_json(m));
  CHECK(j["wall_clock_seconds"] == 1.5);
}
