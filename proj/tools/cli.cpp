#include "cli.hpp"

#include "primsim/annotation.hpp"
#include "primsim/io.hpp"
#include "primsim/parallel.hpp"
#include "primsim/rl.hpp"
#include "primsim/synthetic.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#ifndef PRIMSIM_VERSION
#define PRIMSIM_VERSION "0.0.0"
#endif

namespace primsim::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// Collects outputs relative to the output directory and writes the run
// manifest last.
class Run {
 public:
  Run(std::string command, fs::path out, bool timing)
      : out_(std::move(out)), timing_(timing), start_(std::chrono::steady_clock::now()) {
    manifest_.command = std::move(command);
    manifest_.tool_version = PRIMSIM_VERSION;
  }

  void input(const std::string& path) { manifest_.inputs.push_back(path); }
  void seed(const std::string& name, std::uint64_t value) { manifest_.seeds.emplace_back(name, value); }
  void config(const json& j) { manifest_.config_json = j.dump(); }

  void write(const std::string& name, const std::string& text) {
    io::write_text(out_ / name, text);
    manifest_.outputs.push_back(name);
  }

  void record(const std::vector<fs::path>& written) {
    for (const auto& p : written) manifest_.outputs.push_back(fs::relative(p, out_).generic_string());
  }

  const fs::path& out() const { return out_; }

  void finish() {
    manifest_.outputs.push_back("manifest.json");
    if (timing_)
      manifest_.wall_clock_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    io::write_text(out_ / "manifest.json", io::manifest_to_json(manifest_));
  }

 private:
  fs::path out_;
  bool timing_;
  std::chrono::steady_clock::time_point start_;
  io::RunManifest manifest_;
};

struct Common {
  std::string out;
  bool timing = false;
  CLI::Option* seed_opt = nullptr;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string format = "csv";
};

void add_out(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out, "Output directory")->required();
  sub->add_flag("--timing", c.timing, "Record wall-clock time in the manifest");
}

void add_seed(CLI::App* sub, Common& c, bool required) {
  c.seed_opt = sub->add_option("--seed", c.seed, "Master seed");
  if (required) c.seed_opt->required();
}

void add_jobs(CLI::App* sub, Common& c) {
  sub->add_option("--jobs", c.jobs, "Concurrency budget")->check(CLI::PositiveNumber);
}

void add_format(CLI::App* sub, Common& c) {
  sub->add_option("--format", c.format, "Matrix format")->check(CLI::IsMember({"csv", "json"}));
}

// Metric settings: flags override the --metric file, which overrides defaults.
struct MetricArgs {
  std::string file;
  double volume_weight = 0.0;
  double curvature_weight = 0.0;
  double position_weight = 0.0;
  std::size_t steps = 0;
  double tolerance = 0.0;
  int max_iterations = 0;
  CLI::Option* a = nullptr;
  CLI::Option* b = nullptr;
  CLI::Option* c = nullptr;
  CLI::Option* k = nullptr;
  CLI::Option* tol = nullptr;
  CLI::Option* iters = nullptr;
  GeodesicOptions defaults;

  void add(CLI::App* sub, GeodesicOptions geodesic_defaults = {}) {
    defaults = geodesic_defaults;
    sub->add_option("--metric", file, "Metric JSON file")->check(CLI::ExistingFile);
    a = sub->add_option("--volume-weight", volume_weight, "Volume term weight");
    b = sub->add_option("--curvature-weight", curvature_weight, "Curvature term weight");
    c = sub->add_option("--position-weight", position_weight, "Parameter-measure term weight");
    k = sub->add_option("--steps", steps, "Geodesic time steps")->check(CLI::PositiveNumber);
    tol = sub->add_option("--tolerance", tolerance, "Geodesic relative energy tolerance");
    iters = sub->add_option("--max-iterations", max_iterations, "Path-straightening iteration cap");
  }

  io::MetricFile resolve(Run& run) const {
    io::MetricFile m;
    m.geodesic = defaults;
    if (!file.empty()) {
      m = io::read_metric(file, m);
      run.input(file);
    }
    if (a->count()) m.metric.volume_weight = volume_weight;
    if (b->count()) m.metric.curvature_weight = curvature_weight;
    if (c->count()) m.metric.position_weight = position_weight;
    if (k->count()) m.geodesic.steps = steps;
    if (tol->count()) m.geodesic.tolerance = tolerance;
    if (iters->count()) m.geodesic.max_iterations = max_iterations;
    m.metric.validate();
    return m;
  }
};

json metric_json(const io::MetricFile& m) { return json::parse(io::metric_to_json(m)); }

std::vector<std::string> ids_of(const std::vector<MotionSequence>& seqs) {
  std::vector<std::string> ids;
  for (const auto& s : seqs) ids.push_back(s.id);
  return ids;
}

void write_matrix(Run& run, const std::string& stem, const Eigen::MatrixXd& m,
                  const std::vector<std::string>& ids, const std::string& format) {
  if (format == "json")
    run.write(stem + ".json", io::matrix_to_json(m, ids, ids));
  else
    run.write(stem + ".csv", io::matrix_to_csv(m, ids, ids));
  run.write(stem + ".svg", io::matrix_to_svg(m));
}

PrimitiveLibrary load_library(const std::string& path, Run& run) {
  run.input(path);
  return io::read_library(path);
}

// ---------------------------------------------------------------------- gen

struct GenArgs {
  Common common;
  std::string suite = "default";
  std::string class_name;
  std::size_t instances = 8;
  std::size_t frames = 16;
  double noise = 0.0;
  double speed = 1.0;
};

void run_gen(const GenArgs& a) {
  Run run("gen", a.common.out, a.common.timing);
  SuiteOptions opt;
  opt.instances_per_class = a.instances;
  opt.duration_frames = a.frames;
  opt.noise_sigma = a.noise;
  opt.speed_factor = a.speed;
  opt.seed = a.common.seed;
  std::vector<MotionSequence> seqs;
  for (const auto& spec : default_suite_specs(opt)) {
    if (!a.class_name.empty() && spec.class_name != a.class_name) continue;
    seqs.push_back(generate(spec));
  }
  if (seqs.empty()) throw UsageError("unknown motion class '" + a.class_name + "'");
  run.seed("seed", a.common.seed);
  run.config({{"suite", a.suite},
              {"class", a.class_name},
              {"instances", a.instances},
              {"frames", a.frames},
              {"noise", a.noise},
              {"speed", a.speed}});
  run.record(io::write_library(run.out(), PrimitiveLibrary(std::move(seqs))));
  run.finish();
}

// ----------------------------------------------------------------- distance

struct DistanceArgs {
  Common common;
  MetricArgs metric;
  std::string a;
  std::string b;
  bool path = false;
};

void run_distance(const DistanceArgs& d) {
  Run run("distance", d.common.out, d.common.timing);
  const auto m = d.metric.resolve(run);
  run.input(d.a);
  run.input(d.b);
  const Shape a = io::read_shape(d.a);
  const Shape b = io::read_shape(d.b);
  const CorrespondenceResult c = align(a, b);
  const GeodesicPath g = geodesic(c.shape_a, c.shape_b, m.metric, m.geodesic);
  run.config({{"metric", metric_json(m)}, {"path", d.path}});
  run.write("distance.json", dump({{"distance", g.length},
                                   {"energy", g.energy},
                                   {"converged", g.converged},
                                   {"iterations", g.iterations},
                                   {"reparameterization", c.reparam.describe()},
                                   {"residual", c.residual}}));
  if (d.path) {
    json shapes = json::array();
    for (const auto& s : g.shapes) shapes.push_back(json::parse(io::shape_to_json(s)));
    run.write("geodesic.json", dump({{"shapes", shapes}}));
  }
  run.finish();
}

// ----------------------------------------------------------------- self-sim

struct SelfSimArgs {
  Common common;
  MetricArgs metric;
  std::string seq;
  std::vector<std::string> region;
};

void run_self_sim(const SelfSimArgs& s) {
  Run run("self-sim", s.common.out, s.common.timing);
  const auto m = s.metric.resolve(run);
  run.input(s.seq);
  const MotionSequence seq = io::read_sequence(s.seq);
  SequenceOptions opt;
  opt.geodesic = m.geodesic;
  opt.jobs = s.common.jobs;
  const auto ssm = self_similarity(seq, m.metric, s.region, opt);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < seq.length(); ++i) ids.push_back(std::to_string(i));
  run.config({{"metric", metric_json(m)}, {"region", s.region}, {"format", s.common.format}});
  write_matrix(run, "self_similarity", ssm.values, ids, s.common.format);
  run.finish();
}

// ----------------------------------------------------------------- seq-dist

struct SeqDistArgs {
  Common common;
  MetricArgs metric;
  std::string lib;
  std::vector<std::string> seqs;
  bool strict = false;
};

void run_seq_dist(const SeqDistArgs& s) {
  Run run("seq-dist", s.common.out, s.common.timing);
  const auto m = s.metric.resolve(run);
  std::vector<MotionSequence> seqs;
  if (!s.lib.empty()) seqs = load_library(s.lib, run).entries();
  for (const auto& p : s.seqs) {
    run.input(p);
    seqs.push_back(io::read_sequence(p));
  }
  if (seqs.size() < 2) throw UsageError("seq-dist needs at least two sequences (--lib or --seq)");
  SequenceOptions opt;
  opt.geodesic = m.geodesic;
  opt.jobs = s.common.jobs;
  opt.strict_correspondence = s.strict;
  const auto dist = sequence_distance_matrix(seqs, m.metric, opt);
  run.config({{"metric", metric_json(m)}, {"strict", s.strict}, {"format", s.common.format}});
  write_matrix(run, "distances", dist, ids_of(seqs), s.common.format);
  run.finish();
}

// ----------------------------------------------------------------- annotate

struct AnnotateArgs {
  Common common;
  MetricArgs metric;
  std::string lib;
  std::vector<std::string> queries;
  std::size_t k = 5;
  std::size_t bags = 0;
};

void run_annotate(const AnnotateArgs& a) {
  if (a.bags > 0 && !a.common.seed_opt->count()) throw UsageError("--seed is required with --bags");
  Run run("annotate", a.common.out, a.common.timing);
  const auto m = a.metric.resolve(run);
  const PrimitiveLibrary lib = load_library(a.lib, run);
  std::vector<MotionSequence> queries;
  for (const auto& p : a.queries) {
    run.input(p);
    queries.push_back(io::read_sequence(p));
  }
  SequenceOptions opt;
  opt.geodesic = m.geodesic;
  std::vector<Annotation> results(queries.size());
  parallel_for(queries.size(), a.common.jobs, [&](std::size_t i) {
    if (a.bags > 0) {
      BaggingOptions bag;
      bag.bags = a.bags;
      bag.seed = derive_seed(a.common.seed, i);
      results[i] = bagged_annotate(queries[i], lib, a.k, bag, m.metric, opt);
    } else {
      results[i] = knn_annotate(queries[i], lib, a.k, m.metric, opt);
    }
  });
  json arr = json::array();
  for (std::size_t i = 0; i < queries.size(); ++i)
    arr.push_back(json::parse(io::annotation_to_json(queries[i].id, results[i])));
  if (a.bags > 0) run.seed("seed", a.common.seed);
  run.config({{"metric", metric_json(m)}, {"k", a.k}, {"bags", a.bags}});
  run.write("annotations.json", dump({{"annotations", arr}}));
  run.finish();
}

// --------------------------------------------------------------------- eval

struct EvalArgs {
  Common common;
  MetricArgs metric;
  std::string lib;
  std::string protocol = "one-shot";
  std::size_t trials = 20;
  std::size_t k = 5;
  std::size_t bags = 0;
  double split = 0.5;
};

void run_eval(const EvalArgs& e) {
  Run run("eval", e.common.out, e.common.timing);
  const auto m = e.metric.resolve(run);
  const PrimitiveLibrary lib = load_library(e.lib, run);
  EvaluationOptions opt;
  opt.protocol = e.protocol == "split" ? Protocol::Split : Protocol::OneShot;
  opt.split_fraction = e.split;
  opt.trials = e.trials;
  opt.k = e.k;
  opt.bags = e.bags;
  opt.seed = e.common.seed;
  SequenceOptions seq_opt;
  seq_opt.geodesic = m.geodesic;
  seq_opt.jobs = e.common.jobs;
  const auto dist = sequence_distance_matrix(lib.entries(), m.metric, seq_opt);
  const auto report = evaluate(lib, dist, opt);
  run.seed("seed", e.common.seed);
  run.config({{"metric", metric_json(m)},
              {"protocol", e.protocol},
              {"trials", e.trials},
              {"k", e.k},
              {"bags", e.bags},
              {"split", e.split},
              {"format", e.common.format}});
  write_matrix(run, "distances", dist, ids_of(lib.entries()), e.common.format);
  run.write("report.json", io::report_to_json(report, opt));
  run.finish();
}

// ------------------------------------------------------------------ corrupt

struct CorruptArgs {
  Common common;
  std::string lib;
  double rate = 0.0;
  std::string mode = "uniform";
  std::vector<std::string> classes;
};

void run_corrupt(const CorruptArgs& c) {
  if (c.mode == "targeted" && c.classes.empty())
    throw UsageError("--classes is required with --mode targeted");
  Run run("corrupt", c.common.out, c.common.timing);
  const PrimitiveLibrary lib = load_library(c.lib, run);
  const auto mode = c.mode == "targeted" ? CorruptionMode::ClassTargeted : CorruptionMode::Uniform;
  const auto result = corrupt_labels(lib, c.rate, mode, c.classes, c.common.seed);
  run.seed("seed", c.common.seed);
  run.config({{"rate", c.rate}, {"mode", c.mode}, {"classes", c.classes}});
  run.record(io::write_library(run.out(), result.library));
  run.write("corrupted.json", dump({{"corrupted_ids", result.corrupted_ids}}));
  run.finish();
}

// ---------------------------------------------------------------------- rl

struct TaskArgs {
  std::string task = "crate";
  std::string options = "builtin";
  std::string mode = "annotated";

  void add(CLI::App* sub) {
    sub->add_option("--task", task, "Environment")->check(CLI::IsMember({"crate", "wipe"}));
    sub->add_option("--options", options, "builtin, micro, or an option library JSON file");
    sub->add_option("--mode", mode, "Option selection")->check(CLI::IsMember({"annotated", "flat"}));
  }

  OptionLibrary library(Run& run) const {
    if (options == "builtin") return task == "crate" ? crate_option_library() : wipe_option_library();
    if (options == "micro") return micro_option_library();
    run.input(options);
    return io::parse_option_library(io::read_text(options));
  }

  std::vector<std::string> relevant() const {
    return task == "crate" ? crate_relevant_classes() : wipe_relevant_classes();
  }

  EnvironmentFactory factory() const {
    if (task == "crate") return [] { return std::unique_ptr<Environment>(new CrateEnvironment()); };
    return [] { return std::unique_ptr<Environment>(new WipeEnvironment()); };
  }
};

struct LearnArgs {
  std::string file;
  std::size_t episodes = 0;
  double gamma = 0.0;
  bool no_mask = false;
  CLI::Option* ep = nullptr;
  CLI::Option* g = nullptr;

  void add(CLI::App* sub) {
    sub->add_option("--config", file, "Learning configuration JSON")->check(CLI::ExistingFile);
    ep = sub->add_option("--episodes", episodes, "Episode budget");
    g = sub->add_option("--gamma", gamma, "Discount factor");
    sub->add_flag("--no-mask", no_mask, "Disable class masking");
  }

  LearnConfig resolve(Run& run) const {
    LearnConfig c;
    if (!file.empty()) {
      c = io::parse_learn_config(io::read_text(file));
      run.input(file);
    }
    if (ep->count()) c.episodes = episodes;
    if (g->count()) c.gamma = gamma;
    if (no_mask) c.mask.enabled = false;
    c.validate();
    return c;
  }
};

struct TrainArgs {
  Common common;
  TaskArgs task;
  LearnArgs learn;
  std::size_t runs = 1;
  double corrupt_rate = 0.0;
  std::string corrupt_mode = "targeted";
  std::vector<std::string> remove;
  std::size_t duplicate = 1;
};

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void run_rl_train(const TrainArgs& t) {
  Run run("rl-train", t.common.out, t.common.timing);
  LearnConfig config = t.learn.resolve(run);
  OptionLibrary library = t.task.library(run);
  if (!t.remove.empty()) library = remove_classes(library, t.remove);
  if (t.duplicate > 1) library = duplicate_options(library, t.duplicate);
  std::vector<std::string> corrupted;
  if (t.corrupt_rate > 0.0) {
    const auto mode =
        t.corrupt_mode == "uniform" ? CorruptionMode::Uniform : CorruptionMode::ClassTargeted;
    auto c = corrupt_option_labels(library, t.corrupt_rate, mode, t.task.relevant(),
                                   derive_seed(t.common.seed, 1u << 20));
    library = std::move(c.library);
    corrupted = std::move(c.corrupted_ids);
  }
  const SelectionMode mode = selection_mode_from_string(t.task.mode);
  validate_library(library, mode == SelectionMode::Annotated);

  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < t.runs; ++i) seeds.push_back(derive_seed(t.common.seed, i));
  const auto results = train_many(t.task.factory(), library, config, mode, seeds, t.common.jobs);

  run.seed("seed", t.common.seed);
  for (std::size_t i = 0; i < seeds.size(); ++i) run.seed("run-" + std::to_string(i), seeds[i]);
  config.seed = t.common.seed;
  run.config({{"task", t.task.task},
              {"options", t.task.options},
              {"mode", t.task.mode},
              {"learn", json::parse(io::learn_config_to_json(config))},
              {"runs", t.runs},
              {"corrupt_rate", t.corrupt_rate},
              {"corrupt_mode", t.corrupt_mode},
              {"remove_classes", t.remove},
              {"duplicate", t.duplicate}});

  run.write("options.json", io::option_library_to_json(library));
  json runs = json::array();
  std::vector<double> finals;
  std::vector<double> areas;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const std::string dir = t.runs == 1 ? "" : "run-" + std::to_string(i) + "/";
    run.write(dir + "curve.csv", io::curve_to_csv(results[i].curve));
    run.write(dir + "policy.json", io::policy_to_json(results[i], library));
    run.write(dir + "qtable.json", io::qtable_to_json(results[i].q, library));
    finals.push_back(final_reward(results[i].curve));
    areas.push_back(area_under_curve(results[i].curve));
    runs.push_back({{"seed", seeds[i]},
                    {"final_reward", finals.back()},
                    {"area_under_curve", areas.back()},
                    {"final_successes", successes(results[i].curve)}});
  }
  run.write("summary.json", dump({{"runs", runs},
                                  {"median_final_reward", median(finals)},
                                  {"median_area_under_curve", median(areas)},
                                  {"corrupted_ids", corrupted}}));
  run.finish();
}

struct EvalRlArgs {
  Common common;
  TaskArgs task;
  std::string qtable;
  std::size_t episodes = 100;
  double epsilon = 0.0;
  double gamma = 0.8;
  std::size_t max_macro = 100;
  bool no_mask = false;
};

void run_rl_eval(const EvalRlArgs& e) {
  Run run("rl-eval", e.common.out, e.common.timing);
  const OptionLibrary library = e.task.library(run);
  run.input(e.qtable);
  const QTable q = io::parse_qtable(io::read_text(e.qtable), library);
  const SelectionMode mode = selection_mode_from_string(e.task.mode);
  MaskConfig mask;
  mask.enabled = !e.no_mask;
  auto env = e.task.factory()();
  std::mt19937_64 start_rng(derive_seed(e.common.seed, 0));
  std::mt19937_64 pick_rng(derive_seed(e.common.seed, 1));
  std::string csv = "episode,reward,macro_actions,micro_actions,success\n";
  double total = 0.0;
  std::size_t wins = 0;
  for (std::size_t i = 0; i < e.episodes; ++i) {
    env->reset(start_rng);
    const EpisodeLog log =
        run_episode(*env, library, q, mode, e.epsilon, e.max_macro, e.gamma, pick_rng, mask);
    std::size_t micro = 0;
    for (const auto& s : log.steps) micro += s.micro_rewards.size();
    csv += std::to_string(i) + "," + io::format_double(log.total_reward) + "," +
           std::to_string(log.steps.size()) + "," + std::to_string(micro) + "," +
           (log.success ? "1" : "0") + "\n";
    total += log.total_reward;
    wins += log.success ? 1 : 0;
  }
  const double n = e.episodes ? static_cast<double>(e.episodes) : 1.0;
  run.seed("seed", e.common.seed);
  run.config({{"task", e.task.task},
              {"options", e.task.options},
              {"mode", e.task.mode},
              {"episodes", e.episodes},
              {"epsilon", e.epsilon},
              {"gamma", e.gamma},
              {"max_macro_actions", e.max_macro},
              {"mask", !e.no_mask}});
  run.write("episodes.csv", csv);
  run.write("evaluation.json", dump({{"episodes", e.episodes},
                                     {"mean_reward", total / n},
                                     {"success_rate", static_cast<double>(wins) / n}}));
  run.finish();
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Elastic shape similarity, motion annotation and primitive-based learning", "primsim"};
  app.set_version_flag("--version", PRIMSIM_VERSION);
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic motion library");
  add_out(gen_cmd, gen.common);
  add_seed(gen_cmd, gen.common, true);
  gen_cmd->add_option("--suite", gen.suite, "Suite name")->check(CLI::IsMember({"default"}));
  gen_cmd->add_option("--class", gen.class_name, "Restrict to one motion class");
  gen_cmd->add_option("--instances", gen.instances, "Instances per class")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--frames", gen.frames, "Frames per sequence at speed 1");
  gen_cmd->add_option("--noise", gen.noise, "Per-point Gaussian noise sigma");
  gen_cmd->add_option("--speed", gen.speed, "Speed factor");

  DistanceArgs dist;
  auto* dist_cmd = app.add_subcommand("distance", "Geodesic distance between two shapes");
  add_out(dist_cmd, dist.common);
  dist.metric.add(dist_cmd);
  dist_cmd->add_option("--a", dist.a, "First shape JSON")->required()->check(CLI::ExistingFile);
  dist_cmd->add_option("--b", dist.b, "Second shape JSON")->required()->check(CLI::ExistingFile);
  dist_cmd->add_flag("--path", dist.path, "Also write the geodesic path");

  SelfSimArgs ssm;
  auto* ssm_cmd = app.add_subcommand("self-sim", "Self-similarity matrix of a sequence");
  add_out(ssm_cmd, ssm.common);
  add_jobs(ssm_cmd, ssm.common);
  add_format(ssm_cmd, ssm.common);
  ssm.metric.add(ssm_cmd, io::sequence_geodesic_defaults());
  ssm_cmd->add_option("--seq", ssm.seq, "Sequence JSON")->required()->check(CLI::ExistingFile);
  ssm_cmd->add_option("--region", ssm.region, "Restrict to region tags");

  SeqDistArgs sd;
  auto* sd_cmd = app.add_subcommand("seq-dist", "Pairwise sequence distance matrix");
  add_out(sd_cmd, sd.common);
  add_jobs(sd_cmd, sd.common);
  add_format(sd_cmd, sd.common);
  sd.metric.add(sd_cmd, io::sequence_geodesic_defaults());
  sd_cmd->add_option("--lib", sd.lib, "Library manifest")->check(CLI::ExistingFile);
  sd_cmd->add_option("--seq", sd.seqs, "Sequence JSON (repeatable)")->check(CLI::ExistingFile);
  sd_cmd->add_flag("--strict", sd.strict, "Search correspondence for every frame pair");

  AnnotateArgs ann;
  auto* ann_cmd = app.add_subcommand("annotate", "Annotate query sequences against a library");
  add_out(ann_cmd, ann.common);
  add_seed(ann_cmd, ann.common, false);
  add_jobs(ann_cmd, ann.common);
  ann.metric.add(ann_cmd, io::sequence_geodesic_defaults());
  ann_cmd->add_option("--lib", ann.lib, "Library manifest")->required()->check(CLI::ExistingFile);
  ann_cmd->add_option("--query", ann.queries, "Query sequence JSON (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  ann_cmd->add_option("--k", ann.k, "Neighbors")->check(CLI::PositiveNumber);
  ann_cmd->add_option("--bags", ann.bags, "Bagging ensemble size, 0 disables");

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval", "Monte Carlo annotation accuracy");
  add_out(ev_cmd, ev.common);
  add_seed(ev_cmd, ev.common, true);
  add_jobs(ev_cmd, ev.common);
  add_format(ev_cmd, ev.common);
  ev.metric.add(ev_cmd, io::sequence_geodesic_defaults());
  ev_cmd->add_option("--lib", ev.lib, "Library manifest")->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--protocol", ev.protocol, "Evaluation protocol")
      ->check(CLI::IsMember({"one-shot", "split"}));
  ev_cmd->add_option("--trials", ev.trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
  ev_cmd->add_option("--k", ev.k, "Neighbors")->check(CLI::PositiveNumber);
  ev_cmd->add_option("--bags", ev.bags, "Bagging ensemble size, 0 disables");
  ev_cmd->add_option("--split", ev.split, "Training fraction for the split protocol")
      ->check(CLI::Range(0.0, 1.0));

  CorruptArgs cor;
  auto* cor_cmd = app.add_subcommand("corrupt", "Corrupt library labels");
  add_out(cor_cmd, cor.common);
  add_seed(cor_cmd, cor.common, true);
  cor_cmd->add_option("--lib", cor.lib, "Library manifest")->required()->check(CLI::ExistingFile);
  cor_cmd->add_option("--rate", cor.rate, "Fraction to relabel")->required()->check(CLI::Range(0.0, 1.0));
  cor_cmd->add_option("--mode", cor.mode, "Corruption mode")
      ->check(CLI::IsMember({"uniform", "targeted"}));
  cor_cmd->add_option("--classes", cor.classes, "Targeted classes");

  TrainArgs tr;
  auto* tr_cmd = app.add_subcommand("rl-train", "Train an SMDP Q-learning agent");
  add_out(tr_cmd, tr.common);
  add_seed(tr_cmd, tr.common, true);
  add_jobs(tr_cmd, tr.common);
  tr.task.add(tr_cmd);
  tr.learn.add(tr_cmd);
  tr_cmd->add_option("--runs", tr.runs, "Independent seeds derived from --seed")
      ->check(CLI::PositiveNumber);
  tr_cmd->add_option("--corrupt-rate", tr.corrupt_rate, "Relabel this fraction of options")
      ->check(CLI::Range(0.0, 1.0));
  tr_cmd->add_option("--corrupt-mode", tr.corrupt_mode, "Corruption mode")
      ->check(CLI::IsMember({"uniform", "targeted"}));
  tr_cmd->add_option("--remove-classes", tr.remove, "Drop these option classes");
  tr_cmd->add_option("--duplicate", tr.duplicate, "Copies of every option")->check(CLI::PositiveNumber);

  EvalRlArgs er;
  auto* er_cmd = app.add_subcommand("rl-eval", "Roll out a trained Q-table");
  add_out(er_cmd, er.common);
  add_seed(er_cmd, er.common, true);
  er.task.add(er_cmd);
  er_cmd->add_option("--qtable", er.qtable, "Q-table JSON from rl-train")
      ->required()
      ->check(CLI::ExistingFile);
  er_cmd->add_option("--episodes", er.episodes, "Episodes");
  er_cmd->add_option("--epsilon", er.epsilon, "Exploration rate")->check(CLI::Range(0.0, 1.0));
  er_cmd->add_option("--gamma", er.gamma, "Discount factor")->check(CLI::Range(0.0, 1.0));
  er_cmd->add_option("--max-macro-actions", er.max_macro, "Macro-action cap per episode");
  er_cmd->add_flag("--no-mask", er.no_mask, "Disable class masking");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << PRIMSIM_VERSION << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return 2;
  }

  const std::vector<std::pair<CLI::App*, std::function<void()>>> handlers = {
      {gen_cmd, [&] { run_gen(gen); }},          {dist_cmd, [&] { run_distance(dist); }},
      {ssm_cmd, [&] { run_self_sim(ssm); }},     {sd_cmd, [&] { run_seq_dist(sd); }},
      {ann_cmd, [&] { run_annotate(ann); }},     {ev_cmd, [&] { run_eval(ev); }},
      {cor_cmd, [&] { run_corrupt(cor); }},      {tr_cmd, [&] { run_rl_train(tr); }},
      {er_cmd, [&] { run_rl_eval(er); }},
  };
  for (const auto& [cmd, handler] : handlers) {
    if (!cmd->parsed()) continue;
    try {
      handler();
      return 0;
    } catch (const UsageError& e) {
      err << "error: " << e.what() << "\n\n" << cmd->help();
      return 2;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return 1;
    }
  }
  return 2;
}

}  // namespace primsim::cli
