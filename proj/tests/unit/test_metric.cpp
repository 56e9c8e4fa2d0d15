#include "fixtures.hpp"

#include "primsim/metric.hpp"

#include <doctest.h>

#include <algorithm>

using namespace primsim;
using namespace fixtures;

namespace {

DeformationField random_field(std::mt19937_64& rng, std::size_t n, bool planar = true) {
  std::normal_distribution<double> g(0.0, 1.0);
  DeformationField f;
  for (std::size_t i = 0; i < n; ++i) f.vectors.emplace_back(g(rng), g(rng), planar ? 0.0 : g(rng));
  return f;
}

DeformationField combine(double s, const DeformationField& u, const DeformationField& w) {
  DeformationField r;
  for (std::size_t i = 0; i < u.vectors.size(); ++i) r.vectors.push_back(s * u.vectors[i] + w.vectors[i]);
  return r;
}

DeformationField difference(const Shape& a, const Shape& b) {
  DeformationField d;
  for (std::size_t i = 0; i < a.size(); ++i) d.vectors.push_back(b[i] - a[i]);
  return d;
}

std::vector<Shape> interpolation(const Shape& a, const Shape& b, std::size_t k,
                                 std::mt19937_64* rng = nullptr, double sigma = 0.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Shape> path;
  for (std::size_t j = 0; j <= k; ++j) {
    const double s = static_cast<double>(j) / static_cast<double>(k);
    std::vector<Point> pts;
    for (std::size_t i = 0; i < a.size(); ++i) {
      Point p = (1.0 - s) * a[i] + s * b[i];
      if (rng && j > 0 && j < k) p += sigma * Point(g(*rng), g(*rng), a.dim() == 3 ? g(*rng) : 0.0);
      pts.push_back(p);
    }
    path.push_back(a.with_points(std::move(pts)));
  }
  return path;
}

MetricConfig tagged_config() {
  MetricConfig cfg{0.7, 1.3, 0.4, {{"head", 2.5}, {"tail", 0.5}}};
  return cfg;
}

Shape tagged_loop(std::mt19937_64& rng, std::size_t n) {
  const auto s = random_loop(rng, n);
  std::vector<std::string> tags;
  for (std::size_t i = 0; i < n; ++i) tags.push_back(i < n / 3 ? "head" : (i < 2 * n / 3 ? "body" : "tail"));
  return s.with_tags(tags);
}

}  // namespace

TEST_CASE("metric config validation") {
  CHECK_THROWS_AS(MetricConfig({0, 0, 0, {}}).validate(), DegenerateMetric);
  CHECK_THROWS_AS(MetricConfig({-1, 1, 1, {}}).validate(), InvalidArgument);
  CHECK_THROWS_AS(MetricConfig({1, 1, 1, {{"x", -2.0}}}).validate(), InvalidArgument);
  CHECK_THROWS_AS(MetricConfig({1, 1, 1, {{"x", std::numeric_limits<double>::infinity()}}}).validate(),
                  InvalidArgument);
  CHECK_NOTHROW(MetricConfig::flat().validate());
  CHECK_NOTHROW(MetricConfig{}.validate());
}

TEST_CASE("metric inner product is positive on 1000 random draws") {
  std::mt19937_64 rng(31);
  const MetricConfig cfg = tagged_config();
  for (int t = 0; t < 1000; ++t) {
    const auto q = tagged_loop(rng, 12);
    const auto u = random_field(rng, 12);
    CHECK(metric_inner(q, u, u, cfg) > 0.0);
  }
  const auto q = circle(12);
  DeformationField zero{std::vector<Point>(12, Point::Zero())};
  CHECK(metric_inner(q, zero, zero, cfg) == 0.0);
}

TEST_CASE("flat metric is the mean pointwise inner product on a loop") {
  std::mt19937_64 rng(32);
  const auto q = centroid_and_scale_normalize(random_loop(rng, 20)).first;
  const auto u = random_field(rng, 20), v = random_field(rng, 20);
  double direct = 0.0;
  for (std::size_t i = 0; i < 20; ++i) direct += u.vectors[i].dot(v.vectors[i]);
  direct /= 20.0;
  CHECK(metric_inner(q, u, v, MetricConfig::flat()) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("flat metric on a chain halves the endpoint weights") {
  std::mt19937_64 rng(33);
  const auto q = random_chain(rng, 9);
  const auto u = random_field(rng, 9), v = random_field(rng, 9);
  double direct = 0.0;
  for (std::size_t e = 0; e < 8; ++e)
    direct += 0.5 * (u.vectors[e].dot(v.vectors[e]) + u.vectors[e + 1].dot(v.vectors[e + 1])) / 8.0;
  CHECK(metric_inner(q, u, v, MetricConfig::flat()) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("metric inner product is symmetric and bilinear") {
  std::mt19937_64 rng(34);
  const MetricConfig cfg = tagged_config();
  for (int t = 0; t < 50; ++t) {
    const auto q = tagged_loop(rng, 16);
    const auto u = random_field(rng, 16), v = random_field(rng, 16), w = random_field(rng, 16);
    const double lhs = metric_inner(q, combine(2.0, u, w), v, cfg);
    const double rhs = 2.0 * metric_inner(q, u, v, cfg) + metric_inner(q, w, v, cfg);
    CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, std::abs(lhs)));
    CHECK(std::abs(metric_inner(q, u, v, cfg) - metric_inner(q, v, u, cfg)) <= 1e-12);
  }
}

TEST_CASE("metric inner product on grids") {
  std::mt19937_64 rng(35);
  const auto q = random_grid(rng);
  const auto u = random_field(rng, q.size(), false), v = random_field(rng, q.size(), false);
  CHECK(metric_inner(q, u, u, MetricConfig{}) > 0.0);
  CHECK(metric_inner(q, u, v, MetricConfig{}) == doctest::Approx(metric_inner(q, v, u, MetricConfig{})));
}

TEST_CASE("metric inner product rejects cardinality mismatch") {
  std::mt19937_64 rng(36);
  CHECK_THROWS(metric_inner(circle(10), random_field(rng, 9), random_field(rng, 10), MetricConfig{}));
}

TEST_CASE("region emphasis of zero removes a region's contribution") {
  const auto q = circle(12).with_tags(std::vector<std::string>(12, "a"));
  std::mt19937_64 rng(37);
  const auto u = random_field(rng, 12);
  MetricConfig cfg;
  cfg.region_emphasis = {{"a", 0.0}};
  CHECK_THROWS_AS(metric_inner(q, u, u, cfg), DegenerateMetric);
}

TEST_CASE("path energy of a constant path is zero") {
  const auto q = circle(16);
  const std::vector<Shape> path(5, q);
  CHECK(path_energy(path, MetricConfig{}) == 0.0);
  CHECK(path_length(path, MetricConfig{}) == 0.0);
}

TEST_CASE("flat two-frame path has energy half the squared norm") {
  std::mt19937_64 rng(38);
  const auto a = random_loop(rng, 16), b = random_loop(rng, 16);
  const std::vector<Shape> path{a, b};
  const auto d = difference(a, b);
  const double norm2 = metric_inner(a, d, d, MetricConfig::flat());
  CHECK(path_energy(path, MetricConfig::flat()) == doctest::Approx(0.5 * norm2).epsilon(1e-12));
}

TEST_CASE("path energy rejects mismatched frames") {
  const std::vector<Shape> bad{circle(10), circle(12)};
  CHECK_THROWS(path_energy(bad, MetricConfig{}));
  const std::vector<Shape> single{circle(10)};
  CHECK_THROWS(path_energy(single, MetricConfig{}));
}

TEST_CASE("path energy converges under time refinement") {
  // Fixed smooth interpolation: a circle morphing into a rotated ellipse.
  auto frame = [](double s) {
    const double a = 1.0 + s, b = 1.0 - 0.3 * s;
    auto pts = ellipse_points(32, a, b);
    for (auto& p : pts) p = Eigen::AngleAxisd(0.5 * s, Eigen::Vector3d::UnitZ()) * p;
    return Shape::loop(pts, 2);
  };
  auto energy = [&](std::size_t k) {
    std::vector<Shape> path;
    for (std::size_t j = 0; j <= k; ++j) path.push_back(frame(static_cast<double>(j) / k));
    return path_energy(path, MetricConfig{});
  };
  const double e8 = energy(8), e16 = energy(16);
  CHECK(std::abs(e16 - e8) / e16 <= 0.01);
}

TEST_CASE("length is bounded by the energy") {
  std::mt19937_64 rng(39);
  for (int t = 0; t < 20; ++t) {
    const auto path = interpolation(random_loop(rng, 16), random_loop(rng, 16), 8, &rng, 0.05);
    const double e = path_energy(path, MetricConfig{}), l = path_length(path, MetricConfig{});
    CHECK(l <= std::sqrt(2.0 * e) + 1e-6);
  }
}

TEST_CASE("gradient vanishes on a flat straight-line path") {
  std::mt19937_64 rng(40);
  const auto path = interpolation(random_loop(rng, 16), random_loop(rng, 16), 6);
  const auto g = path_energy_gradient(path, MetricConfig::flat());
  REQUIRE(g.size() == path.size());
  for (const auto& f : g)
    for (const auto& v : f.vectors) CHECK(v.norm() <= 1e-9);
}

TEST_CASE("gradient matches central differences on 20 random coordinates") {
  std::mt19937_64 rng(41);
  const MetricConfig cfg = tagged_config();
  const auto a = tagged_loop(rng, 14), b = tagged_loop(rng, 14);
  const auto path = interpolation(a, b, 5, &rng, 0.05);
  const auto g = path_energy_gradient(path, cfg);
  for (const auto& v : g.front().vectors) CHECK(v.norm() == 0.0);
  for (const auto& v : g.back().vectors) CHECK(v.norm() == 0.0);
  double scale = 0.0;
  for (const auto& f : g)
    for (const auto& v : f.vectors) scale = std::max(scale, v.cwiseAbs().maxCoeff());
  std::uniform_int_distribution<std::size_t> frame(1, 4), vertex(0, 13);
  std::uniform_int_distribution<int> axis(0, 1);
  const double h = 1e-6;
  for (int t = 0; t < 20; ++t) {
    const std::size_t j = frame(rng), i = vertex(rng);
    const int d = axis(rng);
    auto work = path;
    std::vector<Point> pts(path[j].points().begin(), path[j].points().end());
    pts[i][d] += h;
    work[j] = path[j].with_points(pts);
    const double up = path_energy(work, cfg);
    pts[i][d] -= 2.0 * h;
    work[j] = path[j].with_points(pts);
    const double down = path_energy(work, cfg);
    const double fd = (up - down) / (2.0 * h);
    const double an = g[j].vectors[i][d];
    CHECK(std::abs(fd - an) / std::max(std::abs(an), 1e-2 * scale) <= 1e-4);
  }
}

TEST_CASE("gradient matches central differences on a grid path") {
  std::mt19937_64 rng(42);
  const auto path = interpolation(random_grid(rng), random_grid(rng), 3, &rng, 0.03);
  const auto g = path_energy_gradient(path, MetricConfig{});
  const double h = 1e-6;
  double num = 0.0, den = 0.0;
  auto work = path;
  for (std::size_t i = 0; i < path[1].size(); ++i) {
    for (int d = 0; d < 3; ++d) {
      std::vector<Point> pts(path[1].points().begin(), path[1].points().end());
      pts[i][d] += h;
      work[1] = path[1].with_points(pts);
      const double up = path_energy(work, MetricConfig{});
      pts[i][d] -= 2.0 * h;
      work[1] = path[1].with_points(pts);
      const double down = path_energy(work, MetricConfig{});
      const double fd = (up - down) / (2.0 * h);
      num += std::pow(fd - g[1].vectors[i][d], 2);
      den += fd * fd;
    }
  }
  CHECK(std::sqrt(num / den) <= 1e-4);
}

TEST_CASE("a small step along the negative gradient decreases energy") {
  std::mt19937_64 rng(43);
  const auto path = interpolation(random_loop(rng, 16), random_loop(rng, 16), 6, &rng, 0.05);
  const auto g = path_energy_gradient(path, MetricConfig{});
  auto moved = path;
  for (std::size_t j = 1; j + 1 < path.size(); ++j) {
    std::vector<Point> pts(path[j].points().begin(), path[j].points().end());
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i] -= 1e-4 * g[j].vectors[i];
    moved[j] = path[j].with_points(pts);
  }
  CHECK(path_energy(moved, MetricConfig{}) < path_energy(path, MetricConfig{}));
}

TEST_CASE("geodesic between identical shapes is trivial") {
  const auto q = circle(24);
  const auto g = geodesic(q, q, MetricConfig{});
  CHECK(g.length == 0.0);
  CHECK(g.energy == 0.0);
  CHECK(g.converged);
  CHECK(g.iterations == 0);
}

TEST_CASE("flat geodesic is the linear interpolation") {
  std::mt19937_64 rng(44);
  const auto c = align(random_loop(rng, 20), random_loop(rng, 20));
  const auto g = geodesic(c.shape_a, c.shape_b, MetricConfig::flat());
  const auto lin = interpolation(c.shape_a, c.shape_b, 16);
  REQUIRE(g.shapes.size() == 17);
  for (std::size_t j = 0; j < lin.size(); ++j) CHECK(max_point_distance(g.shapes[j], lin[j]) <= 1e-6);
  const auto d = difference(c.shape_a, c.shape_b);
  // Flat norm is constant along the segment, so the midpoint form is exact.
  CHECK(g.length == doctest::Approx(std::sqrt(metric_inner(c.shape_a, d, d, MetricConfig::flat()))).epsilon(1e-6));
}

TEST_CASE("geodesic endpoints are exact and energy never increases") {
  std::mt19937_64 rng(45);
  const auto c = align(random_loop(rng, 24), random_loop(rng, 24));
  const auto g = geodesic(c.shape_a, c.shape_b, tagged_config(), {8, 1e-10, 500});
  CHECK(max_point_distance(g.shapes.front(), c.shape_a) == 0.0);
  CHECK(max_point_distance(g.shapes.back(), c.shape_b) == 0.0);
  REQUIRE(g.energy_trace.size() >= 2);
  for (std::size_t i = 1; i < g.energy_trace.size(); ++i) CHECK(g.energy_trace[i] <= g.energy_trace[i - 1]);
  CHECK(g.energy >= 0.0);
  CHECK(g.length <= std::sqrt(2.0 * g.energy) + 1e-6);
}

TEST_CASE("geodesic rejects non-corresponded inputs") {
  CHECK_THROWS_AS(geodesic(circle(10), circle(12), MetricConfig{}), IncompatibleShapes);
  CHECK_THROWS_AS(geodesic(circle(10), straight_chain(10), MetricConfig{}), IncompatibleShapes);
}

TEST_CASE("geodesic reports non-convergence") {
  std::mt19937_64 rng(46);
  const auto c = align(random_loop(rng, 16), random_loop(rng, 16));
  const auto g = geodesic(c.shape_a, c.shape_b, MetricConfig{}, {8, 1e-14, 2});
  CHECK_FALSE(g.converged);
  CHECK(g.iterations == 2);
}

TEST_CASE("circle to ellipse geodesic length agrees with a fine restarted oracle") {
  const auto c = align(circle(32), ellipse(32, 2.0, 1.0));
  const MetricConfig cfg;
  const double length = geodesic(c.shape_a, c.shape_b, cfg, {16, 1e-8, 2000}).length;
  // Oracle: finer time grid, tight tolerance, best of several perturbed starts.
  std::mt19937_64 rng(47);
  double oracle = geodesic(c.shape_a, c.shape_b, cfg, {48, 1e-12, 20000}).length;
  for (int r = 0; r < 3; ++r) {
    auto start = interpolation(c.shape_a, c.shape_b, 48, &rng, 0.01);
    oracle = std::min(oracle, geodesic_from(std::move(start), cfg, {48, 1e-12, 20000}).length);
  }
  CHECK(std::abs(length - oracle) / oracle <= 0.02);
}

TEST_CASE("geodesic distance: identity, similitude invariance and symmetry") {
  std::mt19937_64 rng(48);
  const GeodesicOptions opts{8, 1e-10, 2000};
  for (int t = 0; t < 10; ++t) {
    const auto a = random_loop(rng, 16), b = random_loop(rng, 16);
    CHECK(geodesic_distance(a, a, MetricConfig{}, opts) <= 1e-12);
    CHECK(geodesic_distance(a, transform(a, 0.7 * t, 1.0 + 0.2 * t, Point(t, -t, 0)), MetricConfig{}, opts) <= 1e-6);
    const double ab = geodesic_distance(a, b, MetricConfig{}, opts), ba = geodesic_distance(b, a, MetricConfig{}, opts);
    CHECK(std::abs(ab - ba) <= 1e-6 * std::max(1.0, ab));
  }
}

TEST_CASE("solver reuse agrees with one-off geodesics") {
  std::mt19937_64 rng(49);
  const auto c = align(random_loop(rng, 16), random_loop(rng, 16));
  const GeodesicOptions opts{8, 1e-9, 2000};
  const GeodesicSolver solver(c.shape_a, MetricConfig{});
  const double direct = geodesic(c.shape_a, c.shape_b, MetricConfig{}, opts).length;
  CHECK(solver.length(c.shape_a.points(), c.shape_b.points(), opts) == doctest::Approx(direct).epsilon(1e-12));
}
