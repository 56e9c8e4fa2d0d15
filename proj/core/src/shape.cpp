#include "primsim/shape.hpp"

#include "geometry_kernels.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>

namespace primsim {

std::string to_string(Topology topology) {
  switch (topology) {
    case Topology::Chain:
      return "chain";
    case Topology::Loop:
      return "loop";
    case Topology::Grid:
      return "grid";
  }
  return "chain";
}

Topology topology_from_string(const std::string& name) {
  if (name == "chain") return Topology::Chain;
  if (name == "loop") return Topology::Loop;
  if (name == "grid") return Topology::Grid;
  throw InvalidArgument("unknown topology '" + name + "'");
}

Shape::Shape(Topology topology, std::size_t rows, std::size_t cols, std::vector<Point> points,
             int dim, std::vector<std::string> tags)
    : topology_(topology),
      rows_(rows),
      cols_(cols),
      dim_(dim),
      points_(std::move(points)),
      tags_(std::move(tags)) {
  validate();
}

Shape Shape::chain(std::vector<Point> points, int dim, std::vector<std::string> region_tags) {
  return Shape(Topology::Chain, 0, 0, std::move(points), dim, std::move(region_tags));
}

Shape Shape::loop(std::vector<Point> points, int dim, std::vector<std::string> region_tags) {
  return Shape(Topology::Loop, 0, 0, std::move(points), dim, std::move(region_tags));
}

Shape Shape::grid(std::size_t rows, std::size_t cols, std::vector<Point> points, int dim,
                  std::vector<std::string> region_tags) {
  return Shape(Topology::Grid, rows, cols, std::move(points), dim, std::move(region_tags));
}

Shape Shape::with_points(std::vector<Point> points) const {
  return Shape(topology_, rows_, cols_, std::move(points), dim_, tags_);
}

Shape Shape::with_tags(std::vector<std::string> tags) const {
  return Shape(topology_, rows_, cols_, points_, dim_, std::move(tags));
}

bool Shape::compatible_with(const Shape& other) const {
  return topology_ == other.topology_ && size() == other.size() && rows_ == other.rows_ &&
         cols_ == other.cols_;
}

void Shape::validate() const {
  if (dim_ != 2 && dim_ != 3) throw InvalidArgument("shape dimension must be 2 or 3");
  const std::size_t n = points_.size();
  if (n < 3) throw InvalidArgument("shape needs at least 3 points");
  if (topology_ == Topology::Grid) {
    if (rows_ < 2 || cols_ < 2 || rows_ * cols_ != n)
      throw InvalidArgument("grid needs rows, cols >= 2 and rows*cols = n");
  }
  if (!tags_.empty() && tags_.size() != n)
    throw InvalidArgument("region_tags must have one entry per point");
  for (const auto& p : points_) {
    if (!p.allFinite()) throw InvalidArgument("shape coordinates must be finite");
    if (dim_ == 2 && p.z() != 0.0) throw InvalidArgument("planar shape with non-zero z");
  }
  for (const auto& e : elements_of(*this)) {
    const std::size_t edges = e.count == 2 ? 1 : e.count;
    for (std::size_t k = 0; k < edges; ++k) {
      const auto& p = points_[e.vertex[k]];
      const auto& q = points_[e.vertex[(k + 1) % e.count]];
      if ((p - q).squaredNorm() == 0.0)
        throw DegenerateShape("adjacent sample points coincide");
    }
  }
}

std::vector<Element> elements_of(Topology topology, std::size_t n, std::size_t rows,
                                 std::size_t cols) {
  std::vector<Element> out;
  switch (topology) {
    case Topology::Chain:
      out.reserve(n - 1);
      for (std::size_t i = 0; i + 1 < n; ++i) out.push_back({{i, i + 1, 0, 0}, 2});
      break;
    case Topology::Loop:
      out.reserve(n);
      for (std::size_t i = 0; i < n; ++i) out.push_back({{i, (i + 1) % n, 0, 0}, 2});
      break;
    case Topology::Grid:
      out.reserve((rows - 1) * (cols - 1));
      for (std::size_t r = 0; r + 1 < rows; ++r) {
        for (std::size_t c = 0; c + 1 < cols; ++c) {
          const std::size_t i = r * cols + c;
          out.push_back({{i, i + 1, i + cols + 1, i + cols}, 4});
        }
      }
      break;
  }
  return out;
}

std::vector<Element> elements_of(const Shape& shape) {
  return elements_of(shape.topology(), shape.size(), shape.rows(), shape.cols());
}

namespace {

double quad_area(const Point& a, const Point& b, const Point& c, const Point& d) {
  return 0.5 * (c - a).cross(d - b).norm();
}

}  // namespace

ShapeGeometry compute_geometry(const Shape& shape) {
  ShapeGeometry geo;
  const auto pts = shape.points();
  const std::size_t n = pts.size();
  const auto elements = elements_of(shape);

  geo.element_volumes.reserve(elements.size());
  for (const auto& e : elements) {
    double v = 0.0;
    if (e.count == 2) {
      v = (pts[e.vertex[1]] - pts[e.vertex[0]]).norm();
    } else {
      v = quad_area(pts[e.vertex[0]], pts[e.vertex[1]], pts[e.vertex[2]], pts[e.vertex[3]]);
    }
    if (!(v > 0.0) || !std::isfinite(v)) throw DegenerateShape("element with zero volume");
    geo.element_volumes.push_back(v);
    geo.total_volume += v;
  }

  geo.tangents.resize(n);
  if (shape.topology() == Topology::Grid) {
    const std::size_t cols = shape.cols();
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = i % cols;
      geo.tangents[i] = c + 1 < cols ? Point(pts[i + 1] - pts[i]) : Point(pts[i] - pts[i - 1]);
    }
    geo.mean_curvature = detail::grid_mean_curvature(shape.rows(), shape.cols(), pts);
  } else {
    const bool closed = shape.topology() == Topology::Loop;
    for (std::size_t i = 0; i < n; ++i) {
      if (i + 1 < n) {
        geo.tangents[i] = pts[i + 1] - pts[i];
      } else {
        geo.tangents[i] = closed ? Point(pts[0] - pts[i]) : Point(pts[i] - pts[i - 1]);
      }
    }
    geo.mean_curvature = detail::curve_vertex_curvature(pts, closed, shape.dim());
  }
  for (double k : geo.mean_curvature) {
    if (!std::isfinite(k)) throw DegenerateShape("non-finite curvature");
  }
  return geo;
}

Shape resample(const Shape& shape, std::size_t count) {
  if (shape.topology() == Topology::Grid)
    throw UnsupportedTopology("resample supports chains and loops only");
  if (count < 3) throw InvalidArgument("resample needs at least 3 points");

  const auto pts = shape.points();
  const std::size_t n = pts.size();
  const bool closed = shape.topology() == Topology::Loop;
  const std::size_t segments = closed ? n : n - 1;

  // Cumulative arc length at each original vertex (plus the closing vertex).
  std::vector<double> arc(segments + 1, 0.0);
  for (std::size_t i = 0; i < segments; ++i)
    arc[i + 1] = arc[i] + (pts[(i + 1) % n] - pts[i]).norm();
  const double total = arc.back();

  const double spacing = closed ? total / static_cast<double>(count)
                                : total / static_cast<double>(count - 1);
  std::vector<Point> out;
  out.reserve(count);
  std::vector<double> out_arc;
  out_arc.reserve(count);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < count; ++k) {
    double s = spacing * static_cast<double>(k);
    if (!closed && k + 1 == count) s = total;
    while (seg + 1 < segments && arc[seg + 1] < s) ++seg;
    const double len = arc[seg + 1] - arc[seg];
    double t = len > 0.0 ? (s - arc[seg]) / len : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const Point& p = pts[seg];
    const Point& q = pts[(seg + 1) % n];
    if (t == 0.0) {
      out.push_back(p);
    } else if (t == 1.0) {
      out.push_back(q);
    } else {
      out.push_back(p + t * (q - p));
    }
    out_arc.push_back(s);
  }

  std::vector<std::string> tags;
  if (shape.has_tags()) {
    const auto& src = shape.region_tags();
    tags.reserve(count);
    for (double s : out_arc) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        double d = std::abs(arc[i] - s);
        if (closed) d = std::min(d, total - d);
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
      tags.push_back(src[best]);
    }
  }

  if (closed) return Shape::loop(std::move(out), shape.dim(), std::move(tags));
  return Shape::chain(std::move(out), shape.dim(), std::move(tags));
}

Shape SimilarityRecord::apply(const Shape& shape) const {
  std::vector<Point> pts(shape.points().begin(), shape.points().end());
  for (auto& p : pts) p = scale * (p + translation);
  return shape.with_points(std::move(pts));
}

Shape SimilarityRecord::invert(const Shape& shape) const {
  std::vector<Point> pts(shape.points().begin(), shape.points().end());
  for (auto& p : pts) p = p / scale - translation;
  return shape.with_points(std::move(pts));
}

Point centroid(const Shape& shape) {
  const auto pts = shape.points();
  Point acc = Point::Zero();
  double total = 0.0;
  for (const auto& e : elements_of(shape)) {
    double v = 0.0;
    Point mid = Point::Zero();
    if (e.count == 2) {
      v = (pts[e.vertex[1]] - pts[e.vertex[0]]).norm();
      mid = 0.5 * (pts[e.vertex[0]] + pts[e.vertex[1]]);
    } else {
      v = quad_area(pts[e.vertex[0]], pts[e.vertex[1]], pts[e.vertex[2]], pts[e.vertex[3]]);
      mid = 0.25 * (pts[e.vertex[0]] + pts[e.vertex[1]] + pts[e.vertex[2]] + pts[e.vertex[3]]);
    }
    acc += v * mid;
    total += v;
  }
  if (!(total > 0.0)) throw DegenerateShape("shape has zero total volume");
  return acc / total;
}

namespace {

double total_volume_of(const Shape& shape) {
  const auto pts = shape.points();
  double total = 0.0;
  for (const auto& e : elements_of(shape)) {
    if (e.count == 2) {
      total += (pts[e.vertex[1]] - pts[e.vertex[0]]).norm();
    } else {
      total += quad_area(pts[e.vertex[0]], pts[e.vertex[1]], pts[e.vertex[2]], pts[e.vertex[3]]);
    }
  }
  if (!(total > 0.0)) throw DegenerateShape("shape has zero total volume");
  return total;
}

}  // namespace

std::pair<Shape, SimilarityRecord> centroid_and_scale_normalize(const Shape& shape) {
  SimilarityRecord record;
  record.translation = -centroid(shape);
  const double volume = total_volume_of(shape);
  // Lengths scale linearly, areas quadratically.
  record.scale = shape.topology() == Topology::Grid ? 1.0 / std::sqrt(volume) : 1.0 / volume;
  return {record.apply(shape), record};
}

std::pair<Shape, SimilarityRecord> centroid_normalize(const Shape& shape) {
  SimilarityRecord record;
  record.translation = -centroid(shape);
  return {record.apply(shape), record};
}

}  // namespace primsim
