#pragma once

#include "primsim/common.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace primsim {

enum class Topology { Chain, Loop, Grid };

std::string to_string(Topology topology);
Topology topology_from_string(const std::string& name);

/// An ordered sampling of an immersed curve (open chain or closed loop) or a
/// grid surface in 2- or 3-space, with optional per-point region tags.
///
/// Invariants are checked on construction: n >= 3, grids have rows*cols = n
/// with rows, cols >= 2, adjacent samples never coincide, and region tags
/// (when present) have exactly n entries. Planar shapes store z = 0.
class Shape {
 public:
  static Shape chain(std::vector<Point> points, int dim,
                     std::vector<std::string> region_tags = {});
  static Shape loop(std::vector<Point> points, int dim,
                    std::vector<std::string> region_tags = {});
  static Shape grid(std::size_t rows, std::size_t cols, std::vector<Point> points,
                    int dim, std::vector<std::string> region_tags = {});

  Topology topology() const { return topology_; }
  int dim() const { return dim_; }
  std::size_t size() const { return points_.size(); }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  std::span<const Point> points() const { return points_; }
  const Point& operator[](std::size_t i) const { return points_[i]; }

  bool has_tags() const { return !tags_.empty(); }
  const std::vector<std::string>& region_tags() const { return tags_; }

  /// Same topology and tags, new coordinates (validated).
  Shape with_points(std::vector<Point> points) const;
  Shape with_tags(std::vector<std::string> tags) const;

  /// True when both shapes have equal n, topology and grid dimensions.
  bool compatible_with(const Shape& other) const;

 private:
  Shape(Topology topology, std::size_t rows, std::size_t cols, std::vector<Point> points,
        int dim, std::vector<std::string> tags);
  void validate() const;

  Topology topology_ = Topology::Chain;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  int dim_ = 2;
  std::vector<Point> points_;
  std::vector<std::string> tags_;
};

/// Element connectivity of a sampling topology: edges for chains and loops,
/// quad cells (counter-clockwise vertex order) for grids.
struct Element {
  std::array<std::size_t, 4> vertex{};
  std::size_t count = 0;
};

std::vector<Element> elements_of(const Shape& shape);
std::vector<Element> elements_of(Topology topology, std::size_t n, std::size_t rows,
                                 std::size_t cols);

struct ShapeGeometry {
  /// Edge lengths (chains, loops) or cell areas (grids).
  std::vector<double> element_volumes;
  std::vector<Point> tangents;
  /// Signed turning angle per arc length for planar curves, unsigned for
  /// space curves, cotangent-Laplacian mean curvature for grids. Zero on
  /// open-chain endpoints and grid boundary vertices.
  std::vector<double> mean_curvature;
  double total_volume = 0.0;
};

ShapeGeometry compute_geometry(const Shape& shape);

/// Uniform arc-length resampling of a chain or loop to `count` points.
Shape resample(const Shape& shape, std::size_t count);

/// Applied as x' = scale * (x + translation); exactly invertible.
struct SimilarityRecord {
  Point translation = Point::Zero();
  double scale = 1.0;

  Shape apply(const Shape& shape) const;
  Shape invert(const Shape& shape) const;
};

/// Volume-weighted centroid of the shape.
Point centroid(const Shape& shape);

/// Moves the volume-weighted centroid to the origin and scales total volume
/// to 1 (length for curves, area for grids).
std::pair<Shape, SimilarityRecord> centroid_and_scale_normalize(const Shape& shape);

/// Translation-only variant used when scale must be kept.
std::pair<Shape, SimilarityRecord> centroid_normalize(const Shape& shape);

}  // namespace primsim
