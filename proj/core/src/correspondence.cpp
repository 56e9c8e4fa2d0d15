#include "primsim/correspondence.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <limits>

namespace primsim {

std::string Reparameterization::describe() const {
  if (is_identity()) return "identity";
  std::string out = flipped ? "orientation-flip" : "";
  if (shift != 0) {
    if (!out.empty()) out += "+";
    out += "cyclic-shift(" + std::to_string(shift) + ")";
  }
  return out;
}

Shape apply_reparameterization(const Shape& shape, const Reparameterization& reparam) {
  if (reparam.is_identity()) return shape;
  if (shape.topology() != Topology::Loop)
    throw UnsupportedTopology("only loops admit shift/flip reparameterizations");
  const std::size_t n = shape.size();
  if (reparam.shift >= n) throw InvalidArgument("cyclic shift out of range");
  const auto src = shape.points();
  std::vector<Point> pts(n);
  std::vector<std::string> tags;
  if (shape.has_tags()) tags.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t shifted = (i + n - reparam.shift) % n;
    const std::size_t from = reparam.flipped ? (n - shifted) % n : shifted;
    pts[i] = src[from];
    if (!tags.empty()) tags[i] = shape.region_tags()[from];
  }
  return Shape::loop(std::move(pts), shape.dim(), std::move(tags));
}

namespace {

void require_compatible(const Shape& a, const Shape& b) {
  if (!a.compatible_with(b) || a.dim() != b.dim())
    throw IncompatibleShapes("shapes differ in sample count, topology or dimension");
}

// Cross-covariance sum_i b_i a_i^T restricted to the shape dimension.
Rotation kabsch_from_points(std::span<const Point> a, std::span<const Point> b, int dim) {
  Rotation rotation = Rotation::Identity();
  if (dim == 2) {
    Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
    for (std::size_t i = 0; i < a.size(); ++i) h += b[i].head<2>() * a[i].head<2>().transpose();
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix2d correction = Eigen::Matrix2d::Identity();
    if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) correction(1, 1) = -1.0;
    rotation.topLeftCorner<2, 2>() = svd.matrixV() * correction * svd.matrixU().transpose();
    return rotation;
  }
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < a.size(); ++i) h += b[i] * a[i].transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d correction = Eigen::Matrix3d::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) correction(2, 2) = -1.0;
  rotation = svd.matrixV() * correction * svd.matrixU().transpose();
  return rotation;
}

double residual_of(std::span<const Point> a, std::span<const Point> b, const Rotation& r) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - r * b[i]).norm();
  return sum / static_cast<double>(a.size());
}

}  // namespace

Rotation kabsch_rotation(const Shape& a, const Shape& b) {
  require_compatible(a, b);
  return kabsch_from_points(a.points(), b.points(), a.dim());
}

double alignment_residual(const Shape& a, const Shape& b, const Rotation& rotation) {
  require_compatible(a, b);
  return residual_of(a.points(), b.points(), rotation);
}

Shape rotate(const Shape& shape, const Rotation& rotation) {
  std::vector<Point> pts(shape.points().begin(), shape.points().end());
  for (auto& p : pts) p = rotation * p;
  if (shape.dim() == 2) {
    for (auto& p : pts) p.z() = 0.0;
  }
  return shape.with_points(std::move(pts));
}

std::pair<Shape, Shape> normalize_pair(const Shape& a, const Shape& b,
                                       const AlignOptions& options) {
  if (a.topology() != b.topology() || a.dim() != b.dim())
    throw IncompatibleShapes("shapes differ in topology or dimension");
  Shape ra = a;
  Shape rb = b;
  if (a.size() != b.size()) {
    if (a.topology() == Topology::Grid)
      throw IncompatibleShapes("grids must share the template sampling");
    const std::size_t n = std::max(a.size(), b.size());
    ra = resample(a, n);
    rb = resample(b, n);
  } else if (a.topology() == Topology::Grid && a.rows() != b.rows()) {
    throw IncompatibleShapes("grids must share the template sampling");
  }
  auto normalize = [&](const Shape& s) {
    return options.normalize_scale ? centroid_and_scale_normalize(s).first
                                   : centroid_normalize(s).first;
  };
  return {normalize(ra), normalize(rb)};
}

Reparameterization best_reparameterization(const Shape& normalized_a,
                                           const Shape& normalized_b) {
  require_compatible(normalized_a, normalized_b);
  if (normalized_a.topology() != Topology::Loop) return {};
  const std::size_t n = normalized_a.size();
  const auto a = normalized_a.points();
  const auto b = normalized_b.points();
  const int dim = normalized_a.dim();

  Reparameterization best;
  double best_residual = std::numeric_limits<double>::infinity();
  std::vector<Point> candidate(n);
  for (std::size_t shift = 0; shift < n; ++shift) {
    for (bool flipped : {false, true}) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t shifted = (i + n - shift) % n;
        candidate[i] = b[flipped ? (n - shifted) % n : shifted];
      }
      const Rotation r = kabsch_from_points(a, candidate, dim);
      const double res = residual_of(a, candidate, r);
      if (res < best_residual) {
        best_residual = res;
        best = {shift, flipped};
      }
    }
  }
  return best;
}

CorrespondenceResult align(const Shape& a, const Shape& b, const AlignOptions& options) {
  auto [na, nb] = normalize_pair(a, b, options);
  const Reparameterization reparam = best_reparameterization(na, nb);
  Shape moved = apply_reparameterization(nb, reparam);
  const Rotation r = kabsch_from_points(na.points(), moved.points(), na.dim());
  const double res = residual_of(na.points(), moved.points(), r);
  Shape rotated = rotate(moved, r);
  return {std::move(na), std::move(rotated), r, reparam, res};
}

}  // namespace primsim
