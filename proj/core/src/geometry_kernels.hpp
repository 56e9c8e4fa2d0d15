#pragma once

// Discrete curvature kernels shared by shape geometry and the metric
// gradient. Grid kernels are templated on the scalar so the metric can take
// exact forward-mode derivatives through them.

#include "primsim/common.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace primsim::detail {

/// Forward-mode dual number: value and one directional derivative.
struct Dual {
  double v = 0.0;
  double d = 0.0;

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT(google-explicit-constructor)
  Dual(double value, double deriv) : v(value), d(deriv) {}

  friend Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
  friend Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
  friend Dual operator-(Dual a) { return {-a.v, -a.d}; }
  friend Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
  friend Dual operator/(Dual a, Dual b) {
    return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
  }
  Dual& operator+=(Dual o) { return *this = *this + o; }
  Dual& operator-=(Dual o) { return *this = *this - o; }
  Dual& operator*=(Dual o) { return *this = *this * o; }
};

inline Dual sqrt(Dual a) {
  const double s = std::sqrt(a.v);
  return {s, s > 0.0 ? a.d / (2.0 * s) : 0.0};
}
inline Dual log1p(Dual a) { return {std::log1p(a.v), a.d / (1.0 + a.v)}; }
inline double value_of(double x) { return x; }
inline double value_of(Dual x) { return x.v; }

template <typename T>
using Vec3 = std::array<T, 3>;

template <typename T>
Vec3<T> sub(const Vec3<T>& a, const Vec3<T>& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
template <typename T>
T dot(const Vec3<T>& a, const Vec3<T>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
template <typename T>
Vec3<T> cross(const Vec3<T>& a, const Vec3<T>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
template <typename T>
T norm(const Vec3<T>& a) {
  using std::sqrt;
  return sqrt(dot(a, a));
}

/// Bilinear cell area, half the norm of the diagonal cross product.
template <typename T>
T quad_area(const Vec3<T>& a, const Vec3<T>& b, const Vec3<T>& c, const Vec3<T>& d) {
  return T(0.5) * norm(cross(sub(c, a), sub(d, b)));
}

/// Mean curvature magnitude |L x| / 2 from the cotangent Laplacian of the
/// grid triangulated along the (r,c)-(r+1,c+1) diagonals, barycentric areas.
/// Boundary vertices get 0.
template <typename T>
std::vector<T> grid_mean_curvature_t(std::size_t rows, std::size_t cols,
                                     const std::vector<Vec3<T>>& x) {
  const std::size_t n = rows * cols;
  std::vector<Vec3<T>> lap(n, Vec3<T>{T(0), T(0), T(0)});
  std::vector<T> area(n, T(0));

  auto add_triangle = [&](std::size_t i, std::size_t j, std::size_t k) {
    const std::array<std::size_t, 3> tri{i, j, k};
    const T a = T(0.5) * norm(cross(sub(x[j], x[i]), sub(x[k], x[i])));
    for (int corner = 0; corner < 3; ++corner) {
      const std::size_t o = tri[corner];
      const std::size_t p = tri[(corner + 1) % 3];
      const std::size_t q = tri[(corner + 2) % 3];
      area[o] += a / T(3);
      // Angle at o is opposite edge (p, q).
      const auto u = sub(x[p], x[o]);
      const auto v = sub(x[q], x[o]);
      const T cot = dot(u, v) / norm(cross(u, v));
      const auto pq = sub(x[q], x[p]);
      for (int d = 0; d < 3; ++d) {
        lap[p][d] += cot * pq[d];
        lap[q][d] -= cot * pq[d];
      }
    }
  };
  for (std::size_t r = 0; r + 1 < rows; ++r) {
    for (std::size_t c = 0; c + 1 < cols; ++c) {
      const std::size_t i = r * cols + c;
      add_triangle(i, i + 1, i + cols + 1);
      add_triangle(i, i + cols + 1, i + cols);
    }
  }
  std::vector<T> h(n, T(0));
  for (std::size_t r = 1; r + 1 < rows; ++r) {
    for (std::size_t c = 1; c + 1 < cols; ++c) {
      const std::size_t i = r * cols + c;
      const T scale = T(1) / (T(2) * area[i]);
      Vec3<T> l{lap[i][0] * scale, lap[i][1] * scale, lap[i][2] * scale};
      h[i] = T(0.5) * norm(l);
    }
  }
  return h;
}

inline std::vector<double> grid_mean_curvature(std::size_t rows, std::size_t cols,
                                               std::span<const Point> pts) {
  std::vector<Vec3<double>> x(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) x[i] = {pts[i].x(), pts[i].y(), pts[i].z()};
  return grid_mean_curvature_t(rows, cols, x);
}

/// Turning angle between consecutive edges a and b: signed in the plane,
/// unsigned for space curves.
inline double turning_angle(const Point& a, const Point& b, int dim) {
  if (dim == 2) return std::atan2(a.x() * b.y() - a.y() * b.x(), a.dot(b));
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

/// Gradient of the turning angle with respect to edges a and b.
inline void turning_angle_gradient(const Point& a, const Point& b, int dim, Point& d_a,
                                   Point& d_b) {
  if (dim == 2) {
    const double c = a.x() * b.y() - a.y() * b.x();
    const double d = a.dot(b);
    const double denom = c * c + d * d;
    d_a = (d * Point(b.y(), -b.x(), 0.0) - c * b) / denom;
    d_b = (d * Point(-a.y(), a.x(), 0.0) - c * a) / denom;
    return;
  }
  const double la = a.norm();
  const double lb = b.norm();
  const Point ua = a / la;
  const Point ub = b / lb;
  const double cosv = ua.dot(ub);
  Point pa = ub - cosv * ua;
  Point pb = ua - cosv * ub;
  const double na = pa.norm();
  const double nb = pb.norm();
  // Straight or folded configuration: the angle is not differentiable, and
  // the curvature-squared weight it feeds has a vanishing gradient there.
  if (na < 1e-300 || nb < 1e-300) {
    d_a.setZero();
    d_b.setZero();
    return;
  }
  d_a = -pa / (na * la);
  d_b = -pb / (nb * lb);
}

/// Per-vertex curvature 2*theta / (|a| + |b|) of a polyline.
inline std::vector<double> curve_vertex_curvature(std::span<const Point> pts, bool closed,
                                                  int dim) {
  const std::size_t n = pts.size();
  std::vector<double> kappa(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!closed && (i == 0 || i + 1 == n)) continue;
    const std::size_t prev = (i + n - 1) % n;
    const std::size_t next = (i + 1) % n;
    const Point a = pts[i] - pts[prev];
    const Point b = pts[next] - pts[i];
    kappa[i] = 2.0 * turning_angle(a, b, dim) / (a.norm() + b.norm());
  }
  return kappa;
}

}  // namespace primsim::detail
