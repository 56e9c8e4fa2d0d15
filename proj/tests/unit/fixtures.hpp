#pragma once

#include "primsim/shape.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace fixtures {

using primsim::Point;
using primsim::Shape;

inline constexpr double kPi = std::numbers::pi;

inline std::vector<Point> ellipse_points(std::size_t n, double a, double b, Point center = Point::Zero()) {
  std::vector<Point> pts;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n);
    pts.push_back(center + Point(a * std::cos(t), b * std::sin(t), 0.0));
  }
  return pts;
}

inline Shape circle(std::size_t n, double r = 1.0, Point center = Point::Zero()) {
  return Shape::loop(ellipse_points(n, r, r, center), 2);
}

inline Shape ellipse(std::size_t n, double a, double b) { return Shape::loop(ellipse_points(n, a, b), 2); }

inline Shape straight_chain(std::size_t n, double length = 1.0) {
  std::vector<Point> pts;
  for (std::size_t i = 0; i < n; ++i) pts.emplace_back(length * static_cast<double>(i) / static_cast<double>(n - 1), 0.0, 0.0);
  return Shape::chain(std::move(pts), 2);
}

inline Shape random_chain(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Point> pts;
  Point p = Point::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    p += Point(1.0 + 0.3 * g(rng), 0.6 * g(rng), 0.0);
    pts.push_back(p);
  }
  return Shape::chain(std::move(pts), 2);
}

inline Shape random_loop(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double a2 = 0.2 * u(rng), a3 = 0.1 * u(rng), p2 = kPi * u(rng), p3 = kPi * u(rng);
  std::vector<Point> pts;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n);
    const double r = 1.0 + a2 * std::cos(2 * t + p2) + a3 * std::cos(3 * t + p3);
    pts.emplace_back(r * std::cos(t), r * std::sin(t), 0.0);
  }
  return Shape::loop(std::move(pts), 2);
}

inline Shape random_grid(std::mt19937_64& rng, std::size_t rows = 4, std::size_t cols = 5) {
  std::uniform_real_distribution<double> u(-0.08, 0.08);
  std::vector<Point> pts;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double x = 0.25 * static_cast<double>(c), y = 0.25 * static_cast<double>(r);
      pts.emplace_back(x + u(rng), y + u(rng), 0.3 * std::sin(x + 2 * y) + u(rng));
    }
  }
  return Shape::grid(rows, cols, std::move(pts), 3);
}

inline Shape transform(const Shape& s, double angle, double scale, Point shift) {
  const Eigen::Matrix3d r = Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  std::vector<Point> pts;
  for (const auto& p : s.points()) pts.push_back(scale * (r * p) + shift);
  return s.with_points(std::move(pts));
}

inline Shape shifted(const Shape& s, std::size_t k) {
  const std::size_t n = s.size();
  std::vector<Point> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = s[(i + k) % n];
  return s.with_points(std::move(pts));
}

inline double max_point_distance(const Shape& a, const Shape& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, (a[i] - b[i]).norm());
  return m;
}

}  // namespace fixtures
