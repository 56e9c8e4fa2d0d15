#pragma once

#include "primsim/correspondence.hpp"
#include "primsim/shape.hpp"

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace primsim {

/// Weights of the immersion metric. Each element contributes
///
///   rho_e * [ (a * (1 + log(1 + V)) + b * (1 + kappa_e^2)) * vol_e + c / E ]
///
/// times the element-averaged pointwise inner product, where V is total
/// volume, kappa_e the element's mean curvature, E the element count and
/// rho_e the mean region multiplier of the element's vertices. The c term
/// uses the parameter-domain measure, so (a, b, c) = (0, 0, 1) is a flat
/// metric whose geodesics are straight lines.
struct MetricConfig {
  double volume_weight = 1.0;
  double curvature_weight = 1.0;
  double position_weight = 1.0;
  /// Region tag -> multiplier; tags not listed default to 1.
  std::map<std::string, double> region_emphasis;

  static MetricConfig flat() { return {0.0, 0.0, 1.0, {}}; }
  void validate() const;
};

struct DeformationField {
  std::vector<Point> vectors;
};

/// <u, v> at shape q; symmetric, bilinear and positive definite.
double metric_inner(const Shape& q, const DeformationField& u, const DeformationField& v,
                    const MetricConfig& config);

/// E = (K/2) * sum_j (1/2) [<D_j, D_j>_{q_j} + <D_j, D_j>_{q_{j+1}}],
/// D_j = q_{j+1} - q_j, for a path of K+1 shapes on a unit time grid.
double path_energy(std::span<const Shape> path, const MetricConfig& config);

/// sum_j sqrt((1/2) [<D_j, D_j>_{q_j} + <D_j, D_j>_{q_{j+1}}]).
double path_length(std::span<const Shape> path, const MetricConfig& config);

/// Exact gradient of path_energy with respect to every frame's points,
/// including the dependence of the weights on volume and curvature. The
/// endpoint fields are zero.
std::vector<DeformationField> path_energy_gradient(std::span<const Shape> path,
                                                   const MetricConfig& config);

struct GeodesicOptions {
  std::size_t steps = 16;
  double tolerance = 1e-8;
  int max_iterations = 2000;
};

struct GeodesicPath {
  std::vector<Shape> shapes;
  double energy = 0.0;
  double length = 0.0;
  bool converged = false;
  int iterations = 0;
  /// Energy after initialization and after every accepted iteration.
  std::vector<double> energy_trace;
};

/// Path straightening between corresponded shapes, starting from linear
/// interpolation. Gradient descent with Armijo backtracking (c = 1e-4,
/// shrink 0.5); the descent direction is the gradient preconditioned by the
/// time-Laplacian of the current vertex masses.
GeodesicPath geodesic(const Shape& q0, const Shape& q1, const MetricConfig& config,
                      const GeodesicOptions& options = {});

/// Path straightening from an arbitrary initial path; endpoints are kept.
GeodesicPath geodesic_from(std::vector<Shape> initial_path, const MetricConfig& config,
                           const GeodesicOptions& options = {});

/// Length of the geodesic between align(a, b).
double geodesic_distance(const Shape& a, const Shape& b, const MetricConfig& config,
                         const GeodesicOptions& options = {},
                         const AlignOptions& align_options = {});

/// Reusable solver for many geodesics over one sampling layout and metric.
/// Avoids per-call setup in distance-matrix workloads.
class GeodesicSolver {
 public:
  GeodesicSolver(const Shape& layout, const MetricConfig& config);
  ~GeodesicSolver();
  GeodesicSolver(GeodesicSolver&&) noexcept;
  GeodesicSolver& operator=(GeodesicSolver&&) noexcept;

  /// Endpoints must match the layout's sample count.
  GeodesicPath solve(std::span<const Point> q0, std::span<const Point> q1,
                     const GeodesicOptions& options) const;
  double length(std::span<const Point> q0, std::span<const Point> q1,
                const GeodesicOptions& options) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace primsim
