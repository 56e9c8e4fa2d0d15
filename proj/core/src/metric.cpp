#include "primsim/metric.hpp"

#include "geometry_kernels.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>

namespace primsim {

void MetricConfig::validate() const {
  for (double w : {volume_weight, curvature_weight, position_weight}) {
    if (!std::isfinite(w) || w < 0.0) throw InvalidArgument("metric weights must be finite and >= 0");
  }
  if (!(volume_weight + curvature_weight + position_weight > 0.0))
    throw DegenerateMetric("metric weights sum to zero");
  for (const auto& [tag, m] : region_emphasis) {
    if (!std::isfinite(m) || m < 0.0)
      throw InvalidArgument("region multiplier for '" + tag + "' must be finite and >= 0");
  }
}

namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct FrameTerms {
  std::vector<double> vol;
  std::vector<double> kappa_e;
  std::vector<double> weight;
  std::vector<double> mass;
  double volume = 0.0;
  bool valid = true;
};

// Discretized metric over one sampling layout: element structure, region
// multipliers and the three weights.
class MetricModel {
 public:
  MetricModel(const Shape& layout, const MetricConfig& config)
      : topology_(layout.topology()),
        n_(layout.size()),
        rows_(layout.rows()),
        cols_(layout.cols()),
        dim_(layout.dim()),
        elements_(elements_of(layout)),
        a_(config.volume_weight),
        b_(config.curvature_weight),
        c_(config.position_weight) {
    config.validate();
    mu_ = 1.0 / static_cast<double>(elements_.size());
    std::vector<double> vertex_rho(n_, 1.0);
    if (layout.has_tags() && !config.region_emphasis.empty()) {
      for (std::size_t v = 0; v < n_; ++v) {
        auto it = config.region_emphasis.find(layout.region_tags()[v]);
        if (it != config.region_emphasis.end()) vertex_rho[v] = it->second;
      }
    }
    rho_.reserve(elements_.size());
    bool any = false;
    for (const auto& e : elements_) {
      double r = 0.0;
      for (std::size_t k = 0; k < e.count; ++k) r += vertex_rho[e.vertex[k]];
      r /= static_cast<double>(e.count);
      any = any || r > 0.0;
      rho_.push_back(r);
    }
    if (!any) throw DegenerateMetric("region emphasis zeroes every element");
  }

  std::size_t size() const { return n_; }
  int dim() const { return dim_; }
  bool is_grid() const { return topology_ == Topology::Grid; }
  bool closed() const { return topology_ == Topology::Loop; }
  const std::vector<Element>& elements() const { return elements_; }

  void compute(std::span<const Point> x, FrameTerms& t) const {
    const std::size_t m = elements_.size();
    t.vol.resize(m);
    t.kappa_e.resize(m);
    t.weight.resize(m);
    t.mass.assign(n_, 0.0);
    t.volume = 0.0;
    t.valid = true;
    for (std::size_t e = 0; e < m; ++e) {
      const auto& el = elements_[e];
      double v = 0.0;
      if (el.count == 2) {
        v = (x[el.vertex[1]] - x[el.vertex[0]]).norm();
      } else {
        v = 0.5 * (x[el.vertex[2]] - x[el.vertex[0]]).cross(x[el.vertex[3]] - x[el.vertex[1]]).norm();
      }
      if (!(v > 0.0) || !std::isfinite(v)) {
        t.valid = false;
        return;
      }
      t.vol[e] = v;
      t.volume += v;
    }
    std::vector<double> kappa;
    if (b_ != 0.0) {
      kappa = is_grid() ? detail::grid_mean_curvature(rows_, cols_, x)
                        : detail::curve_vertex_curvature(x, closed(), dim_);
    }
    const double phi = 1.0 + std::log1p(t.volume);
    for (std::size_t e = 0; e < m; ++e) {
      const auto& el = elements_[e];
      double ke = 0.0;
      if (b_ != 0.0) {
        for (std::size_t k = 0; k < el.count; ++k) ke += kappa[el.vertex[k]];
        ke /= static_cast<double>(el.count);
        if (!std::isfinite(ke)) {
          t.valid = false;
          return;
        }
      }
      t.kappa_e[e] = ke;
      const double w = rho_[e] * ((a_ * phi + b_ * (1.0 + ke * ke)) * t.vol[e] + c_ * mu_);
      t.weight[e] = w;
      const double share = w / static_cast<double>(el.count);
      for (std::size_t k = 0; k < el.count; ++k) t.mass[el.vertex[k]] += share;
    }
  }

  /// Adds scale * grad_x sum_e coeff_e W_e(x) to out.
  void add_weight_gradient(std::span<const Point> x, const FrameTerms& t,
                           std::span<const double> coeff, double scale,
                           std::span<Point> out) const {
    if (a_ == 0.0 && b_ == 0.0) return;
    if (is_grid()) {
      add_grid_weight_gradient(x, coeff, scale, out);
      return;
    }
    const std::size_t m = elements_.size();
    const double phi = 1.0 + std::log1p(t.volume);
    double s = 0.0;
    if (a_ != 0.0) {
      for (std::size_t e = 0; e < m; ++e) s += coeff[e] * rho_[e] * t.vol[e];
      s *= a_ / (1.0 + t.volume);
    }
    std::vector<double> h(b_ != 0.0 ? n_ : 0, 0.0);
    for (std::size_t e = 0; e < m; ++e) {
      const auto& el = elements_[e];
      const double ke = t.kappa_e[e];
      const double ge = coeff[e] * rho_[e] * (a_ * phi + b_ * (1.0 + ke * ke)) + s;
      const Point u = (x[el.vertex[1]] - x[el.vertex[0]]) / t.vol[e];
      out[el.vertex[1]] += scale * ge * u;
      out[el.vertex[0]] -= scale * ge * u;
      if (b_ != 0.0) {
        const double hv = b_ * coeff[e] * rho_[e] * t.vol[e] * ke;
        h[el.vertex[0]] += hv;
        h[el.vertex[1]] += hv;
      }
    }
    if (b_ == 0.0) return;
    for (std::size_t v = 0; v < n_; ++v) {
      if (h[v] == 0.0) continue;
      if (!closed() && (v == 0 || v + 1 == n_)) continue;
      const std::size_t prev = (v + n_ - 1) % n_;
      const std::size_t next = (v + 1) % n_;
      const Point ea = x[v] - x[prev];
      const Point eb = x[next] - x[v];
      const double la = ea.norm();
      const double lb = eb.norm();
      const double total = la + lb;
      const double theta = detail::turning_angle(ea, eb, dim_);
      Point dtheta_a;
      Point dtheta_b;
      detail::turning_angle_gradient(ea, eb, dim_, dtheta_a, dtheta_b);
      const double q = 2.0 * theta / (total * total);
      const Point dk_a = 2.0 * dtheta_a / total - q * ea / la;
      const Point dk_b = 2.0 * dtheta_b / total - q * eb / lb;
      const double f = scale * h[v];
      out[prev] -= f * dk_a;
      out[v] += f * (dk_a - dk_b);
      out[next] += f * dk_b;
    }
  }

 private:
  template <typename T>
  T weighted_sum(const std::vector<detail::Vec3<T>>& x, std::span<const double> coeff) const {
    using std::log1p;
    const std::size_t m = elements_.size();
    std::vector<T> vol(m);
    T volume(0.0);
    for (std::size_t e = 0; e < m; ++e) {
      const auto& el = elements_[e];
      vol[e] = detail::quad_area(x[el.vertex[0]], x[el.vertex[1]], x[el.vertex[2]], x[el.vertex[3]]);
      volume += vol[e];
    }
    std::vector<T> kappa;
    if (b_ != 0.0) kappa = detail::grid_mean_curvature_t(rows_, cols_, x);
    const T phi = T(1.0) + log1p(volume);
    T total(0.0);
    for (std::size_t e = 0; e < m; ++e) {
      if (coeff[e] == 0.0) continue;
      const auto& el = elements_[e];
      T ke(0.0);
      if (b_ != 0.0) {
        for (std::size_t k = 0; k < 4; ++k) ke += kappa[el.vertex[k]];
        ke = ke * T(0.25);
      }
      total += T(coeff[e] * rho_[e]) * ((T(a_) * phi + T(b_) * (T(1.0) + ke * ke)) * vol[e]);
    }
    return total;
  }

  void add_grid_weight_gradient(std::span<const Point> x, std::span<const double> coeff,
                                double scale, std::span<Point> out) const {
    std::vector<detail::Vec3<detail::Dual>> xd(n_);
    for (std::size_t i = 0; i < n_; ++i) xd[i] = {x[i].x(), x[i].y(), x[i].z()};
    for (std::size_t p = 0; p < n_; ++p) {
      for (int d = 0; d < dim_; ++d) {
        xd[p][d].d = 1.0;
        out[p][d] += scale * weighted_sum(xd, coeff).d;
        xd[p][d].d = 0.0;
      }
    }
  }

  Topology topology_;
  std::size_t n_;
  std::size_t rows_;
  std::size_t cols_;
  int dim_;
  std::vector<Element> elements_;
  std::vector<double> rho_;
  double mu_ = 0.0;
  double a_;
  double b_;
  double c_;
};

// Flattened path of K+1 frames of n points each.
struct PathState {
  std::size_t steps = 0;
  std::size_t n = 0;
  std::vector<Point> pts;

  std::span<const Point> frame(std::size_t j) const { return {pts.data() + j * n, n}; }
  std::span<Point> frame(std::size_t j) { return {pts.data() + j * n, n}; }
};

// Per-interval sums (1/2) sum_v (m_v(q_j) + m_v(q_{j+1})) |D_{j,v}|^2.
bool interval_terms(const MetricModel& model, const PathState& path,
                    std::vector<FrameTerms>& terms, std::vector<double>& intervals) {
  const std::size_t k = path.steps;
  terms.resize(k + 1);
  for (std::size_t j = 0; j <= k; ++j) {
    model.compute(path.frame(j), terms[j]);
    if (!terms[j].valid) return false;
  }
  intervals.assign(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    const auto a = path.frame(j);
    const auto b = path.frame(j + 1);
    double s = 0.0;
    for (std::size_t v = 0; v < path.n; ++v)
      s += (terms[j].mass[v] + terms[j + 1].mass[v]) * (b[v] - a[v]).squaredNorm();
    intervals[j] = 0.5 * s;
  }
  return true;
}

double energy_of(const std::vector<double>& intervals) {
  double e = 0.0;
  for (double s : intervals) e += s;
  return 0.5 * static_cast<double>(intervals.size()) * e;
}

double length_of(const std::vector<double>& intervals) {
  double l = 0.0;
  for (double s : intervals) l += std::sqrt(std::max(s, 0.0));
  return l;
}

void energy_gradient(const MetricModel& model, const PathState& path,
                     const std::vector<FrameTerms>& terms, std::vector<Point>& grad) {
  const std::size_t k = path.steps;
  const std::size_t n = path.n;
  const double half_k = 0.5 * static_cast<double>(k);
  grad.assign(path.pts.size(), Point::Zero());
  const auto& elements = model.elements();
  std::vector<double> coeff(elements.size());
  std::vector<double> sq_prev(n);
  std::vector<double> sq_next(n);
  for (std::size_t j = 1; j < k; ++j) {
    const auto prev = path.frame(j - 1);
    const auto cur = path.frame(j);
    const auto next = path.frame(j + 1);
    std::span<Point> g{grad.data() + j * n, n};
    for (std::size_t v = 0; v < n; ++v) {
      const Point dp = cur[v] - prev[v];
      const Point dn = next[v] - cur[v];
      g[v] = half_k * ((terms[j - 1].mass[v] + terms[j].mass[v]) * dp -
                       (terms[j].mass[v] + terms[j + 1].mass[v]) * dn);
      sq_prev[v] = dp.squaredNorm();
      sq_next[v] = dn.squaredNorm();
    }
    for (std::size_t e = 0; e < elements.size(); ++e) {
      const auto& el = elements[e];
      double c = 0.0;
      for (std::size_t q = 0; q < el.count; ++q) c += sq_prev[el.vertex[q]] + sq_next[el.vertex[q]];
      coeff[e] = c / static_cast<double>(el.count);
    }
    model.add_weight_gradient(cur, terms[j], coeff, 0.5 * half_k, g);
  }
}

// Solves P d = rhs per vertex, P the tridiagonal time-Laplacian of the
// interval masses over the interior frames.
void precondition(const PathState& path, const std::vector<FrameTerms>& terms,
                  const std::vector<Point>& rhs, std::vector<Point>& out) {
  const std::size_t k = path.steps;
  const std::size_t n = path.n;
  out.assign(rhs.size(), Point::Zero());
  if (k < 2) return;
  const double kk = static_cast<double>(k);
  double max_mass = 0.0;
  for (const auto& t : terms) {
    for (double m : t.mass) max_mass = std::max(max_mass, m);
  }
  const double floor = 1e-6 * max_mass;
  const std::size_t interior = k - 1;
  std::vector<double> bar(k);
  std::vector<double> c_prime(interior);
  std::vector<Point> d_prime(interior);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t j = 0; j < k; ++j)
      bar[j] = std::max(0.5 * (terms[j].mass[v] + terms[j + 1].mass[v]), floor);
    // Thomas algorithm; row r corresponds to frame r + 1.
    for (std::size_t r = 0; r < interior; ++r) {
      const double diag = kk * (bar[r] + bar[r + 1]);
      const double lower = r > 0 ? -kk * bar[r] : 0.0;
      const double upper = r + 1 < interior ? -kk * bar[r + 1] : 0.0;
      const double denom = r > 0 ? diag - lower * c_prime[r - 1] : diag;
      c_prime[r] = upper / denom;
      const Point& b = rhs[(r + 1) * n + v];
      d_prime[r] = r > 0 ? Point((b - lower * d_prime[r - 1]) / denom) : Point(b / denom);
    }
    for (std::size_t r = interior; r-- > 0;) {
      Point x = d_prime[r];
      if (r + 1 < interior) x -= c_prime[r] * out[(r + 2) * n + v];
      out[(r + 1) * n + v] = x;
    }
  }
}

GeodesicPath straighten(const MetricModel& model, PathState path, const Shape& layout,
                        const GeodesicOptions& options) {
  GeodesicPath result;
  std::vector<FrameTerms> terms;
  std::vector<double> intervals;
  if (!interval_terms(model, path, terms, intervals))
    throw DegenerateShape("initial geodesic path has a degenerate frame");
  double energy = energy_of(intervals);
  result.energy_trace.push_back(energy);

  PathState trial = path;
  std::vector<FrameTerms> trial_terms;
  std::vector<double> trial_intervals;
  std::vector<Point> grad;
  std::vector<Point> dir;
  constexpr double kArmijo = 1e-4;
  constexpr double kShrink = 0.5;
  constexpr int kMaxHalvings = 60;

  if (energy == 0.0 || path.steps < 2) result.converged = true;
  int iteration = 0;
  double last_step = 1.0;
  while (!result.converged && iteration < options.max_iterations) {
    energy_gradient(model, path, terms, grad);
    precondition(path, terms, grad, dir);
    double slope = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) {
      dir[i] = -dir[i];
      slope += grad[i].dot(dir[i]);
    }
    if (!(slope < 0.0)) {
      result.converged = true;
      break;
    }
    // Start from twice the last accepted step; saves most halvings.
    double step = std::min(1.0, 2.0 * last_step);
    bool accepted = false;
    double trial_energy = kInfinity;
    for (int h = 0; h < kMaxHalvings; ++h) {
      for (std::size_t i = 0; i < path.pts.size(); ++i) trial.pts[i] = path.pts[i] + step * dir[i];
      if (interval_terms(model, trial, trial_terms, trial_intervals)) {
        trial_energy = energy_of(trial_intervals);
        if (trial_energy <= energy + kArmijo * step * slope) {
          accepted = true;
          break;
        }
      }
      step *= kShrink;
    }
    if (!accepted) {
      // No representable decrease along the descent direction.
      result.converged = true;
      break;
    }
    ++iteration;
    last_step = step;
    const double relative = (energy - trial_energy) / energy;
    std::swap(path, trial);
    std::swap(terms, trial_terms);
    std::swap(intervals, trial_intervals);
    energy = trial_energy;
    result.energy_trace.push_back(energy);
    if (relative < options.tolerance || energy == 0.0) result.converged = true;
  }

  result.iterations = iteration;
  result.energy = energy;
  result.length = length_of(intervals);
  result.shapes.reserve(path.steps + 1);
  for (std::size_t j = 0; j <= path.steps; ++j) {
    const auto f = path.frame(j);
    result.shapes.push_back(layout.with_points(std::vector<Point>(f.begin(), f.end())));
  }
  return result;
}

PathState linear_path(std::span<const Point> q0, std::span<const Point> q1, std::size_t steps) {
  PathState path;
  path.steps = steps;
  path.n = q0.size();
  path.pts.resize((steps + 1) * path.n);
  for (std::size_t j = 0; j <= steps; ++j) {
    const double t = static_cast<double>(j) / static_cast<double>(steps);
    auto f = path.frame(j);
    for (std::size_t v = 0; v < path.n; ++v) {
      if (j == 0) {
        f[v] = q0[v];
      } else if (j == steps) {
        f[v] = q1[v];
      } else {
        f[v] = q0[v] + t * (q1[v] - q0[v]);
      }
    }
  }
  return path;
}

PathState flatten(std::span<const Shape> path) {
  if (path.size() < 2) throw InvalidArgument("a path needs at least two shapes");
  for (const auto& s : path) {
    if (!s.compatible_with(path.front()) || s.dim() != path.front().dim())
      throw IncompatibleShapes("path frames differ in sampling");
  }
  PathState state;
  state.steps = path.size() - 1;
  state.n = path.front().size();
  state.pts.reserve(path.size() * state.n);
  for (const auto& s : path) state.pts.insert(state.pts.end(), s.points().begin(), s.points().end());
  return state;
}

void check_field(const Shape& q, const DeformationField& f) {
  if (f.vectors.size() != q.size())
    throw InvalidArgument("deformation field cardinality does not match the shape");
}

}  // namespace

double metric_inner(const Shape& q, const DeformationField& u, const DeformationField& v,
                    const MetricConfig& config) {
  check_field(q, u);
  check_field(q, v);
  const MetricModel model(q, config);
  FrameTerms terms;
  model.compute(q.points(), terms);
  if (!terms.valid) throw DegenerateShape("degenerate shape in metric evaluation");
  double sum = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) sum += terms.mass[i] * u.vectors[i].dot(v.vectors[i]);
  return sum;
}

double path_energy(std::span<const Shape> path, const MetricConfig& config) {
  const PathState state = flatten(path);
  const MetricModel model(path.front(), config);
  std::vector<FrameTerms> terms;
  std::vector<double> intervals;
  if (!interval_terms(model, state, terms, intervals))
    throw DegenerateShape("degenerate frame in path");
  return energy_of(intervals);
}

double path_length(std::span<const Shape> path, const MetricConfig& config) {
  const PathState state = flatten(path);
  const MetricModel model(path.front(), config);
  std::vector<FrameTerms> terms;
  std::vector<double> intervals;
  if (!interval_terms(model, state, terms, intervals))
    throw DegenerateShape("degenerate frame in path");
  return length_of(intervals);
}

std::vector<DeformationField> path_energy_gradient(std::span<const Shape> path,
                                                   const MetricConfig& config) {
  const PathState state = flatten(path);
  const MetricModel model(path.front(), config);
  std::vector<FrameTerms> terms;
  std::vector<double> intervals;
  if (!interval_terms(model, state, terms, intervals))
    throw DegenerateShape("degenerate frame in path");
  std::vector<Point> grad;
  energy_gradient(model, state, terms, grad);
  std::vector<DeformationField> out(state.steps + 1);
  for (std::size_t j = 0; j <= state.steps; ++j) {
    out[j].vectors.assign(grad.begin() + static_cast<std::ptrdiff_t>(j * state.n),
                          grad.begin() + static_cast<std::ptrdiff_t>((j + 1) * state.n));
  }
  return out;
}

GeodesicPath geodesic(const Shape& q0, const Shape& q1, const MetricConfig& config,
                      const GeodesicOptions& options) {
  if (!q0.compatible_with(q1) || q0.dim() != q1.dim())
    throw IncompatibleShapes("geodesic endpoints are not corresponded");
  if (options.steps < 1) throw InvalidArgument("geodesic needs at least one time step");
  const MetricModel model(q0, config);
  return straighten(model, linear_path(q0.points(), q1.points(), options.steps), q0, options);
}

GeodesicPath geodesic_from(std::vector<Shape> initial_path, const MetricConfig& config,
                           const GeodesicOptions& options) {
  PathState state = flatten(initial_path);
  const MetricModel model(initial_path.front(), config);
  return straighten(model, std::move(state), initial_path.front(), options);
}

double geodesic_distance(const Shape& a, const Shape& b, const MetricConfig& config,
                         const GeodesicOptions& options, const AlignOptions& align_options) {
  const auto corr = align(a, b, align_options);
  return geodesic(corr.shape_a, corr.shape_b, config, options).length;
}

struct GeodesicSolver::Impl {
  Impl(const Shape& layout_shape, const MetricConfig& config)
      : layout(layout_shape), model(layout_shape, config) {}
  Shape layout;
  MetricModel model;
};

GeodesicSolver::GeodesicSolver(const Shape& layout, const MetricConfig& config)
    : impl_(std::make_unique<Impl>(layout, config)) {}
GeodesicSolver::~GeodesicSolver() = default;
GeodesicSolver::GeodesicSolver(GeodesicSolver&&) noexcept = default;
GeodesicSolver& GeodesicSolver::operator=(GeodesicSolver&&) noexcept = default;

GeodesicPath GeodesicSolver::solve(std::span<const Point> q0, std::span<const Point> q1,
                                   const GeodesicOptions& options) const {
  if (q0.size() != impl_->model.size() || q1.size() != impl_->model.size())
    throw IncompatibleShapes("endpoints do not match the solver layout");
  if (options.steps < 1) throw InvalidArgument("geodesic needs at least one time step");
  return straighten(impl_->model, linear_path(q0, q1, options.steps), impl_->layout, options);
}

double GeodesicSolver::length(std::span<const Point> q0, std::span<const Point> q1,
                              const GeodesicOptions& options) const {
  return solve(q0, q1, options).length;
}

}  // namespace primsim
