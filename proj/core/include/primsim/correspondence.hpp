#pragma once

#include "primsim/shape.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <string>

namespace primsim {

using Rotation = Eigen::Matrix3d;

/// Discrete reparameterization of a loop: reverse orientation (keeping
/// sample 0 fixed) when `flipped`, then start at sample `shift`, so that
/// sample i of the result is sample (i - shift) mod n of the flipped input.
/// Chains and grids always use the identity.
struct Reparameterization {
  std::size_t shift = 0;
  bool flipped = false;

  bool is_identity() const { return shift == 0 && !flipped; }
  std::string describe() const;
};

Shape apply_reparameterization(const Shape& shape, const Reparameterization& reparam);

struct AlignOptions {
  /// Scale normalization can be disabled for position-sensitive features.
  bool normalize_scale = true;
};

struct CorrespondenceResult {
  Shape shape_a;
  /// Normalized, reparameterized and rotated onto shape_a.
  Shape shape_b;
  Rotation rotation = Rotation::Identity();
  Reparameterization reparam;
  /// Mean pointwise distance after alignment.
  double residual = 0.0;
};

/// Proper rotation R (det +1) minimizing sum_i |a_i - R b_i|^2.
Rotation kabsch_rotation(const Shape& a, const Shape& b);

/// Mean pointwise distance |a_i - R b_i|.
double alignment_residual(const Shape& a, const Shape& b, const Rotation& rotation);

Shape rotate(const Shape& shape, const Rotation& rotation);

/// Quotients similitudes and (for loops) cyclic shifts and orientation flips
/// out of the pair, rotating and reparameterizing b onto a. Chains and loops
/// of different sample counts are first resampled to the larger count.
CorrespondenceResult align(const Shape& a, const Shape& b, const AlignOptions& options = {});

/// Reparameterization search only, for callers that reuse it across frames.
Reparameterization best_reparameterization(const Shape& normalized_a,
                                           const Shape& normalized_b);

/// Normalizes a and b and brings them to a common sample count; the first
/// step of align, exposed for frame-pair workloads that reuse a fixed
/// reparameterization.
std::pair<Shape, Shape> normalize_pair(const Shape& a, const Shape& b,
                                       const AlignOptions& options = {});

}  // namespace primsim
