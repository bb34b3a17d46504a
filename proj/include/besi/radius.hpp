#pragma once

#include <cmath>

#include "besi/common.hpp"

namespace besi {

/// Ball radius δ = 2^-depth. Storing the exponent keeps radii far below the
/// double range usable (cylinder balls of depth several thousand).
class Radius {
 public:
  constexpr Radius() = default;
  static Radius from_depth(double depth) {
    require(std::isfinite(depth), "Radius: depth must be finite");
    Radius r;
    r.depth_ = depth;
    return r;
  }
  static Radius from_value(double delta) {
    require(std::isfinite(delta) && delta > 0.0, "Radius: delta must be positive");
    return from_depth(-std::log2(delta));
  }

  double depth() const { return depth_; }
  /// 2^-depth; zero once it underflows.
  double value() const { return std::exp2(-depth_); }
  /// Number of shift indices 0..D that a cylinder ball of this radius fixes
  /// (D = ceil(depth), clamped at 0).
  long cylinder_index() const {
    const double c = std::ceil(depth_ - 1e-12);
    return c < 0.0 ? 0 : static_cast<long>(c);
  }
  bool operator<(const Radius& o) const { return depth_ > o.depth_; }

 private:
  double depth_ = 0.0;
};

}  // namespace besi
