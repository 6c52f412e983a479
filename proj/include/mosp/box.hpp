#pragma once

#include <Eigen/Core>
#include <cassert>

namespace mosp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Axis-aligned feasible set {x : lower <= x <= upper}.
struct FeasibleBox {
  Vec lower;
  Vec upper;

  FeasibleBox() = default;
  FeasibleBox(Vec lo, Vec up) : lower(std::move(lo)), upper(std::move(up)) {
    assert(lower.size() == upper.size());
    assert((lower.array() <= upper.array()).all());
  }

  /// Box with lower corner at the origin.
  static FeasibleBox from_upper(Vec up) {
    Vec lo = Vec::Zero(up.size());
    return FeasibleBox(std::move(lo), std::move(up));
  }

  Eigen::Index dim() const { return lower.size(); }

  /// Diameter ||upper - lower||; bounds ||x - y|| over the box.
  double radius() const { return (upper - lower).norm(); }

  bool contains(const Vec& x, double slack = 0.0) const {
    return (x.array() >= lower.array() - slack).all() &&
           (x.array() <= upper.array() + slack).all();
  }
};

/// Componentwise clamp onto the box. Idempotent and non-expansive.
inline Vec project_box(const Vec& x, const FeasibleBox& box) {
  return x.cwiseMax(box.lower).cwiseMin(box.upper);
}

}  // namespace mosp
