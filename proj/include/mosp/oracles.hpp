#pragma once

#include <functional>
#include <memory>
#include <utility>

#include "mosp/box.hpp"
#include "mosp/errors.hpp"

namespace mosp {

/// Per-slot convex loss f with its gradient and a bound G on ||grad f|| over
/// the feasible box.
struct LossOracle {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  double grad_bound = 0.0;  // G

  // Nonempty marks the separable form f(x) = sum_i quad_diag_i * x_i^2, which
  // the benchmark solvers minimize coordinatewise in closed form.
  Vec quad_diag;

  Vec checked_gradient(const Vec& x) const {
    Vec g = gradient(x);
    if (!g.allFinite()) throw OracleFailure("loss gradient is not finite");
    return g;
  }

  static LossOracle diagonal_quadratic(Vec d, double grad_bound = 0.0) {
    LossOracle f;
    f.quad_diag = std::move(d);
    f.value = [coeff = f.quad_diag](const Vec& x) { return x.cwiseProduct(x).dot(coeff); };
    f.gradient = [coeff = f.quad_diag](const Vec& x) { return Vec(2.0 * coeff.cwiseProduct(x)); };
    f.grad_bound = grad_bound;
    return f;
  }

  /// The identically-zero loss (slot-0 bootstrap).
  static LossOracle zero(Eigen::Index n) {
    return LossOracle{[](const Vec&) { return 0.0; },
                      [n](const Vec&) { return Vec(Vec::Zero(n)); }, 0.0, Vec()};
  }
};

// Row-major loops on purpose: the same accumulation order as the per-node
// updates of the distributed protocol, so both paths agree bitwise.
inline Vec affine_apply(const Mat& a, const Vec& x, const Vec& b) {
  Vec out(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (Eigen::Index e = 0; e < a.cols(); ++e) acc += a(i, e) * x(e);
    out(i) = acc + b(i);
  }
  return out;
}

inline Vec affine_transpose_apply(const Mat& a, const Vec& lambda) {
  Vec out(a.cols());
  for (Eigen::Index e = 0; e < a.cols(); ++e) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) acc += a(i, e) * lambda(i);
    out(e) = acc;
  }
  return out;
}

/// Per-slot constraint g(x) <= 0. Affine constraints g(x) = A x + b carry
/// their structure so the learner can take the closed-form projected step;
/// anything else goes through the iterative prox path. General constraints
/// may supply a Jacobian; without one, directional finite differences are
/// used where a gradient is needed.
struct ConstraintOracle {
  // affine part (A shared across slots when only b varies)
  std::shared_ptr<const Mat> a;
  Vec b;
  // general part
  std::function<Vec(const Vec&)> general_value;
  std::function<Mat(const Vec&)> general_jacobian;  // optional, rows = constraints

  Eigen::Index m = 0;       // constraint dimension
  double value_bound = 0.0; // M, bound on ||g(x)|| over the box

  bool is_affine() const { return a != nullptr; }

  Vec value(const Vec& x) const {
    Vec g = is_affine() ? affine_apply(*a, x, b) : general_value(x);
    if (!g.allFinite()) throw OracleFailure("constraint value is not finite");
    return g;
  }

  /// d/dx [lambda' g(x)].
  Vec weighted_gradient(const Vec& x, const Vec& lambda) const {
    if (is_affine()) return affine_transpose_apply(*a, lambda);
    if (general_jacobian) {
      Mat jac = general_jacobian(x);
      return affine_transpose_apply(jac, lambda);
    }
    // central differences on the scalar map x -> lambda' g(x)
    const double h = 1e-6;
    Vec grad(x.size());
    Vec xp = x, xm = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      xp(i) = x(i) + h;
      xm(i) = x(i) - h;
      grad(i) = (lambda.dot(general_value(xp)) - lambda.dot(general_value(xm))) / (2.0 * h);
      xp(i) = x(i);
      xm(i) = x(i);
    }
    return grad;
  }

  static ConstraintOracle affine(std::shared_ptr<const Mat> a, Vec b, double value_bound = 0.0) {
    ConstraintOracle c;
    c.m = a->rows();
    c.a = std::move(a);
    c.b = std::move(b);
    c.value_bound = value_bound;
    return c;
  }

  static ConstraintOracle general(Eigen::Index m, std::function<Vec(const Vec&)> value,
                                  std::function<Mat(const Vec&)> jacobian = nullptr,
                                  double value_bound = 0.0) {
    ConstraintOracle c;
    c.m = m;
    c.general_value = std::move(value);
    c.general_jacobian = std::move(jacobian);
    c.value_bound = value_bound;
    return c;
  }

  /// The identically-zero constraint (slot-0 bootstrap).
  static ConstraintOracle zero(Eigen::Index m) {
    return general(m, [m](const Vec&) { return Vec(Vec::Zero(m)); },
                   [m](const Vec& x) { return Mat(Mat::Zero(m, x.size())); });
  }
};

/// One slot of the online problem: the pair revealed after acting.
struct SlotProblem {
  LossOracle loss;
  ConstraintOracle constraint;
};

}  // namespace mosp
