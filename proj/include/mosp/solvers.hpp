#pragma once

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "mosp/box.hpp"
#include "mosp/errors.hpp"
#include "mosp/oracles.hpp"

namespace mosp {

inline constexpr double kBenchmarkTol = 1e-6;
inline constexpr long kBenchmarkMaxIter = 1'000'000;
inline constexpr double kProxDisplacementTol = 1e-8;
inline constexpr long kProxMaxIter = 10'000;

/// Outcome of a constrained benchmark solve.
struct SaddleSolveReport {
  Vec solution;
  Vec multiplier;
  double kkt_residual = 0.0;
  long iterations = 0;
};

/// Value and minimizer of x -> f(x) + lambda' g(x) over the box.
struct DualFunctionValue {
  double value = 0.0;
  Vec minimizer;
};

namespace detail {

// argmin over [lo, hi] of d*x^2 + w*x
inline double scalar_quadratic_min(double d, double w, double lo, double hi) {
  if (d > 0.0) return std::clamp(-w / (2.0 * d), lo, hi);
  const double at_lo = d * lo * lo + w * lo;
  const double at_hi = d * hi * hi + w * hi;
  return at_lo <= at_hi ? lo : hi;
}

inline bool is_quad_affine(const LossOracle& f, const ConstraintOracle& g) {
  return f.quad_diag.size() > 0 && g.is_affine();
}

// max over the box of min_i -(A x + b)_i via projected subgradient ascent.
// Returns the best slack found (negative when no feasible point exists) and
// its witness. The estimate is a lower bound on the true optimum.
struct SlackResult {
  double slack;
  Vec witness;
};

inline SlackResult affine_max_min_slack(const Mat& a, const Vec& b, const FeasibleBox& box,
                                        long iterations = 24'000) {
  Vec x = 0.5 * (box.lower + box.upper);
  Vec best_x = x;
  double best = -std::numeric_limits<double>::infinity();
  // restarted schedule: the objective is polyhedral, so halving the step
  // scale between rounds keeps shrinking the error band
  const int rounds = 16;
  const long per_round = std::max<long>(1, iterations / rounds);
  double scale = std::max(1.0, box.radius());
  for (int r = 0; r < rounds; ++r) {
    x = best_x;
    for (long k = 1; k <= per_round; ++k) {
      Vec slacks = -affine_apply(a, x, b);
      Eigen::Index worst;
      const double val = slacks.minCoeff(&worst);
      if (val > best) {
        best = val;
        best_x = x;
      }
      const double step = scale / std::sqrt(static_cast<double>(k));
      // ascend the worst row's slack: d/dx of -(Ax+b)_worst = -A.row(worst)
      x = project_box(x - step * a.row(worst).transpose(), box);
    }
    scale *= 0.5;
  }
  return {best, best_x};
}

// minimize max_i g_i(x) over the box (feasibility probe for general oracles)
inline double min_max_violation(const ConstraintOracle& g, const FeasibleBox& box,
                                long iterations = 5'000) {
  Vec x = 0.5 * (box.lower + box.upper);
  double best = std::numeric_limits<double>::infinity();
  const double scale = std::max(1.0, box.radius());
  for (long k = 1; k <= iterations; ++k) {
    Vec vals = g.value(x);
    Eigen::Index worst;
    best = std::min(best, vals.maxCoeff(&worst));
    Vec e = Vec::Zero(g.m);
    e(worst) = 1.0;
    const double step = scale / std::sqrt(static_cast<double>(k));
    x = project_box(x - step * g.weighted_gradient(x, e), box);
  }
  return best;
}

}  // namespace detail

/// Minimizer of grad'(x - x_prev) + lambda' g(x) + ||x - x_prev||^2 / (2 alpha)
/// over the box, for a general convex constraint. Projected gradient with
/// backtracking on the 1/alpha-strongly-convex objective; stops when the
/// step-to-step displacement drops below kProxDisplacementTol.
inline Vec solve_prox_general(const Vec& grad, const ConstraintOracle& g, const Vec& lambda,
                              const Vec& x_prev, double alpha, const FeasibleBox& box) {
  if (!grad.allFinite()) throw OracleFailure("loss gradient is not finite");
  auto objective = [&](const Vec& x) {
    return grad.dot(x - x_prev) + lambda.dot(g.value(x)) + (x - x_prev).squaredNorm() / (2.0 * alpha);
  };
  Vec x = x_prev;
  double fx = objective(x);
  double step = alpha;
  double displacement = std::numeric_limits<double>::infinity();
  for (long it = 0; it < kProxMaxIter; ++it) {
    Vec dir = grad + g.weighted_gradient(x, lambda) + (x - x_prev) / alpha;
    Vec cand;
    double fcand;
    for (;;) {
      cand = project_box(x - step * dir, box);
      fcand = objective(cand);
      if (fcand <= fx - 1e-4 / step * (cand - x).squaredNorm() || step < 1e-16) break;
      step *= 0.5;
    }
    displacement = (cand - x).norm();
    x = cand;
    fx = fcand;
    step = std::min(step * 1.5, alpha);
    if (displacement < kProxDisplacementTol) return x;
  }
  throw SolverFailure("prox solver did not converge", displacement, kProxMaxIter);
}

/// min over the box of f(x) + lambda' g(x). Coordinatewise closed form for the
/// separable quadratic / affine pair; projected gradient descent otherwise.
inline DualFunctionValue dual_function_value(const LossOracle& f, const ConstraintOracle& g,
                                             const Vec& lambda, const FeasibleBox& box) {
  if (detail::is_quad_affine(f, g)) {
    const Vec w = affine_transpose_apply(*g.a, lambda);
    Vec x(box.dim());
    for (Eigen::Index i = 0; i < box.dim(); ++i)
      x(i) = detail::scalar_quadratic_min(f.quad_diag(i), w(i), box.lower(i), box.upper(i));
    return {f.value(x) + lambda.dot(g.value(x)), x};
  }
  Vec x = 0.5 * (box.lower + box.upper);
  auto objective = [&](const Vec& y) { return f.value(y) + lambda.dot(g.value(y)); };
  double fx = objective(x);
  double step = 1.0;
  for (long it = 0; it < kBenchmarkMaxIter; ++it) {
    Vec dir = f.checked_gradient(x) + g.weighted_gradient(x, lambda);
    Vec cand;
    double fcand;
    for (;;) {
      cand = project_box(x - step * dir, box);
      fcand = objective(cand);
      if (fcand <= fx - 1e-4 / step * (cand - x).squaredNorm() || step < 1e-16) break;
      step *= 0.5;
    }
    const double displacement = (cand - x).norm();
    x = cand;
    fx = fcand;
    step *= 1.5;
    if (displacement < 1e-10) return {fx, x};
  }
  throw SolverFailure("dual function minimization did not converge", 0.0, kBenchmarkMaxIter);
}

namespace detail {

// Dual solver for min sum_i d_i x_i^2 s.t. A x + b <= 0, x in box. The primal
// minimizer at fixed multipliers is coordinatewise exact, which makes the dual
// function piecewise quadratic; projected Newton steps on the current piece
// (reduced to the coordinates that are neither clipped nor pinned at zero)
// converge in a handful of iterations, with backtracking gradient ascent as
// the fallback near piece boundaries. The multiplier dimension is the number
// of constraint rows, which stays small in the intended uses.
inline SaddleSolveReport solve_quad_affine(const Vec& d, const Mat& a, const Vec& b,
                                           const FeasibleBox& box, double tol, long max_iter,
                                           const Vec* warm_multiplier) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();

  std::vector<bool> free_coord(n);
  auto primal_at = [&](const Vec& lambda, bool mark_free) {
    const Vec w = affine_transpose_apply(a, lambda);
    Vec x(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      x(i) = scalar_quadratic_min(d(i), w(i), box.lower(i), box.upper(i));
      if (mark_free)
        free_coord[i] = d(i) > 0.0 && x(i) > box.lower(i) && x(i) < box.upper(i);
    }
    return x;
  };
  auto dual_value = [&](const Vec& lambda, const Vec& x) {
    return x.cwiseProduct(x).dot(d) + lambda.dot(affine_apply(a, x, b));
  };

  auto kkt_residual = [&](const Vec& lambda, const Vec& x, const Vec& gx) {
    const Vec grad_f = 2.0 * d.cwiseProduct(x) + affine_transpose_apply(a, lambda);
    const double feas = std::max(0.0, gx.maxCoeff());
    const double compl_slack = std::abs(lambda.dot(gx));
    const double stat = (x - project_box(x - grad_f, box)).cwiseAbs().maxCoeff();
    return std::max({feas, compl_slack, stat});
  };

  Vec lambda = warm_multiplier && warm_multiplier->size() == m
                   ? warm_multiplier->cwiseMax(0.0)
                   : Vec(Vec::Zero(m));
  Vec x = primal_at(lambda, true);
  Vec gx = affine_apply(a, x, b);
  double dval = dual_value(lambda, x);
  double residual = kkt_residual(lambda, x, gx);
  double grad_step = 1.0;
  const double lambda_cap = 1e12 * (1.0 + b.cwiseAbs().maxCoeff());

  for (long it = 1; it <= max_iter; ++it) {
    if (residual <= tol) return {x, lambda, residual, it};
    if (lambda.norm() > lambda_cap)
      throw InfeasibleProblem("dual iterate diverged; constraint system has no feasible point");

    // rows allowed to move: positive multipliers or ascent pressure at zero
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < m; ++i)
      if (lambda(i) > 0.0 || gx(i) > 0.0) active.push_back(i);
    long n_free = 0;
    for (Eigen::Index j = 0; j < n; ++j) n_free += free_coord[j] ? 1 : 0;

    bool stepped = false;
    // Newton step on the current piece, accepted on KKT-residual decrease
    // (the dual value plateaus in double precision long before the
    // complementarity product reaches tight tolerances)
    if (!active.empty() && n_free > 0) {
      const auto p = static_cast<Eigen::Index>(active.size());
      Mat hess = Mat::Zero(p, p);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!free_coord[j]) continue;
        Vec col(p);
        for (Eigen::Index r = 0; r < p; ++r) col(r) = a(active[r], j);
        hess += col * col.transpose() / (2.0 * d(j));
      }
      hess.diagonal().array() += 1e-14 * (1.0 + hess.diagonal().maxCoeff());
      Vec rhs(p);
      for (Eigen::Index r = 0; r < p; ++r) rhs(r) = gx(active[r]);
      const Vec newton = hess.ldlt().solve(rhs);
      Vec direction = Vec::Zero(m);
      for (Eigen::Index r = 0; r < p; ++r) direction(active[r]) = newton(r);

      if (direction.norm() <= 1e8 * (1.0 + lambda.norm())) {
        for (double t = 1.0; t >= 1e-8; t *= 0.5) {
          const Vec cand = (lambda + t * direction).cwiseMax(0.0);
          const Vec cand_x = primal_at(cand, false);
          const Vec cand_g = affine_apply(a, cand_x, b);
          const double cand_res = kkt_residual(cand, cand_x, cand_g);
          if (cand_res < residual * (1.0 - 0.1 * t)) {
            lambda = cand;
            stepped = true;
            break;
          }
        }
      }
    }
    if (!stepped) {
      // gradient ascent fallback with backtracking on the exact dual value
      for (;;) {
        const Vec cand = (lambda + grad_step * gx).cwiseMax(0.0);
        const Vec cand_x = primal_at(cand, false);
        const double cand_val = dual_value(cand, cand_x);
        if (cand_val >= dval + 1e-4 / grad_step * (cand - lambda).squaredNorm() ||
            grad_step < 1e-18) {
          if (grad_step < 1e-18) break;
          lambda = cand;
          stepped = true;
          break;
        }
        grad_step *= 0.5;
      }
      grad_step = std::min(grad_step * 2.0, 1e6);
      if (!stepped) break;  // stalled at a kink below tolerance resolution
    }
    x = primal_at(lambda, true);
    gx = affine_apply(a, x, b);
    dval = dual_value(lambda, x);
    residual = kkt_residual(lambda, x, gx);
  }
  throw SolverFailure("dual ascent did not reach tolerance", residual, max_iter);
}

// Inexact dual ascent for general convex loss/constraint pairs: the inner
// Lagrangian minimization runs projected gradient descent with backtracking,
// the outer multiplier ascends along g(x(lambda)) with backtracking on the
// (inexactly evaluated) dual value.
inline SaddleSolveReport general_dual_ascent(const LossOracle& f, const ConstraintOracle& g,
                                       const FeasibleBox& box, double tol, long max_iter) {
  Vec x = 0.5 * (box.lower + box.upper);
  Vec lambda = Vec::Zero(g.m);
  long evals = 0;

  auto inner_minimize = [&](const Vec& lam, Vec start) {
    Vec y = project_box(start, box);
    auto objective = [&](const Vec& v) { return f.value(v) + lam.dot(g.value(v)); };
    double fy = objective(y);
    double step = 1.0;
    for (long k = 0; k < 5'000 && evals < max_iter; ++k) {
      const Vec dir = f.checked_gradient(y) + g.weighted_gradient(y, lam);
      Vec cand;
      double fcand;
      for (;;) {
        cand = project_box(y - step * dir, box);
        fcand = objective(cand);
        ++evals;
        if (fcand <= fy - 1e-4 / step * (cand - y).squaredNorm() || step < 1e-16) break;
        step *= 0.5;
      }
      const double displacement = (cand - y).norm();
      y = cand;
      fy = fcand;
      step = std::min(step * 1.5, 1e6);
      if (displacement < 1e-11 * (1.0 + y.norm())) break;
    }
    return y;
  };

  x = inner_minimize(lambda, x);
  double dval = f.value(x) + lambda.dot(g.value(x));
  double outer_step = 1.0;
  double residual = std::numeric_limits<double>::infinity();

  while (evals < max_iter) {
    const Vec gx = g.value(x);
    const double feas = std::max(0.0, gx.maxCoeff());
    const double compl_slack = std::abs(lambda.dot(gx));
    const Vec grad_l = f.checked_gradient(x) + g.weighted_gradient(x, lambda);
    const double stat = (x - project_box(x - grad_l, box)).cwiseAbs().maxCoeff();
    residual = std::max({feas, compl_slack, stat});
    if (residual <= tol) return {x, lambda, residual, evals};
    if (lambda.norm() > 1e12)
      throw InfeasibleProblem("dual iterate diverged; constraint system has no feasible point");

    bool stepped = false;
    for (;;) {
      const Vec cand = (lambda + outer_step * gx).cwiseMax(0.0);
      const Vec cand_x = inner_minimize(cand, x);
      const double cand_val = f.value(cand_x) + cand.dot(g.value(cand_x));
      if (cand_val >= dval + 1e-4 / outer_step * (cand - lambda).squaredNorm() ||
          outer_step < 1e-16) {
        if (outer_step >= 1e-16) {
          lambda = cand;
          x = cand_x;
          dval = cand_val;
          stepped = true;
        }
        break;
      }
      outer_step *= 0.5;
    }
    outer_step = std::min(outer_step * 1.5, 1e6);
    if (!stepped) break;
  }
  throw SolverFailure("dual ascent did not reach tolerance", residual, max_iter);
}

}  // namespace detail

/// Solves min f(x) s.t. g(x) <= 0 over the box to KKT residual <= tol.
/// The instantaneous benchmark: one solve per slot. Callers that have already
/// verified feasibility at the instance level can skip the probe.
inline SaddleSolveReport per_slot_optimum(const LossOracle& f, const ConstraintOracle& g,
                                          const FeasibleBox& box, double tol = kBenchmarkTol,
                                          long max_iter = kBenchmarkMaxIter,
                                          const Vec* warm_multiplier = nullptr,
                                          bool check_feasibility = true) {
  if (detail::is_quad_affine(f, g)) {
    if (check_feasibility) {
      const auto slack = detail::affine_max_min_slack(*g.a, g.b, box);
      if (slack.slack < -tol)
        throw InfeasibleProblem("no feasible point: best min-slack " +
                                std::to_string(slack.slack));
    }
    return detail::solve_quad_affine(f.quad_diag, *g.a, g.b, box, tol, max_iter, warm_multiplier);
  }
  if (check_feasibility && detail::min_max_violation(g, box) > tol)
    throw InfeasibleProblem("no feasible point found for general constraint");
  return detail::general_dual_ascent(f, g, box, tol, max_iter);
}

/// Solves the horizon-coupled problem: min sum_t f_t(x_t) subject to the
/// aggregate constraint (1/T) sum_t g_t(x_t) <= 0 with each x_t in the box.
/// One shared multiplier; the primal minimization separates across slots.
inline std::vector<Vec> offline_optimum(const std::vector<SlotProblem>& problems,
                                        const FeasibleBox& box, double tol = kBenchmarkTol,
                                        long max_iter = kBenchmarkMaxIter,
                                        SaddleSolveReport* report = nullptr) {
  const auto horizon = static_cast<long>(problems.size());
  if (horizon == 0) throw std::invalid_argument("offline_optimum: empty problem sequence");
  if (horizon * box.dim() > 1'000'000)
    throw ConfigError("offline benchmark refused: T * n exceeds 10^6");
  const double t_inv = 1.0 / static_cast<double>(horizon);
  const Eigen::Index m = problems.front().constraint.m;

  const bool fast = std::all_of(problems.begin(), problems.end(), [](const SlotProblem& p) {
    return detail::is_quad_affine(p.loss, p.constraint);
  });

  if (fast) {
    // one quad-affine solve in the product space: the aggregate constraint
    // (1/T) sum_t (A_t x_t + b_t) <= 0 stacks the slot systems columnwise
    const Eigen::Index n = box.dim();
    Vec d_all(horizon * n), lower(horizon * n), upper(horizon * n);
    Mat a_all(m, horizon * n);
    Vec b_agg = Vec::Zero(m);
    for (long t = 0; t < horizon; ++t) {
      d_all.segment(t * n, n) = problems[t].loss.quad_diag;
      lower.segment(t * n, n) = box.lower;
      upper.segment(t * n, n) = box.upper;
      a_all.middleCols(t * n, n) = t_inv * (*problems[t].constraint.a);
      b_agg += t_inv * problems[t].constraint.b;
    }
    const FeasibleBox stacked_box(std::move(lower), std::move(upper));
    const auto solved =
        detail::solve_quad_affine(d_all, a_all, b_agg, stacked_box, tol, max_iter, nullptr);
    std::vector<Vec> xs(horizon);
    for (long t = 0; t < horizon; ++t) xs[t] = solved.solution.segment(t * n, n);
    if (report) *report = {Vec(), solved.multiplier, solved.kkt_residual, solved.iterations};
    return xs;
  }

  auto primal_at = [&](const Vec& lambda, std::vector<Vec>& xs) {
    const Vec lam_t = t_inv * lambda;
    for (long t = 0; t < horizon; ++t)
      xs[t] = dual_function_value(problems[t].loss, problems[t].constraint, lam_t, box).minimizer;
  };
  auto aggregate = [&](const std::vector<Vec>& xs) {
    Vec g = Vec::Zero(m);
    for (long t = 0; t < horizon; ++t) g += problems[t].constraint.value(xs[t]);
    return Vec(t_inv * g);
  };
  auto total_cost = [&](const std::vector<Vec>& xs) {
    double c = 0.0;
    for (long t = 0; t < horizon; ++t) c += problems[t].loss.value(xs[t]);
    return c;
  };

  Vec lambda = Vec::Zero(m);
  std::vector<Vec> xs(horizon);
  primal_at(lambda, xs);
  double dval = total_cost(xs) + lambda.dot(aggregate(xs));
  double step = 1.0;
  double residual = std::numeric_limits<double>::infinity();

  for (long it = 1; it <= max_iter; ++it) {
    const Vec g_agg = aggregate(xs);
    const double feas = std::max(0.0, g_agg.maxCoeff());
    const double compl_slack = std::abs(lambda.dot(g_agg));
    residual = std::max(feas, compl_slack);
    if (residual <= tol) {
      if (report) *report = {Vec(), lambda, residual, it};
      return xs;
    }
    if (lambda.norm() > 1e12)
      throw InfeasibleProblem("aggregate constraint system appears infeasible");

    std::vector<Vec> cand_xs(horizon);
    Vec cand;
    double cand_val;
    for (;;) {
      cand = (lambda + step * g_agg).cwiseMax(0.0);
      primal_at(cand, cand_xs);
      cand_val = total_cost(cand_xs) + cand.dot(aggregate(cand_xs));
      if (cand_val >= dval + 1e-4 / step * (cand - lambda).squaredNorm() || step < 1e-18) break;
      step *= 0.5;
    }
    if (step < 1e-18) break;
    lambda = cand;
    xs = cand_xs;
    dval = cand_val;
    step *= 1.5;
  }
  throw SolverFailure("offline dual ascent did not reach tolerance", residual, max_iter);
}

/// Single x minimizing sum_t f_t(x) subject to every slot's constraint.
inline Vec best_static(const std::vector<SlotProblem>& problems, const FeasibleBox& box,
                       double tol = kBenchmarkTol, long max_iter = kBenchmarkMaxIter) {
  const auto horizon = static_cast<long>(problems.size());
  if (horizon == 0) throw std::invalid_argument("best_static: empty problem sequence");
  const Eigen::Index m = problems.front().constraint.m;

  const bool fast = std::all_of(problems.begin(), problems.end(), [](const SlotProblem& p) {
    return detail::is_quad_affine(p.loss, p.constraint);
  });
  if (fast) {
    Vec d = Vec::Zero(box.dim());
    for (const auto& p : problems) d += p.loss.quad_diag;
    const bool shared_a = std::all_of(problems.begin(), problems.end(), [&](const SlotProblem& p) {
      return p.constraint.a == problems.front().constraint.a;
    });
    LossOracle total;
    total.quad_diag = d;
    if (shared_a) {
      // A x + b_t <= 0 for all t collapses to A x + max_t b_t <= 0
      Vec b_max = problems.front().constraint.b;
      for (const auto& p : problems) b_max = b_max.cwiseMax(p.constraint.b);
      return per_slot_optimum(total, ConstraintOracle::affine(problems.front().constraint.a,
                                                              std::move(b_max)),
                              box, tol, max_iter)
          .solution;
    }
    auto stacked_a = std::make_shared<Mat>(m * horizon, box.dim());
    Vec stacked_b(m * horizon);
    for (long t = 0; t < horizon; ++t) {
      stacked_a->middleRows(t * m, m) = *problems[t].constraint.a;
      stacked_b.segment(t * m, m) = problems[t].constraint.b;
    }
    return per_slot_optimum(total, ConstraintOracle::affine(stacked_a, std::move(stacked_b)), box,
                            tol, max_iter)
        .solution;
  }

  LossOracle total;
  total.value = [&problems](const Vec& x) {
    double c = 0.0;
    for (const auto& p : problems) c += p.loss.value(x);
    return c;
  };
  total.gradient = [&problems, n = box.dim()](const Vec& x) {
    Vec g = Vec::Zero(n);
    for (const auto& p : problems) g += p.loss.gradient(x);
    return g;
  };
  auto stacked = ConstraintOracle::general(
      m * horizon,
      [&problems, m](const Vec& x) {
        Vec g(m * static_cast<Eigen::Index>(problems.size()));
        for (std::size_t t = 0; t < problems.size(); ++t)
          g.segment(static_cast<Eigen::Index>(t) * m, m) = problems[t].constraint.value(x);
        return g;
      },
      [&problems, m, n = box.dim()](const Vec& x) {
        Mat jac(m * static_cast<Eigen::Index>(problems.size()), n);
        for (std::size_t t = 0; t < problems.size(); ++t)
          for (Eigen::Index i = 0; i < m; ++i) {
            Vec e = Vec::Zero(m);
            e(i) = 1.0;
            jac.row(static_cast<Eigen::Index>(t) * m + i) =
                problems[t].constraint.weighted_gradient(x, e).transpose();
          }
        return jac;
      });
  return per_slot_optimum(total, stacked, box, tol, max_iter).solution;
}

}  // namespace mosp
