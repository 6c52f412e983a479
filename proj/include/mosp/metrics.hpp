#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <vector>

#include "mosp/learner.hpp"
#include "mosp/rng.hpp"
#include "mosp/solvers.hpp"

namespace mosp {

inline constexpr double kDriftSlack = 1e-9;

inline std::vector<double> cumulative_sum(const std::vector<double>& values) {
  std::vector<double> out(values.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    acc += values[i];
    out[i] = acc;
  }
  return out;
}

/// Cumulative sum of f_t(x_t) - f_t(x_t*), one entry per slot.
inline std::vector<double> dynamic_regret(const std::vector<double>& losses_online,
                                          const std::vector<double>& losses_benchmark) {
  if (losses_online.size() != losses_benchmark.size())
    throw std::invalid_argument("dynamic_regret: series length mismatch");
  std::vector<double> diff(losses_online.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = losses_online[i] - losses_benchmark[i];
  return cumulative_sum(diff);
}

/// Total loss gap against the best fixed action feasible at every slot.
/// Empty when no such action exists.
inline std::optional<double> static_regret(const std::vector<double>& losses_online,
                                           const std::vector<SlotProblem>& problems,
                                           const FeasibleBox& box, double tol = kBenchmarkTol) {
  if (losses_online.size() != problems.size())
    throw std::invalid_argument("static_regret: series length mismatch");
  Vec x_star;
  try {
    x_star = best_static(problems, box, tol);
  } catch (const InfeasibleProblem&) {
    return std::nullopt;
  }
  double online = 0.0, fixed = 0.0;
  for (std::size_t t = 0; t < problems.size(); ++t) {
    online += losses_online[t];
    fixed += problems[t].loss.value(x_star);
  }
  return online - fixed;
}

/// Norm of the positive part of the running constraint sum, one entry per slot.
inline std::vector<double> dynamic_fit(const std::vector<Vec>& g_values) {
  std::vector<double> out(g_values.size());
  if (g_values.empty()) return out;
  Vec running = Vec::Zero(g_values.front().size());
  for (std::size_t t = 0; t < g_values.size(); ++t) {
    if (g_values[t].size() != running.size())
      throw std::invalid_argument("dynamic_fit: constraint dimension mismatch");
    running += g_values[t];
    out[t] = running.cwiseMax(0.0).norm();
  }
  return out;
}

/// Gap against the offline benchmark and its split into the dynamic regret
/// (U1) and the gap between the per-slot and offline benchmarks (U2).
struct OptimalityGap {
  double gap = 0.0;
  double u1 = 0.0;
  double u2 = 0.0;
};

inline OptimalityGap optimality_gap(const std::vector<double>& losses_online,
                                    const std::vector<double>& losses_perslot,
                                    const std::vector<double>& losses_offline) {
  if (losses_online.size() != losses_offline.size() ||
      losses_online.size() != losses_perslot.size())
    throw std::invalid_argument("optimality_gap: series length mismatch");
  double online = 0.0, perslot = 0.0, offline = 0.0;
  for (std::size_t t = 0; t < losses_online.size(); ++t) {
    online += losses_online[t];
    perslot += losses_perslot[t];
    offline += losses_offline[t];
  }
  return {online - offline, online - perslot, perslot - offline};
}

/// Variation measures of the environment, all as observed over the stream
/// (consecutive pairs t = 1..T-1).
struct VariationBudget {
  std::vector<double> v_g_per_slot;
  double v_g_max = 0.0;    // max_t V(g_t)
  double v_g_total = 0.0;  // sum_t V(g_t)
  double v_xstar_total = 0.0;
  double v_dual_total = 0.0;
};

namespace detail {

inline bool same_matrix(const Mat& a, const Mat& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

inline bool same_vector(const Vec& a, const Vec& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

// max over the box of || [g_next(x) - g_prev(x)]^+ ||. Exact for affine pairs
// sharing A (the difference is constant in x); componentwise-maximized over
// the box for affine pairs with differing A (each coordinate of an affine map
// attains its max at a vertex); sampled lower bound otherwise.
inline double constraint_pair_variation(const ConstraintOracle& prev, const ConstraintOracle& next,
                                        const FeasibleBox& box) {
  if (prev.is_affine() && next.is_affine()) {
    if (prev.a == next.a || same_matrix(*prev.a, *next.a)) {
      Vec delta = next.b - prev.b;
      return delta.cwiseMax(0.0).norm();
    }
    const Mat diff = *next.a - *prev.a;
    Vec comp_max = next.b - prev.b;
    for (Eigen::Index i = 0; i < diff.rows(); ++i)
      for (Eigen::Index e = 0; e < diff.cols(); ++e)
        comp_max(i) += diff(i, e) > 0 ? diff(i, e) * box.upper(e) : diff(i, e) * box.lower(e);
    return comp_max.cwiseMax(0.0).norm();
  }
  // sampled lower bound: box corners of the first 10 coordinates, the center,
  // and a fixed set of pseudo-random interior points
  double best = 0.0;
  auto eval = [&](const Vec& x) {
    best = std::max(best, (next.value(x) - prev.value(x)).cwiseMax(0.0).norm());
  };
  eval(0.5 * (box.lower + box.upper));
  const auto corner_dims = std::min<Eigen::Index>(box.dim(), 10);
  for (long mask = 0; mask < (1L << corner_dims); ++mask) {
    Vec x = box.lower;
    for (Eigen::Index i = 0; i < corner_dims; ++i)
      if (mask & (1L << i)) x(i) = box.upper(i);
    eval(x);
  }
  CounterRng rng(7, RngStream::kTest);
  for (int s = 0; s < 64; ++s) {
    Vec x(box.dim());
    for (Eigen::Index i = 0; i < box.dim(); ++i)
      x(i) = rng.uniform(static_cast<std::uint64_t>(s) * box.dim() + i, box.lower(i), box.upper(i));
    eval(x);
  }
  return best;
}

}  // namespace detail

/// V(g_t) per consecutive pair plus the max and total.
inline VariationBudget constraint_variation(const std::vector<SlotProblem>& problems,
                                            const FeasibleBox& box) {
  VariationBudget budget;
  for (std::size_t t = 0; t + 1 < problems.size(); ++t) {
    const double v = detail::constraint_pair_variation(problems[t].constraint,
                                                       problems[t + 1].constraint, box);
    budget.v_g_per_slot.push_back(v);
    budget.v_g_max = std::max(budget.v_g_max, v);
    budget.v_g_total += v;
  }
  return budget;
}

/// sum_t ||x_t* - x_{t-1}*|| with the convention x_0* = x_1*.
inline double minimizer_variation(const std::vector<Vec>& benchmark) {
  if (benchmark.empty()) throw std::invalid_argument("minimizer_variation: empty sequence");
  double total = 0.0;
  for (std::size_t t = 1; t < benchmark.size(); ++t)
    total += (benchmark[t] - benchmark[t - 1]).norm();
  return total;
}

/// Total variation of the per-slot dual functions: sum_t max over the lambda
/// grid of |D_{t+1}(lambda) - D_t(lambda)|. Exact in the shared-cost,
/// shared-A affine case where the difference is linear in lambda; a full grid
/// for m <= 2 (grid_points per axis over [0, lambda_cap]); otherwise an
/// axis-plus-random sampled lower bound.
inline double dual_variation(const std::vector<SlotProblem>& problems, const FeasibleBox& box,
                             double lambda_cap, int grid_points = 101) {
  if (problems.size() < 2) return 0.0;
  const Eigen::Index m = problems.front().constraint.m;
  double total = 0.0;
  for (std::size_t t = 0; t + 1 < problems.size(); ++t) {
    const auto& p0 = problems[t];
    const auto& p1 = problems[t + 1];
    const bool linear_difference =
        detail::is_quad_affine(p0.loss, p0.constraint) &&
        detail::is_quad_affine(p1.loss, p1.constraint) &&
        detail::same_vector(p0.loss.quad_diag, p1.loss.quad_diag) &&
        (p0.constraint.a == p1.constraint.a ||
         detail::same_matrix(*p0.constraint.a, *p1.constraint.a));
    double pair_max = 0.0;
    if (linear_difference) {
      const Vec delta = p1.constraint.b - p0.constraint.b;
      pair_max = lambda_cap *
                 std::max(delta.cwiseMax(0.0).sum(), (-delta).cwiseMax(0.0).sum());
    } else {
      auto eval = [&](const Vec& lambda) {
        const double d0 = dual_function_value(p0.loss, p0.constraint, lambda, box).value;
        const double d1 = dual_function_value(p1.loss, p1.constraint, lambda, box).value;
        pair_max = std::max(pair_max, std::abs(d1 - d0));
      };
      if (m == 1) {
        for (int i = 0; i < grid_points; ++i) {
          Vec lambda(1);
          lambda(0) = lambda_cap * i / (grid_points - 1);
          eval(lambda);
        }
      } else if (m == 2) {
        for (int i = 0; i < grid_points; ++i)
          for (int j = 0; j < grid_points; ++j) {
            Vec lambda(2);
            lambda(0) = lambda_cap * i / (grid_points - 1);
            lambda(1) = lambda_cap * j / (grid_points - 1);
            eval(lambda);
          }
      } else {
        eval(Vec::Zero(m));
        for (Eigen::Index i = 0; i < m; ++i) {
          Vec lambda = Vec::Zero(m);
          lambda(i) = lambda_cap;
          eval(lambda);
        }
        CounterRng rng(11, RngStream::kTest);
        for (int s = 0; s < 128; ++s) {
          Vec lambda(m);
          for (Eigen::Index i = 0; i < m; ++i)
            lambda(i) =
                rng.uniform(static_cast<std::uint64_t>(s) * m + i, 0.0, lambda_cap);
          eval(lambda);
        }
      }
    }
    total += pair_max;
  }
  return total;
}

/// Per-slot verification of the dual drift inequality
///   (||l_{t+1}||^2 - ||l_t||^2)/2 <= mu l_t' g_t(x_t) + (mu^2/2) ||g_t(x_t)||^2
/// with the stated 1e-9 slack plus the provable IEEE rounding envelope of the
/// recursion itself: the stored iterate is max(0, fl(l + fl(mu g))), whose
/// squared norm can sit up to ~8 eps (||l||^2 + mu^2 ||g||^2) above the
/// real-arithmetic value the inequality is about. Sides are accumulated in
/// extended precision so the slack stays meaningful at large norms.
inline std::vector<bool> drift_check(const std::vector<RoundTrace>& trace, double mu) {
  std::vector<bool> ok(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& r = trace[i];
    long double lhs = 0.0L, rhs = 0.0L, scale = 0.0L;
    for (Eigen::Index j = 0; j < r.lambda.size(); ++j) {
      const long double ln = r.lambda_next(j);
      const long double l = r.lambda(j);
      const long double g = r.constraint(j);
      lhs += 0.5L * (ln * ln - l * l);
      rhs += static_cast<long double>(mu) * l * g +
             0.5L * static_cast<long double>(mu) * mu * g * g;
      scale += l * l + static_cast<long double>(mu) * mu * g * g;
    }
    const long double envelope = 16.0L * std::numeric_limits<double>::epsilon() * scale;
    ok[i] = lhs <= rhs + static_cast<long double>(kDriftSlack) + envelope;
  }
  return ok;
}

enum class CheckStatus { kPassed, kFailed, kHypothesisUnmet };

struct ProblemConstants {
  double grad_bound = 0.0;      // G
  double value_bound = 0.0;     // M
  double radius = 0.0;          // R
  double slater_margin = 0.0;   // epsilon
  double v_g_max = 0.0;         // max variation of consecutive constraints
};

/// Uniform multiplier bound mu*M + (2GR + R^2/(2 alpha) + mu*M^2/2)/(eps - Vbar).
/// Only meaningful when eps > Vbar.
inline double dual_norm_bound(const ProblemConstants& c, const StepsizePair& steps) {
  return steps.mu * c.value_bound +
         (2.0 * c.grad_bound * c.radius + c.radius * c.radius / (2.0 * steps.alpha) +
          0.5 * steps.mu * c.value_bound * c.value_bound) /
             (c.slater_margin - c.v_g_max);
}

struct BoundCheckReport {
  CheckStatus dual_bound = CheckStatus::kHypothesisUnmet;
  double lambda_bar = std::numeric_limits<double>::quiet_NaN();
  double max_lambda_norm = 0.0;
  bool fit_bound_ok = false;      // Fit <= ||lambda_{end+1}|| / mu per sub-horizon
  double fit_value = 0.0;         // fit over the final sub-horizon
  double fit_telescope_bound = 0.0;
  bool fit_bar_bound_ok = false;  // Fit <= lambda_bar / mu, when the bound applies
};

/// Checks the uniform dual bound and the telescoped fit bound on a trace.
/// With restarts, the telescoped bound applies per sub-horizon.
inline BoundCheckReport bound_checks(const std::vector<RoundTrace>& trace,
                                     const ProblemConstants& constants, const StepsizePair& steps,
                                     const std::set<long>& restarts = {}) {
  BoundCheckReport report;
  if (trace.empty()) return report;

  for (const auto& r : trace)
    report.max_lambda_norm =
        std::max({report.max_lambda_norm, r.lambda.norm(), r.lambda_next.norm()});
  if (constants.slater_margin > constants.v_g_max) {
    report.lambda_bar = dual_norm_bound(constants, steps);
    report.dual_bound = report.max_lambda_norm <= report.lambda_bar + 1e-9
                            ? CheckStatus::kPassed
                            : CheckStatus::kFailed;
  }

  report.fit_bound_ok = true;
  report.fit_bar_bound_ok = report.dual_bound != CheckStatus::kFailed;
  Vec running = Vec::Zero(trace.front().constraint.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const long t = trace[i].t;
    if (t > 1 && restarts.count(t)) running.setZero();
    running += trace[i].constraint;
    const bool boundary = i + 1 == trace.size() || restarts.count(trace[i].t + 1);
    if (boundary) {
      const double fit = running.cwiseMax(0.0).norm();
      const double bound = trace[i].lambda_next.norm() / steps.mu;
      if (fit > bound + kDriftSlack) report.fit_bound_ok = false;
      if (report.dual_bound == CheckStatus::kPassed && fit > report.lambda_bar / steps.mu + 1e-9)
        report.fit_bar_bound_ok = false;
      report.fit_value = fit;
      report.fit_telescope_bound = bound;
    }
  }
  return report;
}

/// Right-hand side of the dynamic-regret bound assembled from measured
/// constants: R V({x*})/alpha + lbar V({g}) + R^2/(2 alpha) + alpha G^2 T / 2
/// + mu M^2 (T+1) / 2.
inline double regret_bound_rhs(const ProblemConstants& c, double lambda_bar, double v_xstar_total,
                               double v_g_total, const StepsizePair& steps, long horizon) {
  const double t = static_cast<double>(horizon);
  return c.radius * v_xstar_total / steps.alpha + lambda_bar * v_g_total +
         c.radius * c.radius / (2.0 * steps.alpha) +
         0.5 * steps.alpha * c.grad_bound * c.grad_bound * t +
         0.5 * steps.mu * c.value_bound * c.value_bound * (t + 1.0);
}

/// Cumulative per-slot summaries of one run, aligned with the trace.
struct MetricSeries {
  std::vector<double> regret_d;
  std::vector<double> fit_d;
  std::vector<double> avg_cost;
  std::vector<double> lambda_norm;
  std::vector<double> queue_norm;
};

inline MetricSeries build_metric_series(const std::vector<RoundTrace>& trace,
                                        const std::vector<double>& losses_benchmark) {
  MetricSeries s;
  std::vector<double> losses(trace.size());
  std::vector<Vec> gs(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    losses[i] = trace[i].loss;
    gs[i] = trace[i].constraint;
    s.lambda_norm.push_back(trace[i].lambda.norm());
    s.queue_norm.push_back(trace[i].queue.size() ? trace[i].queue.norm() : 0.0);
  }
  if (!losses_benchmark.empty()) s.regret_d = dynamic_regret(losses, losses_benchmark);
  s.fit_d = dynamic_fit(gs);
  const auto cum = cumulative_sum(losses);
  for (std::size_t i = 0; i < cum.size(); ++i)
    s.avg_cost.push_back(cum[i] / static_cast<double>(i + 1));
  return s;
}

}  // namespace mosp
