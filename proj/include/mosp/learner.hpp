#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <vector>

#include "mosp/box.hpp"
#include "mosp/oracles.hpp"
#include "mosp/solvers.hpp"

namespace mosp {

struct StepsizePair {
  double alpha = 0.0;  // primal
  double mu = 0.0;     // dual

  StepsizePair() = default;
  StepsizePair(double alpha, double mu) : alpha(alpha), mu(mu) {
    if (alpha <= 0.0 || mu <= 0.0) throw std::invalid_argument("stepsizes must be positive");
  }
};

/// alpha = mu = scale * T^((beta - 1) / 2); beta = 1/3 gives the T^(-1/3)
/// schedule used throughout the experiments.
inline StepsizePair stepsize_for_horizon(long horizon, double beta, double scale) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (beta < 0.0 || beta >= 1.0) throw std::invalid_argument("beta must lie in [0, 1)");
  if (scale <= 0.0) throw std::invalid_argument("scale must be positive");
  const double s = scale * std::pow(static_cast<double>(horizon), (beta - 1.0) / 2.0);
  return {s, s};
}

/// Slots {1, delta+1, 2*delta+1, ...} at which the multiplier is reset to 0,
/// splitting the horizon into ceil(T/delta) sub-horizons.
inline std::set<long> restart_schedule(long horizon, long delta) {
  if (delta <= 0) throw std::invalid_argument("restart period must be positive");
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  std::set<long> slots;
  for (long s = 1; s <= horizon; s += delta) slots.insert(s);
  return slots;
}

struct LearnerState {
  Vec x_prev;
  Vec lambda;
  long t = 1;
  StepsizePair steps;
  std::optional<long> restart_period;
};

/// One record per slot: the action, the multiplier it was computed with, the
/// observed loss/constraint values, the next multiplier, and the dual drift.
/// `queue` is filled by network runs only.
struct RoundTrace {
  long t = 0;
  Vec x;
  Vec lambda;
  double loss = 0.0;
  Vec constraint;
  Vec lambda_next;
  double drift = 0.0;
  Vec queue;
};

/// The action for the current slot: minimizer over the box of
///   grad f_prev(x_prev)'(x - x_prev) + lambda' g_prev(x) + ||x - x_prev||^2/(2 alpha).
/// Affine constraints give the projected gradient step in closed form;
/// anything else goes through the iterative prox solver.
inline Vec mosp_primal_step(const LearnerState& state, const LossOracle& prev_loss,
                            const ConstraintOracle& prev_constraint, const FeasibleBox& box) {
  const Vec grad = prev_loss.checked_gradient(state.x_prev);
  const double alpha = state.steps.alpha;
  if (prev_constraint.is_affine()) {
    const Vec aty = affine_transpose_apply(*prev_constraint.a, state.lambda);
    Vec x(box.dim());
    for (Eigen::Index i = 0; i < box.dim(); ++i) {
      const double v = state.x_prev(i) - alpha * grad(i) - alpha * aty(i);
      x(i) = std::clamp(v, box.lower(i), box.upper(i));
    }
    return x;
  }
  return solve_prox_general(grad, prev_constraint, state.lambda, state.x_prev, alpha, box);
}

/// lambda_next = [lambda + mu * g_t(x_t)]^+ componentwise.
inline Vec mosp_dual_step(const Vec& lambda, const Vec& observed_g, double mu) {
  if (!observed_g.allFinite()) throw OracleFailure("constraint value is not finite");
  Vec next(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    next(i) = std::max(0.0, lambda(i) + mu * observed_g(i));
  return next;
}

/// Runs the saddle-point recursion over the slot sequence. Each action x_t is
/// computed from the previous slot's oracles before (f_t, g_t) are revealed;
/// the slot-1 bootstrap takes f_0 = 0, g_0 = 0, so x_1 = x0. The multiplier
/// starts at zero and is reset to zero at every slot in `restarts`.
inline std::vector<RoundTrace> run_mosp(const std::vector<SlotProblem>& problems,
                                        const FeasibleBox& box, const StepsizePair& steps,
                                        const Vec& x0, const std::set<long>& restarts = {}) {
  const auto horizon = static_cast<long>(problems.size());
  const Eigen::Index m = horizon > 0 ? problems.front().constraint.m : 0;
  LearnerState state{x0, Vec::Zero(m), 1, steps, std::nullopt};
  std::vector<RoundTrace> trace;
  trace.reserve(horizon);

  for (long t = 1; t <= horizon; ++t) {
    if (restarts.count(t)) state.lambda.setZero();
    Vec x = t == 1 ? x0
                   : mosp_primal_step(state, problems[t - 2].loss, problems[t - 2].constraint, box);
    const auto& revealed = problems[t - 1];
    const double loss = revealed.loss.value(x);
    const Vec g = revealed.constraint.value(x);
    Vec lambda_next = mosp_dual_step(state.lambda, g, steps.mu);

    RoundTrace rec;
    rec.t = t;
    rec.x = x;
    rec.lambda = state.lambda;
    rec.loss = loss;
    rec.constraint = g;
    rec.lambda_next = lambda_next;
    rec.drift = 0.5 * (lambda_next.squaredNorm() - state.lambda.squaredNorm());
    trace.push_back(std::move(rec));

    state.x_prev = std::move(x);
    state.lambda = std::move(lambda_next);
    state.t = t + 1;
  }
  return trace;
}

}  // namespace mosp
