#pragma once

#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mosp/experiment.hpp"

namespace mosp {

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::kFailed;
  std::string detail;
};

struct ValidationOptions {
  std::uint64_t seed = 1;
  bool include_trend = true;  // the multi-horizon growth checks (the slow part)
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  bool all_ok() const {
    for (const auto& c : checks)
      if (c.status == CheckStatus::kFailed) return false;
    return true;
  }
};

namespace detail {

class CheckRunner {
 public:
  explicit CheckRunner(ValidationReport& report) : report_(report) {}

  void run(const std::string& name, const std::function<CheckResult()>& body) {
    CheckResult result;
    result.name = name;
    try {
      result = body();
      result.name = name;
    } catch (const std::exception& e) {
      result.status = CheckStatus::kFailed;
      result.detail = e.what();
    }
    report_.checks.push_back(std::move(result));
  }

 private:
  ValidationReport& report_;
};

inline CheckResult pass(double margin, const std::string& what = "margin") {
  return {"", CheckStatus::kPassed, what + "=" + format_double(margin)};
}

inline CheckResult verdict(bool ok, double margin, const std::string& what = "margin") {
  return {"", ok ? CheckStatus::kPassed : CheckStatus::kFailed,
          what + "=" + format_double(margin)};
}

// constant arrivals and prices: zero constraint variation, known margins
inline ScenarioStream constant_stream(int num_mapping, int num_dc, long horizon, double load,
                                      double price) {
  ScenarioStream s;
  s.num_mapping = num_mapping;
  s.num_dc = num_dc;
  s.horizon = horizon;
  s.seed = 0;
  s.kind = ScenarioStream::Kind::kCustom;
  s.prices = Mat::Constant(horizon, num_dc, price);
  s.loads = Mat::Constant(horizon, num_mapping, load);
  return s;
}

inline CloudNetwork tiny_network(double link_cap, double dc_cap, double price_independent_cost) {
  CloudNetwork net;
  net.num_mapping = 1;
  net.num_dc = 1;
  net.link_cap = Vec::Constant(1, link_cap);
  net.dc_cap = Vec::Constant(1, dc_cap);
  net.link_cost = Vec::Constant(1, price_independent_cost);
  return net;
}

}  // namespace detail

/// Runs the whole invariant battery and reports one line per check.
inline ValidationReport run_validation(const ValidationOptions& opts = {}) {
  ValidationReport report;
  detail::CheckRunner checks(report);
  const std::uint64_t seed = opts.seed;

  // small shared instances
  const CloudNetwork net3 = gen_network(3, 3, seed);
  const ScenarioStream stream3_c1 = gen_case1(3, 3, 50, seed);
  const ScenarioStream stream3_c2 = gen_case2(3, 3, 50, seed);
  const StepsizePair steps3 = {stepsize_for_horizon(50, 1.0 / 3.0, 0.05).alpha,
                               stepsize_for_horizon(50, 1.0 / 3.0, 50.0).mu};
  const auto mosp3_c1 = run_centralized_mosp(net3, stream3_c1, steps3);
  const auto mosp3_c2 = run_centralized_mosp(net3, stream3_c2, steps3);

  checks.run("dual-nonnegativity", [&] {
    double min_entry = 0.0;
    for (const auto& r : mosp3_c1) min_entry = std::min(min_entry, r.lambda_next.minCoeff());
    for (const auto& r : mosp3_c2) min_entry = std::min(min_entry, r.lambda_next.minCoeff());
    return detail::verdict(min_entry >= 0.0, min_entry, "min_multiplier");
  });

  checks.run("primal-affine-closed-form", [&] {
    CounterRng rng(seed, RngStream::kTest);
    auto a = std::make_shared<Mat>(build_incidence(2, 2));
    const CloudNetwork net = gen_network(2, 2, seed);
    const FeasibleBox box = net.box();
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      Vec x_prev(box.dim()), grad(box.dim()), lambda(a->rows()), b(a->rows());
      std::uint64_t idx = static_cast<std::uint64_t>(trial) * 100;
      for (Eigen::Index i = 0; i < box.dim(); ++i) {
        x_prev(i) = rng.uniform(idx++, box.lower(i), box.upper(i));
        grad(i) = rng.uniform(idx++, -5.0, 5.0);
      }
      for (Eigen::Index i = 0; i < a->rows(); ++i) {
        lambda(i) = rng.uniform(idx++, 0.0, 10.0);
        b(i) = rng.uniform(idx++, -2.0, 2.0);
      }
      LearnerState state{x_prev, lambda, 2, {0.3, 0.3}, std::nullopt};
      LossOracle f{[](const Vec&) { return 0.0; }, [&grad](const Vec&) { return grad; }, 0.0,
                   Vec()};
      const Vec got = mosp_primal_step(state, f, ConstraintOracle::affine(a, b), box);
      const Vec want =
          project_box(x_prev - 0.3 * grad - 0.3 * affine_transpose_apply(*a, lambda), box);
      worst = std::max(worst, (got - want).cwiseAbs().maxCoeff());
    }
    return detail::verdict(worst <= 1e-12, worst, "max_deviation");
  });

  checks.run("prox-general-matches-affine", [&] {
    CounterRng rng(seed, RngStream::kTest);
    auto a = std::make_shared<Mat>(build_incidence(2, 2));
    const CloudNetwork net = gen_network(2, 2, seed + 1);
    const FeasibleBox box = net.box();
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      Vec x_prev(box.dim()), grad(box.dim()), lambda(a->rows()), b(a->rows());
      std::uint64_t idx = 5'000 + static_cast<std::uint64_t>(trial) * 100;
      for (Eigen::Index i = 0; i < box.dim(); ++i) {
        x_prev(i) = rng.uniform(idx++, box.lower(i), box.upper(i));
        grad(i) = rng.uniform(idx++, -5.0, 5.0);
      }
      for (Eigen::Index i = 0; i < a->rows(); ++i) {
        lambda(i) = rng.uniform(idx++, 0.0, 10.0);
        b(i) = rng.uniform(idx++, -2.0, 2.0);
      }
      auto general = ConstraintOracle::general(
          a->rows(), [a, b](const Vec& x) { return affine_apply(*a, x, b); },
          [a](const Vec&) { return *a; });
      const Vec got = solve_prox_general(grad, general, lambda, x_prev, 0.3, box);
      const Vec want =
          project_box(x_prev - 0.3 * grad - 0.3 * affine_transpose_apply(*a, lambda), box);
      worst = std::max(worst, (got - want).cwiseAbs().maxCoeff());
    }
    return detail::verdict(worst <= 1e-6, worst, "max_deviation");
  });

  checks.run("drift-inequality", [&] {
    for (const auto* trace : {&mosp3_c1, &mosp3_c2}) {
      const auto ok = drift_check(*trace, steps3.mu);
      if (!std::all_of(ok.begin(), ok.end(), [](bool b) { return b; }))
        return detail::verdict(false, 0.0, "violations");
    }
    return detail::pass(0.0, "violations");
  });

  checks.run("drift-detects-corrupted-dual", [&] {
    auto corrupted = mosp3_c1;
    for (auto& r : corrupted)
      r.lambda_next = (r.lambda - steps3.mu * r.constraint).cwiseMax(0.0);
    const auto ok = drift_check(corrupted, steps3.mu);
    const bool detected = !std::all_of(ok.begin(), ok.end(), [](bool b) { return b; });
    return detail::verdict(detected, detected ? 1.0 : 0.0, "mutation_detected");
  });

  checks.run("fit-telescope-bound", [&] {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto* trace : {&mosp3_c1, &mosp3_c2}) {
      std::vector<Vec> gs;
      for (const auto& r : *trace) gs.push_back(r.constraint);
      const double fit = dynamic_fit(gs).back();
      const double bound = trace->back().lambda_next.norm() / steps3.mu;
      worst = std::max(worst, fit - bound);
    }
    return detail::verdict(worst <= kDriftSlack, worst, "fit_minus_bound");
  });

  checks.run("dual-bound-constant-constraints", [&] {
    const auto stream = detail::constant_stream(2, 2, 60, 15.0, 2.0);
    const CloudNetwork net = gen_network(2, 2, seed + 2);
    const Mat incidence = build_incidence(2, 2);
    const StepsizePair steps{stepsize_for_horizon(60, 1.0 / 3.0, 0.05).alpha,
                             stepsize_for_horizon(60, 1.0 / 3.0, 50.0).mu};
    const auto trace = run_centralized_mosp(net, stream, steps);
    auto constants = measure_network_constants(net, stream, incidence);
    constants.v_g_max = 0.0;
    const auto bounds = bound_checks(trace, constants, steps);
    if (bounds.dual_bound == CheckStatus::kHypothesisUnmet)
      return CheckResult{"", CheckStatus::kFailed, "expected an active hypothesis"};
    return detail::verdict(bounds.dual_bound == CheckStatus::kPassed,
                           bounds.lambda_bar - bounds.max_lambda_norm, "bound_slack");
  });

  checks.run("dual-bound-hypothesis-unmet", [&] {
    const auto problems = make_network_problems(net3, stream3_c1);
    auto constants = measure_network_constants(net3, stream3_c1, build_incidence(3, 3));
    constants.v_g_max = constraint_variation(problems, net3.box()).v_g_max;
    const auto bounds = bound_checks(mosp3_c1, constants, steps3);
    if (constants.slater_margin > constants.v_g_max)
      return CheckResult{"", CheckStatus::kHypothesisUnmet,
                         "instance unexpectedly satisfied the hypothesis; skipped"};
    return detail::verdict(bounds.dual_bound == CheckStatus::kHypothesisUnmet,
                           constants.v_g_max - constants.slater_margin, "vbar_minus_eps");
  });

  checks.run("restart-equivalence", [&] {
    const auto restarted =
        run_centralized_mosp(net3, stream3_c1, steps3, restart_schedule(50, 50));
    const double dev = trace_deviation(mosp3_c1, restarted);
    return detail::verdict(dev == 0.0, dev, "max_deviation");
  });

  checks.run("projection-idempotent-nonexpansive", [&] {
    CounterRng rng(seed, RngStream::kTest);
    const FeasibleBox box = net3.box();
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      Vec x(box.dim()), y(box.dim());
      std::uint64_t idx = 10'000 + static_cast<std::uint64_t>(trial) * 2 * box.dim();
      for (Eigen::Index i = 0; i < box.dim(); ++i) {
        x(i) = rng.uniform(idx++, box.lower(i) - 50.0, box.upper(i) + 50.0);
        y(i) = rng.uniform(idx++, box.lower(i) - 50.0, box.upper(i) + 50.0);
      }
      const Vec px = project_box(x, box);
      if ((project_box(px, box) - px).cwiseAbs().maxCoeff() != 0.0)
        return detail::verdict(false, 1.0, "idempotence");
      worst = std::max(worst, (px - project_box(y, box)).norm() - (x - y).norm());
    }
    return detail::verdict(worst <= 1e-12, worst, "expansion_excess");
  });

  checks.run("weak-duality", [&] {
    const auto problems = make_network_problems(net3, stream3_c1);
    const FeasibleBox box = net3.box();
    const auto& p = problems.front();
    const auto feasible =
        per_slot_optimum(p.loss, p.constraint, box, 1e-6, kBenchmarkMaxIter, nullptr, false);
    CounterRng rng(seed, RngStream::kTest);
    double worst = -std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 25; ++trial) {
      Vec lambda(p.constraint.m);
      for (Eigen::Index i = 0; i < lambda.size(); ++i)
        lambda(i) = rng.uniform(20'000 + trial * 50 + i, 0.0, 20.0);
      const double dual = dual_function_value(p.loss, p.constraint, lambda, box).value;
      worst = std::max(worst, dual - p.loss.value(feasible.solution));
    }
    return detail::verdict(worst <= 1e-6, worst, "dual_minus_primal");
  });

  checks.run("strong-duality-grid", [&] {
    const CloudNetwork net = detail::tiny_network(10.0, 10.0, 1.0);
    const auto stream = detail::constant_stream(1, 1, 1, 1.0, 1.0);
    const auto problems = make_network_problems(net, stream);
    const auto& p = problems.front();
    const auto primal = per_slot_optimum(p.loss, p.constraint, net.box());
    double dual_max = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 400; ++i)
      for (int j = 0; j <= 400; ++j) {
        Vec lambda(2);
        lambda << i * 0.025, j * 0.025;
        dual_max =
            std::max(dual_max, dual_function_value(p.loss, p.constraint, lambda, net.box()).value);
      }
    const double gap = p.loss.value(primal.solution) - dual_max;
    return detail::verdict(std::abs(gap) <= 10.0 * kBenchmarkTol + 1e-4, gap, "duality_gap");
  });

  checks.run("perslot-vs-grid", [&] {
    const CloudNetwork net = detail::tiny_network(10.0, 10.0, 1.0);
    const auto stream = detail::constant_stream(1, 1, 1, 1.0, 1.0);
    const auto problems = make_network_problems(net, stream);
    const auto& p = problems.front();
    const auto report = per_slot_optimum(p.loss, p.constraint, net.box());
    // 1e-3-spaced grid over [0,10]^2; constraints are 1 - x <= 0 and
    // x - y <= 0, so feasible grid points have i >= 1000 and j >= i
    double best_val = std::numeric_limits<double>::infinity();
    Vec best_x(2);
    for (long i = 1000; i <= 10'000; ++i) {
      const double x = i * 1e-3;
      for (long j = i; j <= 10'000; ++j) {
        const double y = j * 1e-3;
        const double val = x * x + y * y;
        if (val < best_val) {
          best_val = val;
          best_x << x, y;
        }
      }
    }
    const double arg_err = (report.solution - best_x).cwiseAbs().maxCoeff();
    const double val_err = std::abs(p.loss.value(report.solution) - best_val);
    return detail::verdict(arg_err <= 1e-2 && val_err <= 1e-4,
                           std::max(arg_err, val_err), "max_error");
  });

  checks.run("offline-leq-perslot", [&] {
    const ScenarioStream stream = gen_case2(1, 1, 8, seed);
    const CloudNetwork net = detail::tiny_network(200.0, 200.0, 0.5);
    const auto problems = make_network_problems(net, stream);
    double perslot_total = 0.0;
    for (const auto& p : problems)
      perslot_total +=
          p.loss.value(per_slot_optimum(p.loss, p.constraint, net.box()).solution);
    const auto xs = offline_optimum(problems, net.box());
    double offline_total = 0.0;
    for (std::size_t t = 0; t < xs.size(); ++t) offline_total += problems[t].loss.value(xs[t]);
    return detail::verdict(offline_total <= perslot_total + 1e-4,
                           perslot_total - offline_total, "u2");
  });

  checks.run("optgap-identity-and-proposition1", [&] {
    const ScenarioStream stream = gen_case2(1, 1, 6, seed + 3);
    const CloudNetwork net = detail::tiny_network(200.0, 200.0, 0.5);
    const auto problems = make_network_problems(net, stream);
    const StepsizePair steps{0.01, 1.0};
    const auto trace = run_mosp(problems, net.box(), steps, Vec::Zero(net.edges()));
    std::vector<double> online, perslot, offline;
    for (const auto& r : trace) online.push_back(r.loss);
    for (const auto& p : problems)
      perslot.push_back(
          p.loss.value(per_slot_optimum(p.loss, p.constraint, net.box()).solution));
    const auto xs = offline_optimum(problems, net.box());
    for (std::size_t t = 0; t < xs.size(); ++t)
      offline.push_back(problems[t].loss.value(xs[t]));
    const auto gap = optimality_gap(online, perslot, offline);
    const double identity_err = std::abs(gap.gap - (gap.u1 + gap.u2));
    if (identity_err > 1e-9)
      return detail::verdict(false, identity_err, "identity_error");
    const double v_dual = dual_variation(problems, net.box(), 100.0, 201);
    const double rhs = 2.0 * static_cast<double>(problems.size()) * v_dual;
    return detail::verdict(gap.u2 <= rhs + 1e-6, rhs - gap.u2, "prop1_slack");
  });

  checks.run("regret-bound-eq14", [&] {
    const auto stream = detail::constant_stream(2, 2, 60, 15.0, 2.0);
    const CloudNetwork net = gen_network(2, 2, seed + 2);
    const Mat incidence = build_incidence(2, 2);
    const StepsizePair steps{stepsize_for_horizon(60, 1.0 / 3.0, 0.05).alpha,
                             stepsize_for_horizon(60, 1.0 / 3.0, 50.0).mu};
    const auto trace = run_centralized_mosp(net, stream, steps);
    const auto problems = make_network_problems(net, stream);
    auto constants = measure_network_constants(net, stream, incidence);
    const auto variation = constraint_variation(problems, net.box());
    constants.v_g_max = variation.v_g_max;
    if (constants.slater_margin <= constants.v_g_max)
      return CheckResult{"", CheckStatus::kHypothesisUnmet, "eps <= vbar; diagnostic skipped"};
    std::vector<double> online, perslot;
    std::vector<Vec> solutions;
    Vec warm;
    for (std::size_t t = 0; t < problems.size(); ++t) {
      const auto& p = problems[t];
      const auto rep = per_slot_optimum(p.loss, p.constraint, net.box(), kBenchmarkTol,
                                        kBenchmarkMaxIter, warm.size() ? &warm : nullptr, false);
      warm = rep.multiplier;
      online.push_back(trace[t].loss);
      perslot.push_back(p.loss.value(rep.solution));
      solutions.push_back(rep.solution);
    }
    const double regret = dynamic_regret(online, perslot).back();
    const double lambda_bar = dual_norm_bound(constants, steps);
    const double rhs =
        regret_bound_rhs(constants, lambda_bar, minimizer_variation(solutions),
                         variation.v_g_total, steps, static_cast<long>(problems.size()));
    return detail::verdict(regret <= rhs * 1.01, rhs - regret, "bound_slack");
  });

  checks.run("static-leq-dynamic", [&] {
    const auto stream = detail::constant_stream(2, 2, 20, 15.0, 2.0);
    const CloudNetwork net = gen_network(2, 2, seed + 4);
    const auto problems = make_network_problems(net, stream);
    const StepsizePair steps{0.01, 5.0};
    const auto trace = run_mosp(problems, net.box(), steps, Vec::Zero(net.edges()));
    std::vector<double> online, perslot;
    for (const auto& r : trace) online.push_back(r.loss);
    for (const auto& p : problems)
      perslot.push_back(
          p.loss.value(per_slot_optimum(p.loss, p.constraint, net.box()).solution));
    const double dynamic = dynamic_regret(online, perslot).back();
    const auto stat = static_regret(online, problems, net.box());
    if (!stat) return detail::verdict(false, 0.0, "static_benchmark_missing");
    return detail::verdict(*stat <= dynamic + 2e-6, dynamic - *stat, "dynamic_minus_static");
  });

  checks.run("fit-positive-part", [&] {
    // zero demand: the learner stays at the origin and never violates
    const auto stream = detail::constant_stream(2, 2, 30, 0.0, 2.0);
    const CloudNetwork net = gen_network(2, 2, seed + 5);
    const auto trace = run_centralized_mosp(net, stream, {0.01, 1.0});
    std::vector<Vec> gs;
    for (const auto& r : trace) gs.push_back(r.constraint);
    const auto fit = dynamic_fit(gs);
    double max_fit = 0.0;
    for (double f : fit) max_fit = std::max(max_fit, std::abs(f));
    return detail::verdict(max_fit == 0.0, max_fit, "fit_on_feasible_run");
  });

  checks.run("distributed-equals-centralized", [&] {
    const auto distributed = run_distributed_mosp(net3, stream3_c2, steps3);
    const double dev = trace_deviation(distributed, mosp3_c2);
    return detail::verdict(dev < 1e-9, dev, "max_deviation");
  });

  checks.run("incidence-structure", [&] {
    const Mat a = build_incidence(3, 2);
    const CloudNetwork net = gen_network(3, 2, seed);
    CounterRng rng(seed, RngStream::kTest);
    Vec x(net.edges()), b = Vec::Zero(net.nodes());
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.uniform(30'000 + i, 0.0, 10.0);
    for (int j = 0; j < 3; ++j) b(j) = rng.uniform(31'000 + j, 0.0, 10.0);
    const Vec via_matrix = affine_apply(a, x, b);
    const Vec via_structure = network_constraint(x, b, net);
    double worst = (via_matrix - via_structure).cwiseAbs().maxCoeff();
    for (int e = 0; e < net.edges(); ++e) {
      const double col_sum = a.col(e).sum();
      const double expected = e < 3 * 2 ? 0.0 : -1.0;
      worst = std::max(worst, std::abs(col_sum - expected));
    }
    return detail::verdict(worst == 0.0, worst, "max_deviation");
  });

  checks.run("gradient-finite-differences", [&] {
    const CloudNetwork net = gen_network(2, 3, seed);
    CounterRng rng(seed, RngStream::kTest);
    Vec prices(3);
    for (int k = 0; k < 3; ++k) prices(k) = rng.uniform(40'000 + k, 1.0, 3.0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      Vec x(net.edges());
      for (Eigen::Index i = 0; i < x.size(); ++i)
        x(i) = rng.uniform(41'000 + trial * 32 + i, 0.0, 10.0);
      const Vec grad = network_cost_gradient(x, prices, net);
      const double h = 1e-5;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        Vec xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        const double fd =
            (network_cost(xp, prices, net) - network_cost(xm, prices, net)) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - grad(i)));
      }
    }
    return detail::verdict(worst < 1e-6, worst, "max_fd_error");
  });

  checks.run("queue-relaxation", [&] {
    Vec q = Vec::Zero(net3.nodes());
    Vec drive = Vec::Zero(net3.nodes());
    double worst = 0.0;
    for (const auto& r : mosp3_c1) {
      const Vec g = network_constraint(r.x, stream3_c1.arrivals_at(r.t), net3);
      q = (q + g).cwiseMax(0.0);
      drive += g;
      worst = std::max(worst, (drive - q).maxCoeff());
    }
    return detail::verdict(worst <= 1e-9, worst, "drive_minus_queue");
  });

  checks.run("queue-lambda-scaling", [&] {
    double worst = 0.0;
    for (const auto& r : mosp3_c1)
      worst = std::max(worst,
                       (steps3.mu * r.queue - r.lambda_next).cwiseAbs().maxCoeff());
    return detail::verdict(worst <= 1e-9, worst, "max_deviation");
  });

  checks.run("scenario-determinism", [&] {
    std::ostringstream a, b;
    export_scenario(gen_case1(3, 3, 40, seed), a);
    export_scenario(gen_case1(3, 3, 40, seed), b);
    if (a.str() != b.str()) return detail::verdict(false, 1.0, "reseed_mismatch");
    const auto longer = gen_case1(3, 3, 60, seed);
    const auto shorter = gen_case1(3, 3, 40, seed);
    const double prefix_dev =
        (longer.prices.topRows(40) - shorter.prices).cwiseAbs().maxCoeff() +
        (longer.loads.topRows(40) - shorter.loads).cwiseAbs().maxCoeff();
    return detail::verdict(prefix_dev == 0.0, prefix_dev, "prefix_deviation");
  });

  checks.run("odg-primal-vs-grid", [&] {
    const CloudNetwork net = gen_network(2, 2, seed + 6);
    CounterRng rng(seed, RngStream::kTest);
    Vec prices(2), lambda(4);
    for (int k = 0; k < 2; ++k) prices(k) = rng.uniform(50'000 + k, 1.0, 3.0);
    for (int i = 0; i < 4; ++i) lambda(i) = rng.uniform(50'100 + i, 0.0, 30.0);
    const Vec x = odg_primal(lambda, prices, net);
    // objective is separable: scan each coordinate on a 1e-3 grid
    const Mat a = build_incidence(2, 2);
    const Vec w = affine_transpose_apply(a, lambda);
    const Vec d = network_quad_diag(prices, net);
    double value_closed = 0.0, value_grid = 0.0;
    const FeasibleBox box = net.box();
    for (Eigen::Index e = 0; e < box.dim(); ++e) {
      value_closed += d(e) * x(e) * x(e) + w(e) * x(e);
      double best = std::numeric_limits<double>::infinity();
      const long steps_count = static_cast<long>(box.upper(e) / 1e-3);
      for (long s = 0; s <= steps_count; ++s) {
        const double v = s * 1e-3;
        best = std::min(best, d(e) * v * v + w(e) * v);
      }
      value_grid += best;
    }
    const double err = std::abs(value_closed - value_grid);
    return detail::verdict(err <= 1e-3 && value_closed <= value_grid + 1e-9, err, "value_error");
  });

  checks.run("odg-dual-equals-learner-dual", [&] {
    CounterRng rng(seed, RngStream::kTest);
    const CloudNetwork net = gen_network(2, 2, seed + 7);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      Vec lambda(4), x(net.edges()), b = Vec::Zero(4);
      for (int i = 0; i < 4; ++i) lambda(i) = rng.uniform(60'000 + trial * 20 + i, 0.0, 5.0);
      for (Eigen::Index i = 0; i < x.size(); ++i)
        x(i) = rng.uniform(61'000 + trial * 20 + i, 0.0, 10.0);
      for (int j = 0; j < 2; ++j) b(j) = rng.uniform(62'000 + trial * 20 + j, 0.0, 100.0);
      const Vec via_odg = odg_dual(lambda, x, b, net, 0.7);
      const Vec via_learner = mosp_dual_step(lambda, network_constraint(x, b, net), 0.7);
      worst = std::max(worst, (via_odg - via_learner).cwiseAbs().maxCoeff());
    }
    return detail::verdict(worst == 0.0, worst, "max_deviation");
  });

  checks.run("slater-margin-grid", [&] {
    const CloudNetwork net = detail::tiny_network(10.0, 10.0, 1.0);
    const Mat a = build_incidence(1, 1);
    const FeasibleBox box = net.box();
    auto grid_margin = [&](double load) {
      double best = -std::numeric_limits<double>::infinity();
      for (int i = 0; i <= 1000; ++i)
        for (int j = 0; j <= 1000; ++j) {
          const double x = i * 0.01, y = j * 0.01;
          best = std::max(best, std::min(x - load, y - x));
        }
      return best;
    };
    Vec b1(2), b0(2);
    b1 << 1.0, 0.0;
    b0 << 0.0, 0.0;
    const double err1 = std::abs(slater_margin(a, b1, box).margin - grid_margin(1.0));
    const double err0 = std::abs(slater_margin(a, b0, box).margin - grid_margin(0.0));
    return detail::verdict(std::max(err1, err0) <= 0.02, std::max(err1, err0), "margin_error");
  });

  checks.run("variation-budget-direct", [&] {
    const auto problems = make_network_problems(net3, stream3_c2);
    const auto budget = constraint_variation(problems, net3.box());
    double total = 0.0, worst = 0.0;
    for (std::size_t t = 0; t + 1 < problems.size(); ++t) {
      const double direct =
          (stream3_c2.arrivals_at(t + 2) - stream3_c2.arrivals_at(t + 1)).cwiseMax(0.0).norm();
      worst = std::max(worst, std::abs(direct - budget.v_g_per_slot[t]));
      total += direct;
    }
    worst = std::max(worst, std::abs(total - budget.v_g_total));
    return detail::verdict(worst <= 1e-12, worst, "max_deviation");
  });

  checks.run("cost-fit-tradeoff", [&] {
    ExperimentConfig cfg;
    cfg.case_name = "case1";
    cfg.bench_perslot = false;
    const auto result = run_experiment(cfg);
    if (!result.seed_errors.empty())
      return detail::verdict(false, static_cast<double>(result.seed_errors.size()),
                             "seed_failures");
    const auto& s = result.summary;
    double cost_05 = 0, cost_1 = 0, fit_05 = 0, fit_1 = 0;
    for (std::size_t i = 0; i < s.algorithms.size(); ++i) {
      if (s.algorithms[i] == "odg_mu0.5") {
        cost_05 = s.median_avg_cost[i];
        fit_05 = s.median_fit[i];
      } else if (s.algorithms[i] == "odg_mu1") {
        cost_1 = s.median_avg_cost[i];
        fit_1 = s.median_fit[i];
      }
    }
    const bool ok = cost_1 >= cost_05 && fit_1 <= fit_05;
    return detail::verdict(ok, std::min(cost_1 - cost_05, fit_05 - fit_1), "ordering_slack");
  });

  checks.run("experiment-determinism", [&] {
    ExperimentConfig cfg;
    cfg.horizon = 24;
    cfg.seeds = {1, 2, 3};
    std::ostringstream a, b;
    emit_csv(run_experiment(cfg), a);
    emit_csv(run_experiment(cfg), b);
    return detail::verdict(a.str() == b.str() && !a.str().empty(),
                           static_cast<double>(a.str().size()), "csv_bytes");
  });

  if (opts.include_trend) {
    checks.run("corollary1-growth", [&] {
      ExperimentConfig cfg;
      cfg.case_name = "case2";
      const std::vector<long> horizons = {250, 500, 1000};
      const auto sweep = horizon_sweep(cfg, horizons);
      bool ratios_ok = true;
      for (std::size_t i = 0; i + 1 < sweep.points.size(); ++i) {
        const auto& lo = sweep.points[i];
        const auto& hi = sweep.points[i + 1];
        const double fit_ratio = std::max(hi.median_fit, kSlopeFloor) /
                                 std::max(lo.median_fit, kSlopeFloor);
        const double reg_ratio = std::max(hi.median_regret, kSlopeFloor) /
                                 std::max(lo.median_regret, kSlopeFloor);
        if (fit_ratio > std::pow(2.0, 2.0 / 3.0) * 1.25) ratios_ok = false;
        if (reg_ratio > 2.0 * 0.95) ratios_ok = false;
      }
      const bool ok = ratios_ok && sweep.fit_sublinear && sweep.regret_sublinear;
      std::ostringstream detail;
      detail << "slope_fit=" << format_double(sweep.slope_fit)
             << " slope_reg=" << format_double(sweep.slope_regret);
      return CheckResult{"", ok ? CheckStatus::kPassed : CheckStatus::kFailed, detail.str()};
    });
  }

  return report;
}

inline void print_validation(const ValidationReport& report, std::ostream& out) {
  for (const auto& c : report.checks) {
    const char* tag = c.status == CheckStatus::kPassed          ? "PASS"
                      : c.status == CheckStatus::kHypothesisUnmet ? "SKIP"
                                                                  : "FAIL";
    out << tag << "  " << c.name << "  (" << c.detail << ")\n";
  }
  out << (report.all_ok() ? "validation: all checks passed\n"
                          : "validation: FAILURES present\n");
}

}  // namespace mosp
