#include <catch2/catch_amalgamated.hpp>

#include "mosp/distributed.hpp"
#include "mosp/metrics.hpp"

using namespace mosp;

namespace {

std::vector<Vec> scalar_series(std::initializer_list<double> values) {
  std::vector<Vec> out;
  for (double v : values) out.push_back(Vec::Constant(1, v));
  return out;
}

}  // namespace

TEST_CASE("dynamic regret arithmetic") {
  CHECK(dynamic_regret({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == std::vector<double>{0.0, 0.0, 0.0});
  CHECK(dynamic_regret({3.0, 3.0}, {1.0, 2.0}) == std::vector<double>{2.0, 3.0});
  CHECK_THROWS_AS(dynamic_regret({1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("dynamic regret against the per-slot benchmark is nonnegative") {
  // constant problem whose constraint is slack at the optimum: the per-slot
  // benchmark is then the global box minimizer of f, so every increment of
  // the regret is >= -tol
  FeasibleBox box(Vec::Zero(1), Vec::Constant(1, 10.0));
  const long horizon = 40;
  std::vector<SlotProblem> problems(horizon);
  auto a = std::make_shared<Mat>(1, 1);
  (*a)(0, 0) = 1.0;
  for (auto& p : problems) {
    p.loss.value = [](const Vec& x) { return (x(0) - 3.0) * (x(0) - 3.0); };
    p.loss.gradient = [](const Vec& x) { return Vec(Vec::Constant(1, 2.0 * (x(0) - 3.0))); };
    p.constraint = ConstraintOracle::affine(a, Vec::Constant(1, -5.0));  // x <= 5
  }
  const auto trace = run_mosp(problems, box, {0.1, 0.5}, Vec::Constant(1, 9.0));

  const auto rep = per_slot_optimum(problems[0].loss, problems[0].constraint, box, 1e-8);
  CHECK_THAT(rep.solution(0), Catch::Matchers::WithinAbs(3.0, 1e-6));
  std::vector<double> online, bench;
  for (const auto& r : trace) {
    online.push_back(r.loss);
    bench.push_back(problems[0].loss.value(rep.solution));
  }
  const auto regret = dynamic_regret(online, bench);
  double prev = 0.0;
  for (double r : regret) {
    CHECK(r >= prev - 1e-6);
    prev = r;
  }
  CHECK(regret.back() > 0.0);  // the learner pays for the slow start
}

TEST_CASE("dynamic fit examples") {
  const auto fit = dynamic_fit(scalar_series({1.0, -2.0, 3.0}));
  CHECK_THAT(fit[0], Catch::Matchers::WithinAbs(1.0, 1e-15));
  CHECK_THAT(fit[1], Catch::Matchers::WithinAbs(0.0, 1e-15));
  CHECK_THAT(fit[2], Catch::Matchers::WithinAbs(2.0, 1e-15));

  const auto feasible = dynamic_fit(scalar_series({-1.0, -0.5, 0.0}));
  for (double f : feasible) CHECK(f == 0.0);

  const auto alternating = dynamic_fit(scalar_series({1.0, -1.0, 1.0, -1.0}));
  CHECK(alternating == std::vector<double>{1.0, 0.0, 1.0, 0.0});

  std::vector<Vec> bad = {Vec::Zero(2), Vec::Zero(3)};
  CHECK_THROWS_AS(dynamic_fit(bad), std::invalid_argument);
}

TEST_CASE("optimality gap identity") {
  CHECK(optimality_gap({1, 2}, {1, 2}, {1, 2}).gap == 0.0);

  // U1 = 5 and U2 = 3 compose to a gap of 8
  const auto gap = optimality_gap({10.0}, {5.0}, {2.0});
  CHECK(gap.u1 == 5.0);
  CHECK(gap.u2 == 3.0);
  CHECK(gap.gap == 8.0);
  CHECK(std::abs(gap.gap - (gap.u1 + gap.u2)) <= 1e-9);

  CHECK_THROWS_AS(optimality_gap({1.0}, {1.0, 2.0}, {1.0}), std::invalid_argument);
}

TEST_CASE("constraint variation: affine with shared matrix") {
  auto a = std::make_shared<Mat>(Mat::Identity(2, 2));
  std::vector<SlotProblem> problems(2);
  problems[0].loss = problems[1].loss = LossOracle::diagonal_quadratic(Vec::Ones(2));
  Vec b0(2), b1(2);
  b0 << 1.0, 0.0;
  b1 << 2.0, -5.0;
  problems[0].constraint = ConstraintOracle::affine(a, b0);
  problems[1].constraint = ConstraintOracle::affine(a, b1);
  FeasibleBox box(Vec::Zero(2), Vec::Constant(2, 10.0));

  const auto budget = constraint_variation(problems, box);
  REQUIRE(budget.v_g_per_slot.size() == 1);
  CHECK_THAT(budget.v_g_per_slot[0], Catch::Matchers::WithinAbs(1.0, 1e-15));
  CHECK(budget.v_g_max == budget.v_g_total);

  problems[1].constraint = ConstraintOracle::affine(a, b0);
  CHECK(constraint_variation(problems, box).v_g_total == 0.0);
}

TEST_CASE("constraint variation: affine with differing matrices uses vertex maxima") {
  // g difference is (A1 - A0) x + (b1 - b0); componentwise max over the box
  auto a0 = std::make_shared<Mat>(1, 1);
  (*a0)(0, 0) = 1.0;
  auto a1 = std::make_shared<Mat>(1, 1);
  (*a1)(0, 0) = 2.0;
  std::vector<SlotProblem> problems(2);
  problems[0].constraint = ConstraintOracle::affine(a0, Vec::Zero(1));
  problems[1].constraint = ConstraintOracle::affine(a1, Vec::Constant(1, -1.0));
  FeasibleBox box(Vec::Zero(1), Vec::Constant(1, 4.0));
  // difference x - 1 on [0,4] peaks at x = 4
  CHECK_THAT(constraint_variation(problems, box).v_g_total,
             Catch::Matchers::WithinAbs(3.0, 1e-15));
}

TEST_CASE("minimizer variation") {
  CHECK(minimizer_variation({Vec::Ones(2), Vec::Ones(2), Vec::Ones(2)}) == 0.0);
  CHECK_THAT(minimizer_variation(scalar_series({0.0, 1.0, 3.0})),
             Catch::Matchers::WithinAbs(3.0, 1e-15));
  CHECK_THROWS_AS(minimizer_variation({}), std::invalid_argument);
}

TEST_CASE("dual variation: identical slots vanish, load offsets grow with the cap") {
  const CloudNetwork net = gen_network(1, 1, 3);
  ScenarioStream stream;
  stream.num_mapping = stream.num_dc = 1;
  stream.horizon = 2;
  stream.kind = ScenarioStream::Kind::kCustom;
  stream.prices = Mat::Constant(2, 1, 1.0);
  stream.loads = Mat::Constant(2, 1, 5.0);
  auto identical = make_network_problems(net, stream);
  CHECK(dual_variation(identical, net.box(), 50.0) == 0.0);

  // second slot's demand offset by delta: the dual difference is lambda_j *
  // delta, maximized at the cap
  const double delta = 2.5;
  stream.loads(1, 0) += delta;
  auto shifted = make_network_problems(net, stream);
  CHECK_THAT(dual_variation(shifted, net.box(), 50.0),
             Catch::Matchers::WithinAbs(50.0 * delta, 1e-9));
  CHECK_THAT(dual_variation(shifted, net.box(), 100.0),
             Catch::Matchers::WithinAbs(100.0 * delta, 1e-9));
}

TEST_CASE("drift check: trivial cases and simulated runs") {
  // lambda = 0: projection of mu*g can only shrink the norm
  std::vector<RoundTrace> trace(1);
  trace[0].lambda = Vec::Zero(2);
  Vec g(2);
  g << 3.0, -4.0;
  trace[0].constraint = g;
  trace[0].lambda_next = mosp_dual_step(trace[0].lambda, g, 0.5);
  CHECK(drift_check(trace, 0.5)[0]);

  // g = 0: both sides vanish
  trace[0].lambda = Vec::Ones(2);
  trace[0].constraint = Vec::Zero(2);
  trace[0].lambda_next = trace[0].lambda;
  CHECK(drift_check(trace, 0.5)[0]);

  const CloudNetwork net = gen_network(3, 3, 4);
  const ScenarioStream stream = gen_case2(3, 3, 80, 4);
  const StepsizePair steps{0.02, 3.0};
  const auto run = run_centralized_mosp(net, stream, steps);
  const auto ok = drift_check(run, steps.mu);
  CHECK(std::all_of(ok.begin(), ok.end(), [](bool b) { return b; }));
}

TEST_CASE("drift check flags a sign-flipped dual update") {
  const CloudNetwork net = gen_network(2, 2, 8);
  const ScenarioStream stream = gen_case1(2, 2, 30, 8);
  const StepsizePair steps{0.02, 3.0};
  auto run = run_centralized_mosp(net, stream, steps);
  for (auto& r : run) r.lambda_next = (r.lambda - steps.mu * r.constraint).cwiseMax(0.0);
  const auto ok = drift_check(run, steps.mu);
  CHECK(!std::all_of(ok.begin(), ok.end(), [](bool b) { return b; }));
}

TEST_CASE("bound checks: hypothesis status and the telescoped fit bound") {
  const CloudNetwork net = gen_network(2, 2, 10);
  ScenarioStream stream;
  stream.num_mapping = stream.num_dc = 2;
  stream.horizon = 50;
  stream.kind = ScenarioStream::Kind::kCustom;
  stream.prices = Mat::Constant(50, 2, 2.0);
  stream.loads = Mat::Constant(50, 2, 15.0);
  const StepsizePair steps{0.02, 3.0};
  const auto trace = run_centralized_mosp(net, stream, steps);
  auto constants = measure_network_constants(net, stream, build_incidence(2, 2));

  SECTION("constant constraints activate the dual bound") {
    constants.v_g_max = 0.0;
    REQUIRE(constants.slater_margin > 0.0);
    const auto report = bound_checks(trace, constants, steps);
    CHECK(report.dual_bound == CheckStatus::kPassed);
    CHECK(report.fit_bound_ok);
    CHECK(report.fit_bar_bound_ok);
    CHECK(report.max_lambda_norm <= report.lambda_bar);
  }

  SECTION("eps below the variation reports hypothesis unmet, never a silent pass") {
    constants.v_g_max = constants.slater_margin + 1.0;
    const auto report = bound_checks(trace, constants, steps);
    CHECK(report.dual_bound == CheckStatus::kHypothesisUnmet);
    CHECK(std::isnan(report.lambda_bar));
    CHECK(report.fit_bound_ok);  // the telescoped bound applies regardless
  }
}

TEST_CASE("fit bound holds per sub-horizon under restarts") {
  const CloudNetwork net = gen_network(2, 2, 11);
  const ScenarioStream stream = gen_case1(2, 2, 60, 11);
  const StepsizePair steps{0.02, 3.0};
  const auto restarts = restart_schedule(60, 20);
  const auto trace = run_centralized_mosp(net, stream, steps, restarts);
  auto constants = measure_network_constants(net, stream, build_incidence(2, 2));
  constants.v_g_max = constants.slater_margin + 1.0;  // only the fit bound is active
  const auto report = bound_checks(trace, constants, steps, restarts);
  CHECK(report.fit_bound_ok);
}

TEST_CASE("metric series: lengths equal the horizon and fit stays nonnegative") {
  const CloudNetwork net = gen_network(2, 2, 12);
  const ScenarioStream stream = gen_case2(2, 2, 45, 12);
  const auto trace = run_centralized_mosp(net, stream, {0.02, 3.0});
  const auto series = build_metric_series(trace, {});
  CHECK(series.fit_d.size() == 45);
  CHECK(series.avg_cost.size() == 45);
  CHECK(series.lambda_norm.size() == 45);
  for (double f : series.fit_d) CHECK(f >= 0.0);
}
