#include <catch2/catch_amalgamated.hpp>

#include "mosp/network.hpp"
#include "mosp/scenario.hpp"
#include "mosp/solvers.hpp"

using namespace mosp;

namespace {

CloudNetwork unit_network(double link_cap, double dc_cap) {
  CloudNetwork net;
  net.num_mapping = 1;
  net.num_dc = 1;
  net.link_cap = Vec::Constant(1, link_cap);
  net.dc_cap = Vec::Constant(1, dc_cap);
  net.link_cost = Vec::Constant(1, 1.0);
  return net;
}

ScenarioStream constant_stream(int num_mapping, int num_dc, long horizon, double load,
                               double price) {
  ScenarioStream s;
  s.num_mapping = num_mapping;
  s.num_dc = num_dc;
  s.horizon = horizon;
  s.kind = ScenarioStream::Kind::kCustom;
  s.prices = Mat::Constant(horizon, num_dc, price);
  s.loads = Mat::Constant(horizon, num_mapping, load);
  return s;
}

}  // namespace

TEST_CASE("project_box examples and properties") {
  FeasibleBox box(Vec::Zero(2), Vec::Constant(2, 10.0));
  Vec interior(2);
  interior << 5.0, 5.0;
  CHECK((project_box(interior, box) - interior).isZero());

  Vec outside(2);
  outside << -1.0, 12.0;
  const Vec clamped = project_box(outside, box);
  CHECK(clamped(0) == 0.0);
  CHECK(clamped(1) == 10.0);

  FeasibleBox small(Vec::Zero(1), Vec::Constant(1, 2.0));
  CHECK(project_box(Vec::Constant(1, 3.0), small)(0) == 2.0);

  CounterRng rng(3, RngStream::kTest);
  for (int trial = 0; trial < 1000; ++trial) {
    Vec x(2), y(2);
    std::uint64_t idx = static_cast<std::uint64_t>(trial) * 4;
    for (int i = 0; i < 2; ++i) {
      x(i) = rng.uniform(idx++, -30.0, 30.0);
      y(i) = rng.uniform(idx++, -30.0, 30.0);
    }
    const Vec px = project_box(x, box);
    REQUIRE((project_box(px, box) - px).isZero());
    REQUIRE((px - project_box(y, box)).norm() <= (x - y).norm() + 1e-15);
  }
}

TEST_CASE("prox solver: zero multiplier reduces to a projected gradient step") {
  FeasibleBox box(Vec::Zero(2), Vec::Constant(2, 5.0));
  auto g = ConstraintOracle::general(1, [](const Vec& x) {
    Vec v(1);
    v << x.squaredNorm() - 1.0;
    return v;
  });
  Vec grad(2);
  grad << 1.0, -2.0;
  Vec x_prev(2);
  x_prev << 2.0, 2.0;
  const Vec got = solve_prox_general(grad, g, Vec::Zero(1), x_prev, 0.5, box);
  const Vec want = project_box(x_prev - 0.5 * grad, box);
  CHECK((got - want).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("prox solver: 1-d quadratic constraint case") {
  FeasibleBox box(Vec::Zero(1), Vec::Constant(1, 2.0));
  auto g = ConstraintOracle::general(1, [](const Vec& x) {
    Vec v(1);
    v << x(0) * x(0) - 1.0;
    return v;
  });
  const Vec got = solve_prox_general(Vec::Zero(1), g, Vec::Ones(1), Vec::Ones(1), 1.0, box);
  CHECK_THAT(got(0), Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-6));
}

TEST_CASE("per-slot optimum matches the 1e-3 grid oracle on the unit network") {
  // J=K=1, cost x^2 + y^2, constraints b - x <= 0 and x - y <= 0, b = 1
  const CloudNetwork net = unit_network(10.0, 10.0);
  const auto problems = make_network_problems(net, constant_stream(1, 1, 1, 1.0, 1.0));
  const auto& p = problems.front();
  const auto report = per_slot_optimum(p.loss, p.constraint, net.box());
  CHECK(report.kkt_residual <= kBenchmarkTol);

  // feasible grid points have x >= 1 (i >= 1000) and y >= x (j >= i)
  double best_val = std::numeric_limits<double>::infinity();
  Vec best_x(2);
  for (long i = 1000; i <= 10'000; ++i)
    for (long j = i; j <= 10'000; ++j) {
      const double x = i * 1e-3, y = j * 1e-3;
      const double val = x * x + y * y;
      if (val < best_val) {
        best_val = val;
        best_x << x, y;
      }
    }
  CHECK((report.solution - best_x).cwiseAbs().maxCoeff() <= 1e-2);
  CHECK(std::abs(p.loss.value(report.solution) - best_val) <= 1e-4);
  CHECK_THAT(report.solution(0), Catch::Matchers::WithinAbs(1.0, 1e-4));
  CHECK_THAT(report.solution(1), Catch::Matchers::WithinAbs(1.0, 1e-4));
}

TEST_CASE("per-slot optimum: zero demand allocates nothing") {
  const CloudNetwork net = unit_network(10.0, 10.0);
  const auto problems = make_network_problems(net, constant_stream(1, 1, 1, 0.0, 1.0));
  const auto report = per_slot_optimum(problems[0].loss, problems[0].constraint, net.box());
  CHECK(report.solution.cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(std::abs(problems[0].loss.value(report.solution)) <= 1e-9);
}

TEST_CASE("per-slot optimum: demand beyond capacity is infeasible") {
  const CloudNetwork net = unit_network(0.5, 0.5);
  const auto problems = make_network_problems(net, constant_stream(1, 1, 1, 1.0, 1.0));
  CHECK_THROWS_AS(per_slot_optimum(problems[0].loss, problems[0].constraint, net.box()),
                  InfeasibleProblem);
}

TEST_CASE("per-slot optimum: general path against a grid oracle") {
  // min (x-2)^2 + (y-1)^2 s.t. x^2 + y^2 <= 1 on [0,2]^2
  FeasibleBox box(Vec::Zero(2), Vec::Constant(2, 2.0));
  LossOracle f;
  f.value = [](const Vec& x) {
    return (x(0) - 2.0) * (x(0) - 2.0) + (x(1) - 1.0) * (x(1) - 1.0);
  };
  f.gradient = [](const Vec& x) {
    Vec g(2);
    g << 2.0 * (x(0) - 2.0), 2.0 * (x(1) - 1.0);
    return g;
  };
  auto g = ConstraintOracle::general(
      1,
      [](const Vec& x) {
        Vec v(1);
        v << x.squaredNorm() - 1.0;
        return v;
      },
      [](const Vec& x) {
        Mat jac(1, 2);
        jac << 2.0 * x(0), 2.0 * x(1);
        return jac;
      });
  const auto report = per_slot_optimum(f, g, box, 1e-4);

  double best_val = std::numeric_limits<double>::infinity();
  for (long i = 0; i <= 2000; ++i)
    for (long j = 0; j <= 2000; ++j) {
      const double x = i * 1e-3, y = j * 1e-3;
      if (x * x + y * y > 1.0) break;
      const double val = (x - 2.0) * (x - 2.0) + (y - 1.0) * (y - 1.0);
      best_val = std::min(best_val, val);
    }
  // the grid only sees points strictly inside the disc, so it sits slightly
  // above the continuum optimum
  CHECK(f.value(report.solution) <= best_val + 1e-3);
  CHECK(std::abs(f.value(report.solution) - best_val) <= 2e-2);
  CHECK(g.value(report.solution)(0) <= 1e-4);
}

TEST_CASE("offline optimum: single slot coincides with the per-slot optimum") {
  const CloudNetwork net = unit_network(10.0, 10.0);
  const auto problems = make_network_problems(net, constant_stream(1, 1, 1, 1.0, 1.0));
  const auto xs = offline_optimum(problems, net.box());
  const auto per_slot = per_slot_optimum(problems[0].loss, problems[0].constraint, net.box());
  CHECK((xs[0] - per_slot.solution).cwiseAbs().maxCoeff() <= 1e-4);
}

TEST_CASE("offline optimum: two identical slots against the product-space grid") {
  const CloudNetwork net = unit_network(3.0, 3.0);
  const auto problems = make_network_problems(net, constant_stream(1, 1, 2, 1.0, 1.0));
  const auto xs = offline_optimum(problems, net.box());

  // 0.05-spaced grid over ([0,3]^2)^2 under the aggregate constraint
  double best_val = std::numeric_limits<double>::infinity();
  Eigen::Vector4d best;
  for (int i1 = 0; i1 <= 60; ++i1)
    for (int j1 = 0; j1 <= 60; ++j1)
      for (int i2 = 0; i2 <= 60; ++i2)
        for (int j2 = 0; j2 <= 60; ++j2) {
          const double x1 = i1 * 0.05, y1 = j1 * 0.05;
          const double x2 = i2 * 0.05, y2 = j2 * 0.05;
          if ((1.0 - x1) + (1.0 - x2) > 0.0) continue;
          if ((x1 - y1) + (x2 - y2) > 0.0) continue;
          const double val = x1 * x1 + y1 * y1 + x2 * x2 + y2 * y2;
          if (val < best_val) {
            best_val = val;
            best << x1, y1, x2, y2;
          }
        }
  const double solver_val = problems[0].loss.value(xs[0]) + problems[1].loss.value(xs[1]);
  CHECK(std::abs(solver_val - best_val) <= 1e-3);

  const auto per_slot = per_slot_optimum(problems[0].loss, problems[0].constraint, net.box());
  CHECK((xs[0] - per_slot.solution).cwiseAbs().maxCoeff() <= 1e-3);
  CHECK((xs[1] - per_slot.solution).cwiseAbs().maxCoeff() <= 1e-3);
}

TEST_CASE("offline optimum relaxes per-slot feasibility") {
  // slot 2 has zero demand, so the offline solution can split the work
  const CloudNetwork net = unit_network(10.0, 10.0);
  ScenarioStream stream = constant_stream(1, 1, 2, 1.0, 1.0);
  stream.loads(1, 0) = 0.0;
  const auto problems = make_network_problems(net, stream);
  const auto xs = offline_optimum(problems, net.box());
  double offline_total = 0.0, perslot_total = 0.0;
  for (int t = 0; t < 2; ++t) {
    offline_total += problems[t].loss.value(xs[t]);
    perslot_total += problems[t].loss.value(
        per_slot_optimum(problems[t].loss, problems[t].constraint, net.box()).solution);
  }
  CHECK(offline_total <= perslot_total + 1e-6);
  CHECK(offline_total < perslot_total - 0.5);  // the split strictly helps here
}

TEST_CASE("offline optimum: size guard") {
  // 501 x 2002 > 10^6 coupled unknowns; rejected before any work
  std::vector<SlotProblem> dummy(501);
  FeasibleBox giant(Vec::Zero(2002), Vec::Ones(2002));
  CHECK_THROWS_AS(offline_optimum(dummy, giant), ConfigError);
}

TEST_CASE("best static: identical slots equal the per-slot optimum") {
  const CloudNetwork net = unit_network(10.0, 10.0);
  const auto problems = make_network_problems(net, constant_stream(1, 1, 3, 1.0, 1.0));
  const Vec x_static = best_static(problems, net.box());
  const auto per_slot = per_slot_optimum(problems[0].loss, problems[0].constraint, net.box());
  CHECK((x_static - per_slot.solution).cwiseAbs().maxCoeff() <= 1e-4);
}

TEST_CASE("best static: disjoint feasible sets raise infeasibility") {
  FeasibleBox box(Vec::Zero(1), Vec::Constant(1, 10.0));
  std::vector<SlotProblem> problems(2);
  for (auto& p : problems) p.loss = LossOracle::diagonal_quadratic(Vec::Ones(1));
  auto a1 = std::make_shared<Mat>(1, 1);
  (*a1)(0, 0) = -1.0;  // 2 - x <= 0, needs x >= 2
  Vec b1(1);
  b1 << 2.0;
  problems[0].constraint = ConstraintOracle::affine(a1, b1);
  auto a2 = std::make_shared<Mat>(1, 1);
  (*a2)(0, 0) = 1.0;  // x - 1 <= 0, needs x <= 1
  Vec b2(1);
  b2 << -1.0;
  problems[1].constraint = ConstraintOracle::affine(a2, b2);
  CHECK_THROWS_AS(best_static(problems, box), InfeasibleProblem);
}

TEST_CASE("dual function value: closed forms and grid cases") {
  // lambda = 0 reduces to min f over the box
  const CloudNetwork net = unit_network(10.0, 10.0);
  const auto problems = make_network_problems(net, constant_stream(1, 1, 1, 1.0, 1.0));
  const auto at_zero =
      dual_function_value(problems[0].loss, problems[0].constraint, Vec::Zero(2), net.box());
  CHECK(at_zero.value == 0.0);
  CHECK(at_zero.minimizer.isZero());

  // 1-d f = x^2 on [0,2] with effective linear term -2: minimizer 1, value -1
  FeasibleBox box1(Vec::Zero(1), Vec::Constant(1, 2.0));
  auto a = std::make_shared<Mat>(1, 1);
  (*a)(0, 0) = -1.0;
  auto f1 = LossOracle::diagonal_quadratic(Vec::Ones(1));
  const auto dv = dual_function_value(f1, ConstraintOracle::affine(a, Vec::Zero(1)),
                                      Vec::Constant(1, 2.0), box1);
  double grid_best = std::numeric_limits<double>::infinity();
  double grid_arg = 0.0;
  for (long i = 0; i <= 2'000'000; ++i) {
    const double x = i * 1e-6;
    const double val = x * x - 2.0 * x;
    if (val < grid_best) {
      grid_best = val;
      grid_arg = x;
    }
  }
  CHECK_THAT(dv.value, Catch::Matchers::WithinAbs(grid_best, 1e-9));
  CHECK_THAT(dv.minimizer(0), Catch::Matchers::WithinAbs(grid_arg, 1e-6));
  CHECK_THAT(dv.value, Catch::Matchers::WithinAbs(-1.0, 1e-9));

  // network: multiplier 4 on the serving row, price 1, cap 10 -> y* = 2
  Vec lambda(2);
  lambda << 0.0, 4.0;
  const auto net_dv =
      dual_function_value(problems[0].loss, problems[0].constraint, lambda, net.box());
  CHECK_THAT(net_dv.minimizer(1), Catch::Matchers::WithinAbs(2.0, 1e-12));
}

TEST_CASE("weak duality against sampled feasible points") {
  const CloudNetwork net = unit_network(10.0, 10.0);
  const auto problems = make_network_problems(net, constant_stream(1, 1, 1, 1.0, 1.0));
  const auto& p = problems.front();
  CounterRng rng(17, RngStream::kTest);
  for (int trial = 0; trial < 50; ++trial) {
    // feasible points: x in [1,10], y in [x,10]
    Vec x(2);
    x(0) = rng.uniform(trial * 3 + 0, 1.0, 10.0);
    x(1) = rng.uniform(trial * 3 + 1, x(0), 10.0);
    Vec lambda(2);
    lambda(0) = rng.uniform(trial * 3 + 2, 0.0, 25.0);
    lambda(1) = rng.uniform(trial * 3 + 7'000, 0.0, 25.0);
    const double dual = dual_function_value(p.loss, p.constraint, lambda, net.box()).value;
    REQUIRE(dual <= p.loss.value(x) + 1e-9);
  }
}

TEST_CASE("strong duality holds at the per-slot optimum") {
  const CloudNetwork net = unit_network(10.0, 10.0);
  const auto problems = make_network_problems(net, constant_stream(1, 1, 1, 1.0, 1.0));
  const auto& p = problems.front();
  const auto report = per_slot_optimum(p.loss, p.constraint, net.box());
  double dual_max = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 1000; ++i)
    for (int j = 0; j <= 1000; ++j) {
      Vec lambda(2);
      lambda << i * 0.01, j * 0.01;
      dual_max =
          std::max(dual_max, dual_function_value(p.loss, p.constraint, lambda, net.box()).value);
    }
  CHECK(std::abs(p.loss.value(report.solution) - dual_max) <= 10.0 * kBenchmarkTol + 1e-4);
}
