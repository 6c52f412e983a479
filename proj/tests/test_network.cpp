#include <catch2/catch_amalgamated.hpp>
#include <sstream>

#include "mosp/distributed.hpp"
#include "mosp/network.hpp"
#include "mosp/scenario.hpp"

using namespace mosp;

TEST_CASE("incidence matrix: smallest network") {
  const Mat a = build_incidence(1, 1);
  REQUIRE(a.rows() == 2);
  REQUIRE(a.cols() == 2);
  CHECK(a(0, 0) == -1.0);  // link leaves the mapping node
  CHECK(a(1, 0) == 1.0);   // and enters the data center
  CHECK(a(0, 1) == 0.0);
  CHECK(a(1, 1) == -1.0);  // virtual edge leaves the data center
}

TEST_CASE("incidence matrix: shapes and column sums") {
  const Mat small = build_incidence(2, 1);
  CHECK(small.rows() == 3);
  CHECK(small.cols() == 3);

  const Mat big = build_incidence(10, 10);
  REQUIRE(big.rows() == 20);
  REQUIRE(big.cols() == 110);
  for (int e = 0; e < 110; ++e) {
    const double sum = big.col(e).sum();
    CHECK(sum == (e < 100 ? 0.0 : -1.0));
  }
  CHECK_THROWS_AS(build_incidence(0, 1), std::invalid_argument);
}

TEST_CASE("incidence rows match the structured constraint evaluation") {
  const CloudNetwork net = gen_network(3, 2, 7);
  const Mat a = build_incidence(3, 2);
  CounterRng rng(7, RngStream::kTest);
  Vec x(net.edges());
  Vec b = Vec::Zero(net.nodes());
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.uniform(i, 0.0, 9.0);
  for (int j = 0; j < 3; ++j) b(j) = rng.uniform(100 + j, 0.0, 50.0);

  const Vec structured = network_constraint(x, b, net);
  const Vec dense = affine_apply(a, x, b);
  CHECK((structured - dense).cwiseAbs().maxCoeff() == 0.0);

  // row j = b_j - sum_k x^{jk}; row J+k = sum_j x^{jk} - y^k
  for (int j = 0; j < 3; ++j) {
    double served = 0.0;
    for (int k = 0; k < 2; ++k) served += x(net.link_index(j, k));
    CHECK_THAT(structured(j), Catch::Matchers::WithinAbs(b(j) - served, 1e-15));
  }
  for (int k = 0; k < 2; ++k) {
    double assigned = 0.0;
    for (int j = 0; j < 3; ++j) assigned += x(net.link_index(j, k));
    CHECK_THAT(structured(3 + k),
               Catch::Matchers::WithinAbs(assigned - x(net.virtual_index(k)), 1e-15));
  }
}

TEST_CASE("network constraint examples") {
  CloudNetwork net;
  net.num_mapping = net.num_dc = 1;
  net.link_cap = Vec::Constant(1, 10.0);
  net.dc_cap = Vec::Constant(1, 10.0);
  net.link_cost = Vec::Constant(1, 1.0);

  Vec b(2);
  b << 1.0, 0.0;
  Vec balanced(2);
  balanced << 1.0, 1.0;
  CHECK(network_constraint(balanced, b, net).isZero());

  CHECK(network_constraint(Vec::Zero(2), b, net)(0) == 1.0);
  CHECK(network_constraint(Vec::Zero(2), b, net)(1) == 0.0);

  Vec unserved(2);
  unserved << 1.0, 0.0;  // forwarded but not served
  const Vec g = network_constraint(unserved, b, net);
  CHECK(g(0) == 0.0);
  CHECK(g(1) == 1.0);

  CHECK_THROWS_AS(network_constraint(Vec::Zero(3), b, net), std::invalid_argument);
}

TEST_CASE("network cost and gradient") {
  CloudNetwork net;
  net.num_mapping = net.num_dc = 1;
  net.link_cap = Vec::Constant(1, 10.0);
  net.dc_cap = Vec::Constant(1, 10.0);
  net.link_cost = Vec::Constant(1, 3.0);
  Vec prices = Vec::Constant(1, 2.0);

  CHECK(network_cost(Vec::Zero(2), prices, net) == 0.0);
  CHECK(network_cost_gradient(Vec::Zero(2), prices, net).isZero());

  Vec x(2);
  x << 1.0, 2.0;
  CHECK(network_cost(x, prices, net) == 11.0);  // 3*1 + 2*4
  const Vec grad = network_cost_gradient(x, prices, net);
  CHECK(grad(0) == 6.0);
  CHECK(grad(1) == 8.0);
}

TEST_CASE("analytic gradient matches central finite differences") {
  const CloudNetwork net = gen_network(3, 3, 13);
  const ScenarioStream stream = gen_case1(3, 3, 1, 13);
  const Vec prices = stream.prices_at(1);
  CounterRng rng(13, RngStream::kTest);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    Vec x(net.edges());
    for (Eigen::Index i = 0; i < x.size(); ++i)
      x(i) = rng.uniform(trial * 32 + i, 0.0, 10.0);
    const Vec grad = network_cost_gradient(x, prices, net);
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      Vec xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      const double fd = (network_cost(xp, prices, net) - network_cost(xm, prices, net)) / (2 * h);
      worst = std::max(worst, std::abs(fd - grad(i)));
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("queue update examples") {
  CloudNetwork net;
  net.num_mapping = net.num_dc = 1;
  net.link_cap = Vec::Constant(1, 10.0);
  net.dc_cap = Vec::Constant(1, 10.0);
  net.link_cost = Vec::Constant(1, 1.0);

  // balanced flow keeps an empty queue empty
  Vec b(2);
  b << 1.0, 0.0;
  Vec balanced(2);
  balanced << 1.0, 1.0;
  CHECK(queue_update(Vec::Zero(2), balanced, b, net).isZero());

  // clamp at zero: q = (5,0), inflow (-7,2) -> (0,2)
  Vec q(2);
  q << 5.0, 0.0;
  Vec x(2);
  x << 8.0, 6.0;  // A x + b = (1-8, 8-6) = (-7, 2)
  const Vec next = queue_update(q, x, b, net);
  CHECK(next(0) == 0.0);
  CHECK(next(1) == 2.0);
}

TEST_CASE("queue relaxation: backlog dominates the running drive") {
  const CloudNetwork net = gen_network(2, 2, 14);
  const ScenarioStream stream = gen_case1(2, 2, 50, 14);
  const auto trace = run_centralized_mosp(net, stream, {0.02, 2.0});
  Vec q = Vec::Zero(net.nodes());
  Vec drive = Vec::Zero(net.nodes());
  for (const auto& r : trace) {
    const Vec g = network_constraint(r.x, stream.arrivals_at(r.t), net);
    q = (q + g).cwiseMax(0.0);
    drive += g;
    REQUIRE((q - drive).minCoeff() >= -1e-12);
  }
}

TEST_CASE("multiplier equals the scaled queue along the run") {
  const CloudNetwork net = gen_network(2, 2, 15);
  const ScenarioStream stream = gen_case1(2, 2, 60, 15);
  const StepsizePair steps{0.02, 4.0};
  const auto trace = run_centralized_mosp(net, stream, steps);
  for (const auto& r : trace)
    REQUIRE((steps.mu * r.queue - r.lambda_next).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("case 1 generator: ranges, mean, determinism") {
  const ScenarioStream s = gen_case1(2, 2, 25'000, 42);
  CHECK(s.prices.minCoeff() >= 1.0);
  CHECK(s.prices.maxCoeff() <= 3.0);
  CHECK(s.loads.minCoeff() >= 50.0);
  CHECK(s.loads.maxCoeff() <= 150.0);

  // law of large numbers over 10^5 price draws
  CHECK(s.prices.mean() > 1.99);
  CHECK(s.prices.mean() < 2.01);

  const ScenarioStream again = gen_case1(2, 2, 25'000, 42);
  CHECK((s.prices - again.prices).cwiseAbs().maxCoeff() == 0.0);
  CHECK((s.loads - again.loads).cwiseAbs().maxCoeff() == 0.0);

  const ScenarioStream other = gen_case1(2, 2, 25'000, 43);
  CHECK((s.prices - other.prices).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("case 2 generator: sinusoid plus noise") {
  const ScenarioStream s = gen_case2(3, 3, 240, 7);

  // t = 6: sin = 1, so p in [2,4] and b in [149,151]
  CHECK(s.prices_at(6).minCoeff() >= 2.0);
  CHECK(s.prices_at(6).maxCoeff() <= 4.0);
  CHECK(s.arrivals_at(6).head(3).minCoeff() >= 149.0);
  CHECK(s.arrivals_at(6).head(3).maxCoeff() <= 151.0);

  // t = 24: sin = 0 up to rounding, so p in [1,3]
  CHECK(s.prices_at(24).minCoeff() >= 1.0 - 1e-12);
  CHECK(s.prices_at(24).maxCoeff() <= 3.0 + 1e-12);

  CHECK(s.prices.minCoeff() >= 0.0);
  CHECK(s.prices.maxCoeff() <= 4.0);
  CHECK(s.loads.minCoeff() >= 49.0);
  CHECK(s.loads.maxCoeff() <= 151.0);
}

TEST_CASE("case 2 loads: strong period-24 autocorrelation") {
  const ScenarioStream s = gen_case2(1, 1, 2400, 11);
  const auto autocorr = [&](int lag) {
    const double mean = s.loads.col(0).mean();
    double num = 0.0, den = 0.0;
    for (long t = 0; t < s.horizon; ++t) {
      const double dt = s.loads(t, 0) - mean;
      den += dt * dt;
      if (t + lag < s.horizon) num += dt * (s.loads(t + lag, 0) - mean);
    }
    return num / den;
  };
  const double lag24 = autocorr(24);
  const double lag12 = autocorr(12);
  CHECK(lag24 > 0.9);
  CHECK(lag12 < -0.9);
  CHECK(lag24 > lag12 + 1.0);
}

TEST_CASE("network generator: ranges and determinism") {
  const CloudNetwork net = gen_network(10, 10, 99);
  CHECK(net.link_cap.size() == 100);
  CHECK(net.dc_cap.size() == 10);
  CHECK(net.edges() == 110);
  CHECK(net.box().dim() == 110);
  CHECK(net.link_cap.minCoeff() >= 10.0);
  CHECK(net.link_cap.maxCoeff() <= 100.0);
  CHECK(net.dc_cap.minCoeff() >= 100.0);
  CHECK(net.dc_cap.maxCoeff() <= 200.0);
  CHECK(net.link_cost.minCoeff() >= 0.4);
  CHECK(net.link_cost.maxCoeff() <= 4.0);
  for (int e = 0; e < 100; ++e)
    CHECK_THAT(net.link_cost(e), Catch::Matchers::WithinRel(40.0 / net.link_cap(e), 1e-15));

  const CloudNetwork again = gen_network(10, 10, 99);
  CHECK((net.link_cap - again.link_cap).cwiseAbs().maxCoeff() == 0.0);
  CHECK((net.dc_cap - again.dc_cap).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("slater margin: grid-verified cases") {
  CloudNetwork net;
  net.num_mapping = net.num_dc = 1;
  net.link_cap = Vec::Constant(1, 10.0);
  net.dc_cap = Vec::Constant(1, 10.0);
  net.link_cost = Vec::Constant(1, 4.0);
  const Mat a = build_incidence(1, 1);
  const FeasibleBox box = net.box();

  // max over the grid of min(x - b, y - x)
  const auto grid_margin = [&](double load) {
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 1000; ++i)
      for (int j = 0; j <= 1000; ++j)
        best = std::max(best, std::min(i * 0.01 - load, j * 0.01 - i * 0.01));
    return best;
  };

  Vec b(2);
  b << 1.0, 0.0;
  const auto with_demand = slater_margin(a, b, box);
  CHECK_THAT(with_demand.margin, Catch::Matchers::WithinAbs(grid_margin(1.0), 0.02));
  CHECK_THAT(with_demand.margin, Catch::Matchers::WithinAbs(4.5, 0.02));
  // the witness itself certifies the margin
  CHECK((-affine_apply(a, with_demand.witness, b)).minCoeff() >= with_demand.margin - 1e-12);

  b << 0.0, 0.0;
  const auto no_demand = slater_margin(a, b, box);
  CHECK_THAT(no_demand.margin, Catch::Matchers::WithinAbs(5.0, 0.02));

  // demand beyond total capacity: no strictly interior point
  b << 15.0, 0.0;
  const auto infeasible = slater_margin(a, b, box);
  CHECK(infeasible.margin == 0.0);
  CHECK(infeasible.raw_slack < 0.0);
}

TEST_CASE("measured constants bound the run") {
  const CloudNetwork net = gen_network(2, 2, 16);
  const ScenarioStream stream = gen_case1(2, 2, 40, 16);
  const auto c = measure_network_constants(net, stream, build_incidence(2, 2));
  CHECK_THAT(c.radius, Catch::Matchers::WithinRel(net.box().radius(), 1e-15));

  const auto problems = make_network_problems(net, stream);
  CounterRng rng(16, RngStream::kTest);
  for (int trial = 0; trial < 200; ++trial) {
    Vec x(net.edges());
    for (Eigen::Index i = 0; i < x.size(); ++i)
      x(i) = rng.uniform(trial * 16 + i, 0.0, net.box().upper(i));
    const long t = 1 + (trial % stream.horizon);
    REQUIRE(network_cost_gradient(x, stream.prices_at(t), net).norm() <= c.grad_bound + 1e-9);
    REQUIRE(network_constraint(x, stream.arrivals_at(t), net).norm() <= c.value_bound + 1e-9);
  }
}

TEST_CASE("scenario export/import round trip is exact") {
  const ScenarioStream s = gen_case2(3, 2, 30, 77);
  std::ostringstream out;
  export_scenario(s, out);

  std::istringstream in(out.str());
  const ScenarioStream back = import_scenario(in);
  CHECK(back.num_mapping == 3);
  CHECK(back.num_dc == 2);
  CHECK(back.horizon == 30);
  CHECK(back.seed == 77);
  CHECK(back.kind == ScenarioStream::Kind::kCase2);
  CHECK((s.prices - back.prices).cwiseAbs().maxCoeff() == 0.0);
  CHECK((s.loads - back.loads).cwiseAbs().maxCoeff() == 0.0);

  std::ostringstream again;
  export_scenario(back, again);
  CHECK(out.str() == again.str());
}

TEST_CASE("network export/import round trip is exact") {
  const CloudNetwork net = gen_network(3, 2, 5);
  std::ostringstream out;
  export_network(net, out);
  std::istringstream in(out.str());
  const CloudNetwork back = import_network(in);
  CHECK(back.num_mapping == 3);
  CHECK((net.link_cap - back.link_cap).cwiseAbs().maxCoeff() == 0.0);
  CHECK((net.link_cost - back.link_cost).cwiseAbs().maxCoeff() == 0.0);
  CHECK((net.dc_cap - back.dc_cap).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("counter rng: substreams are independent and extension-stable") {
  CounterRng a(5, RngStream::kPrices);
  CounterRng b(5, RngStream::kLoads);
  CHECK(a.bits(0) != b.bits(0));
  CHECK(a.unit(7) == CounterRng(5, RngStream::kPrices).unit(7));
  for (int i = 0; i < 1000; ++i) {
    const double u = a.unit(i);
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}
