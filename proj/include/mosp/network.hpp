#pragma once

#include <memory>
#include <vector>

#include "mosp/box.hpp"
#include "mosp/oracles.hpp"
#include "mosp/rng.hpp"
#include "mosp/solvers.hpp"

namespace mosp {

/// Bipartite cloud network: J mapping nodes forwarding workload over links
/// (j,k) to K data centers, each with a virtual serving edge. Decisions are
/// ordered [x^{11}, ..., x^{JK}, y^1, ..., y^K].
struct CloudNetwork {
  int num_mapping = 0;  // J
  int num_dc = 0;       // K
  Vec link_cap;         // length J*K
  Vec dc_cap;           // length K
  Vec link_cost;        // c^{jk} = 40 / link_cap

  int nodes() const { return num_mapping + num_dc; }
  int edges() const { return num_mapping * num_dc + num_dc; }
  int link_index(int j, int k) const { return j * num_dc + k; }
  int virtual_index(int k) const { return num_mapping * num_dc + k; }

  FeasibleBox box() const {
    Vec upper(edges());
    upper.head(num_mapping * num_dc) = link_cap;
    upper.tail(num_dc) = dc_cap;
    return FeasibleBox::from_upper(std::move(upper));
  }
};

/// Node-edge incidence matrix: +1 where an edge enters a node, -1 where it
/// leaves. Link (j,k) leaves mapping node j and enters data center k; the
/// virtual edge leaves data center k.
inline Mat build_incidence(int num_mapping, int num_dc) {
  if (num_mapping < 1 || num_dc < 1)
    throw std::invalid_argument("network needs at least one node of each kind");
  const int nodes = num_mapping + num_dc;
  const int edges = num_mapping * num_dc + num_dc;
  Mat a = Mat::Zero(nodes, edges);
  for (int j = 0; j < num_mapping; ++j)
    for (int k = 0; k < num_dc; ++k) {
      a(j, j * num_dc + k) = -1.0;
      a(num_mapping + k, j * num_dc + k) = 1.0;
    }
  for (int k = 0; k < num_dc; ++k) a(num_mapping + k, num_mapping * num_dc + k) = -1.0;
  return a;
}

/// sum_k p^k (y^k)^2 + sum_{jk} c^{jk} (x^{jk})^2. `prices` has length K.
inline double network_cost(const Vec& x, const Vec& prices, const CloudNetwork& net) {
  double cost = 0.0;
  for (int j = 0; j < net.num_mapping; ++j)
    for (int k = 0; k < net.num_dc; ++k) {
      const double v = x(net.link_index(j, k));
      cost += net.link_cost(net.link_index(j, k)) * v * v;
    }
  for (int k = 0; k < net.num_dc; ++k) {
    const double y = x(net.virtual_index(k));
    cost += prices(k) * y * y;
  }
  return cost;
}

inline Vec network_cost_gradient(const Vec& x, const Vec& prices, const CloudNetwork& net) {
  Vec grad(net.edges());
  for (int e = 0; e < net.num_mapping * net.num_dc; ++e)
    grad(e) = 2.0 * (net.link_cost(e) * x(e));
  for (int k = 0; k < net.num_dc; ++k) {
    const int e = net.virtual_index(k);
    grad(e) = 2.0 * (prices(k) * x(e));
  }
  return grad;
}

/// The per-coordinate cost curvatures [c^{11}..c^{JK}, p^1..p^K].
inline Vec network_quad_diag(const Vec& prices, const CloudNetwork& net) {
  Vec d(net.edges());
  d.head(net.num_mapping * net.num_dc) = net.link_cost;
  d.tail(net.num_dc) = prices;
  return d;
}

/// A x + b with the incidence structure unrolled: row j is b^j - sum_k x^{jk},
/// row J+k is sum_j x^{jk} - y^k. `b` has length J+K (zeros on data-center rows).
inline Vec network_constraint(const Vec& x, const Vec& b, const CloudNetwork& net) {
  if (x.size() != net.edges() || b.size() != net.nodes())
    throw std::invalid_argument("network_constraint: dimension mismatch");
  Vec g(net.nodes());
  for (int j = 0; j < net.num_mapping; ++j) {
    double served = 0.0;
    for (int k = 0; k < net.num_dc; ++k) served += x(net.link_index(j, k));
    g(j) = b(j) - served;
  }
  for (int k = 0; k < net.num_dc; ++k) {
    double arrivals = 0.0;
    for (int j = 0; j < net.num_mapping; ++j) arrivals += x(net.link_index(j, k));
    g(net.num_mapping + k) = arrivals - x(net.virtual_index(k)) + b(net.num_mapping + k);
  }
  return g;
}

/// q_next = [q + A x + b]^+, the per-node backlog of unserved workload.
inline Vec queue_update(const Vec& q, const Vec& x, const Vec& b, const CloudNetwork& net) {
  return Vec((q + network_constraint(x, b, net)).cwiseMax(0.0));
}

/// Random instance: link caps U[10,100], data-center capacities U[100,200],
/// link costs 40/cap. Deterministic in the seed.
inline CloudNetwork gen_network(int num_mapping, int num_dc, std::uint64_t seed) {
  if (num_mapping < 1 || num_dc < 1)
    throw std::invalid_argument("network needs at least one node of each kind");
  CloudNetwork net;
  net.num_mapping = num_mapping;
  net.num_dc = num_dc;
  net.link_cap.resize(num_mapping * num_dc);
  net.link_cost.resize(num_mapping * num_dc);
  net.dc_cap.resize(num_dc);
  CounterRng caps(seed, RngStream::kLinkCaps);
  CounterRng capacity(seed, RngStream::kDcCapacity);
  for (int e = 0; e < num_mapping * num_dc; ++e) {
    net.link_cap(e) = caps.uniform(e, 10.0, 100.0);
    net.link_cost(e) = 40.0 / net.link_cap(e);
  }
  for (int k = 0; k < num_dc; ++k) net.dc_cap(k) = capacity.uniform(k, 100.0, 200.0);
  return net;
}

struct SlaterReport {
  double margin = 0.0;  // epsilon; 0 when no strictly interior point was found
  Vec witness;
  double raw_slack = 0.0;  // best min-slack found, may be negative
};

/// Largest uniform slack of a single point against every slot's constraint:
/// max over the box of min_i -(A x + b_max)_i with b_max the componentwise
/// max of b_t. Solved by projected subgradient ascent; the returned margin is
/// the verified slack of the witness, a lower bound on the true optimum.
inline SlaterReport slater_margin(const Mat& a, const Vec& b_max, const FeasibleBox& box,
                                  long iterations = 20'000) {
  const auto result = detail::affine_max_min_slack(a, b_max, box, iterations);
  const double verified = (-affine_apply(a, result.witness, b_max)).minCoeff();
  return {std::max(0.0, verified), result.witness, verified};
}

}  // namespace mosp
