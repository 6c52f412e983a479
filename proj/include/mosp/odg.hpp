#pragma once

#include <vector>

#include "mosp/learner.hpp"
#include "mosp/network.hpp"
#include "mosp/scenario.hpp"

namespace mosp {

struct OdgState {
  Vec lambda;
  double mu_odg = 0.0;
};

/// Exact coordinatewise minimizer of f(x) + lambda'(A x + b) over the box for
/// the quadratic network cost; the b term is constant in x and drops out:
///   x^{jk} = clip((l^j - l^k) / (2 c^{jk}), 0, cap),
///   y^k    = clip(l^k / (2 p^k), 0, cap).
inline Vec odg_primal(const Vec& lambda, const Vec& prices_used, const CloudNetwork& net) {
  Vec x(net.edges());
  for (int j = 0; j < net.num_mapping; ++j)
    for (int k = 0; k < net.num_dc; ++k) {
      const int e = net.link_index(j, k);
      const double unclipped = (lambda(j) - lambda(net.num_mapping + k)) / (2.0 * net.link_cost(e));
      x(e) = std::clamp(unclipped, 0.0, net.link_cap(e));
    }
  for (int k = 0; k < net.num_dc; ++k) {
    const double unclipped = lambda(net.num_mapping + k) / (2.0 * prices_used(k));
    x(net.virtual_index(k)) = std::clamp(unclipped, 0.0, net.dc_cap(k));
  }
  return x;
}

/// [lambda + mu (A x + b)]^+ with the true slot-t constraint data.
inline Vec odg_dual(const Vec& lambda, const Vec& x, const Vec& b, const CloudNetwork& net,
                    double mu_odg) {
  return mosp_dual_step(lambda, network_constraint(x, b, net), mu_odg);
}

/// The dual-gradient baseline operated causally: the slot-t primal solve uses
/// the previous slot's prices (slot 1 starts from a zero multiplier, which
/// forces the zero allocation whatever the prices are), while the dual update
/// sees the true slot-t data after acting. `causal = false` gives the
/// non-causal variant that peeks at the current slot's prices, kept for
/// diagnostics only.
inline std::vector<RoundTrace> run_odg(const CloudNetwork& net, const ScenarioStream& stream,
                                       double mu_odg, bool causal = true) {
  std::vector<RoundTrace> trace;
  trace.reserve(stream.horizon);
  Vec lambda = Vec::Zero(net.nodes());
  Vec queue = Vec::Zero(net.nodes());
  for (long t = 1; t <= stream.horizon; ++t) {
    const Vec prices_used = causal ? stream.prices_at(std::max<long>(1, t - 1))
                                   : stream.prices_at(t);
    const Vec x = odg_primal(lambda, prices_used, net);
    const Vec prices_true = stream.prices_at(t);
    const Vec b = stream.arrivals_at(t);

    RoundTrace rec;
    rec.t = t;
    rec.x = x;
    rec.lambda = lambda;
    rec.loss = network_cost(x, prices_true, net);
    rec.constraint = network_constraint(x, b, net);
    rec.lambda_next = mosp_dual_step(lambda, rec.constraint, mu_odg);
    rec.drift = 0.5 * (rec.lambda_next.squaredNorm() - lambda.squaredNorm());
    queue = queue_update(queue, x, b, net);
    rec.queue = queue;
    trace.push_back(rec);
    lambda = trace.back().lambda_next;
  }
  return trace;
}

}  // namespace mosp
