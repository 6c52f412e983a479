#pragma once

#include <set>
#include <vector>

#include "mosp/learner.hpp"
#include "mosp/network.hpp"
#include "mosp/scenario.hpp"

namespace mosp {

/// Multiplier broadcast to one-hop neighbours at the end of a slot.
struct NodeMessage {
  int sender = 0;  // 0..J-1 mapping nodes, J..J+K-1 data centers
  double multiplier = 0.0;
  long slot = 0;
};

struct MappingNodeState {
  Vec x;              // outgoing-link decisions, length K
  double lambda = 0.0;
  Vec dc_lambda;      // neighbours' multipliers from the previous slot
};

struct DataCenterState {
  double y = 0.0;
  double lambda = 0.0;
  Vec mapping_lambda;   // received, kept for protocol completeness
  double price_prev = 0.0;
  bool has_price = false;  // false until the first local cost is observed
};

struct DistributedRound {
  RoundTrace trace;
  std::vector<NodeMessage> messages;
};

/// Synchronous per-node runner for the saddle-point recursion on a cloud
/// network. Each node owns its own multiplier and outgoing-edge decisions;
/// multipliers travel to one-hop neighbours between slots, and workload
/// assignments are observed by the receiving data center within the slot.
/// The assembled iterate matches the centralized recursion coordinatewise.
class DistributedMosp {
 public:
  DistributedMosp(const CloudNetwork& net, StepsizePair steps, std::set<long> restarts = {})
      : net_(net), steps_(steps), restarts_(std::move(restarts)) {
    mapping_.resize(net.num_mapping);
    for (auto& node : mapping_) {
      node.x = Vec::Zero(net.num_dc);
      node.dc_lambda = Vec::Zero(net.num_dc);
    }
    dc_.resize(net.num_dc);
    for (auto& node : dc_) node.mapping_lambda = Vec::Zero(net.num_mapping);
    queue_ = Vec::Zero(net.nodes());
  }

  /// Runs slot t. `incoming` must hold every neighbour multiplier from slot
  /// t-1 (none for t = 1); prices/arrivals are the slot-t data revealed after
  /// the primal decisions.
  DistributedRound round(long t, const Vec& prices, const Vec& arrivals,
                         const std::vector<NodeMessage>& incoming) {
    deliver(t, incoming);
    if (restarts_.count(t)) {
      // a restart is a protocol-wide event: local multipliers and the views
      // of neighbours' multipliers reset together
      for (auto& node : mapping_) {
        node.lambda = 0.0;
        node.dc_lambda.setZero();
      }
      for (auto& node : dc_) {
        node.lambda = 0.0;
        node.mapping_lambda.setZero();
      }
    }

    const double alpha = steps_.alpha;
    const double mu = steps_.mu;
    const int num_j = net_.num_mapping;
    const int num_k = net_.num_dc;

    // primal updates from slot-(t-1) information
    if (t > 1) {
      for (int j = 0; j < num_j; ++j) {
        auto& node = mapping_[j];
        for (int k = 0; k < num_k; ++k) {
          const double c = net_.link_cost(net_.link_index(j, k));
          const double grad = 2.0 * (c * node.x(k));
          const double v = node.x(k) - alpha * grad - alpha * (node.dc_lambda(k) - node.lambda);
          node.x(k) = std::clamp(v, 0.0, net_.link_cap(net_.link_index(j, k)));
        }
      }
      for (int k = 0; k < num_k; ++k) {
        auto& node = dc_[k];
        const double grad = node.has_price ? 2.0 * (node.price_prev * node.y) : 0.0;
        const double v = node.y - alpha * grad - alpha * (-node.lambda);
        node.y = std::clamp(v, 0.0, net_.dc_cap(k));
      }
    }

    // slot-t data is now revealed: loads at mapping nodes, workload arrivals
    // and prices at data centers
    DistributedRound out;
    out.trace.t = t;
    out.trace.x = assemble_x();
    out.trace.lambda = assemble_lambda();
    out.trace.loss = network_cost(out.trace.x, prices, net_);
    out.trace.constraint = network_constraint(out.trace.x, arrivals, net_);

    for (int j = 0; j < num_j; ++j) {
      auto& node = mapping_[j];
      double served = 0.0;
      for (int k = 0; k < num_k; ++k) served += node.x(k);
      node.lambda = std::max(0.0, node.lambda + mu * (arrivals(j) - served));
      out.messages.push_back({j, node.lambda, t});
    }
    for (int k = 0; k < num_k; ++k) {
      auto& node = dc_[k];
      double assigned = 0.0;
      for (int j = 0; j < num_j; ++j) assigned += mapping_[j].x(k);
      node.lambda = std::max(0.0, node.lambda + mu * (assigned - node.y));
      node.price_prev = prices(k);
      node.has_price = true;
      out.messages.push_back({num_j + k, node.lambda, t});
    }

    out.trace.lambda_next = assemble_lambda();
    out.trace.drift =
        0.5 * (out.trace.lambda_next.squaredNorm() - out.trace.lambda.squaredNorm());
    queue_ = queue_update(queue_, out.trace.x, arrivals, net_);
    out.trace.queue = queue_;
    return out;
  }

  Vec assemble_x() const {
    Vec x(net_.edges());
    for (int j = 0; j < net_.num_mapping; ++j)
      for (int k = 0; k < net_.num_dc; ++k) x(net_.link_index(j, k)) = mapping_[j].x(k);
    for (int k = 0; k < net_.num_dc; ++k) x(net_.virtual_index(k)) = dc_[k].y;
    return x;
  }

  Vec assemble_lambda() const {
    Vec lambda(net_.nodes());
    for (int j = 0; j < net_.num_mapping; ++j) lambda(j) = mapping_[j].lambda;
    for (int k = 0; k < net_.num_dc; ++k) lambda(net_.num_mapping + k) = dc_[k].lambda;
    return lambda;
  }

 private:
  void deliver(long t, const std::vector<NodeMessage>& incoming) {
    if (t <= 1) return;
    std::vector<bool> seen(net_.nodes(), false);
    for (const auto& msg : incoming) {
      if (msg.slot != t - 1) continue;
      seen[msg.sender] = true;
      if (msg.sender < net_.num_mapping) {
        for (auto& node : dc_) node.mapping_lambda(msg.sender) = msg.multiplier;
      } else {
        const int k = msg.sender - net_.num_mapping;
        for (auto& node : mapping_) node.dc_lambda(k) = msg.multiplier;
      }
    }
    for (int i = 0; i < net_.nodes(); ++i)
      if (!seen[i]) throw ProtocolError(i, t - 1);
  }

  CloudNetwork net_;
  StepsizePair steps_;
  std::set<long> restarts_;
  std::vector<MappingNodeState> mapping_;
  std::vector<DataCenterState> dc_;
  Vec queue_;
};

/// Full run with the in-process mailbox wired up.
inline std::vector<RoundTrace> run_distributed_mosp(const CloudNetwork& net,
                                                    const ScenarioStream& stream,
                                                    StepsizePair steps,
                                                    std::set<long> restarts = {}) {
  DistributedMosp engine(net, steps, std::move(restarts));
  std::vector<RoundTrace> trace;
  trace.reserve(stream.horizon);
  std::vector<NodeMessage> mailbox;
  for (long t = 1; t <= stream.horizon; ++t) {
    auto out = engine.round(t, stream.prices_at(t), stream.arrivals_at(t), mailbox);
    mailbox = std::move(out.messages);
    trace.push_back(std::move(out.trace));
  }
  return trace;
}

/// Centralized reference: the plain saddle-point recursion on the same
/// instance, with queue tracking added for parity.
inline std::vector<RoundTrace> run_centralized_mosp(const CloudNetwork& net,
                                                    const ScenarioStream& stream,
                                                    StepsizePair steps,
                                                    std::set<long> restarts = {}) {
  const auto problems = make_network_problems(net, stream);
  const FeasibleBox box = net.box();
  auto trace = run_mosp(problems, box, steps, Vec::Zero(net.edges()), restarts);
  Vec q = Vec::Zero(net.nodes());
  for (auto& rec : trace) {
    q = queue_update(q, rec.x, stream.arrivals_at(rec.t), net);
    rec.queue = q;
  }
  return trace;
}

/// Largest per-slot deviation between two traces over x, the multiplier, and
/// the next multiplier.
inline double trace_deviation(const std::vector<RoundTrace>& a, const std::vector<RoundTrace>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double max_dev = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    max_dev = std::max(max_dev, (a[i].x - b[i].x).cwiseAbs().maxCoeff());
    max_dev = std::max(max_dev, (a[i].lambda - b[i].lambda).cwiseAbs().maxCoeff());
    max_dev = std::max(max_dev, (a[i].lambda_next - b[i].lambda_next).cwiseAbs().maxCoeff());
  }
  return max_dev;
}

}  // namespace mosp
