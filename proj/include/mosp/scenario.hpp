#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mosp/errors.hpp"
#include "mosp/metrics.hpp"
#include "mosp/network.hpp"
#include "mosp/oracles.hpp"
#include "mosp/rng.hpp"

namespace mosp {

constexpr double kMinPrice = 1e-9;  // keeps the serving cost strictly convex

/// Full-precision decimal, round-trips exactly through strtod.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Deterministic sequence of per-slot prices and workload arrivals.
struct ScenarioStream {
  enum class Kind { kCase1, kCase2, kCustom };

  int num_mapping = 0;
  int num_dc = 0;
  long horizon = 0;
  std::uint64_t seed = 0;
  Kind kind = Kind::kCustom;
  Mat prices;  // T x K
  Mat loads;   // T x J

  Vec prices_at(long t) const { return prices.row(t - 1).transpose(); }

  /// Arrival vector over all nodes; data-center rows are zero.
  Vec arrivals_at(long t) const {
    Vec b = Vec::Zero(num_mapping + num_dc);
    b.head(num_mapping) = loads.row(t - 1).transpose();
    return b;
  }

  /// Componentwise max of the arrival vectors over the horizon.
  Vec max_arrivals() const {
    Vec b = Vec::Zero(num_mapping + num_dc);
    for (int j = 0; j < num_mapping; ++j) b(j) = loads.col(j).maxCoeff();
    return b;
  }
};

/// i.i.d. prices U[1,3] and loads U[50,150].
inline ScenarioStream gen_case1(int num_mapping, int num_dc, long horizon, std::uint64_t seed) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  ScenarioStream s;
  s.num_mapping = num_mapping;
  s.num_dc = num_dc;
  s.horizon = horizon;
  s.seed = seed;
  s.kind = ScenarioStream::Kind::kCase1;
  s.prices.resize(horizon, num_dc);
  s.loads.resize(horizon, num_mapping);
  CounterRng prices(seed, RngStream::kPrices);
  CounterRng loads(seed, RngStream::kLoads);
  for (long t = 0; t < horizon; ++t) {
    for (int k = 0; k < num_dc; ++k)
      s.prices(t, k) = prices.uniform(static_cast<std::uint64_t>(t) * num_dc + k, 1.0, 3.0);
    for (int j = 0; j < num_mapping; ++j)
      s.loads(t, j) = loads.uniform(static_cast<std::uint64_t>(t) * num_mapping + j, 50.0, 150.0);
  }
  return s;
}

/// Sinusoid with period 24 slots plus i.i.d. noise:
/// p_t^k = sin(pi t / 12) + U[1,3], b_t^j = 50 sin(pi t / 12) + U[99,101].
inline ScenarioStream gen_case2(int num_mapping, int num_dc, long horizon, std::uint64_t seed) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  ScenarioStream s;
  s.num_mapping = num_mapping;
  s.num_dc = num_dc;
  s.horizon = horizon;
  s.seed = seed;
  s.kind = ScenarioStream::Kind::kCase2;
  s.prices.resize(horizon, num_dc);
  s.loads.resize(horizon, num_mapping);
  CounterRng prices(seed, RngStream::kPrices);
  CounterRng loads(seed, RngStream::kLoads);
  for (long t = 0; t < horizon; ++t) {
    const double wave = std::sin(M_PI * static_cast<double>(t + 1) / 12.0);
    for (int k = 0; k < num_dc; ++k)
      s.prices(t, k) = std::max(
          kMinPrice,
          wave + prices.uniform(static_cast<std::uint64_t>(t) * num_dc + k, 1.0, 3.0));
    for (int j = 0; j < num_mapping; ++j)
      s.loads(t, j) =
          50.0 * wave + loads.uniform(static_cast<std::uint64_t>(t) * num_mapping + j, 99.0, 101.0);
  }
  return s;
}

/// The slot-t loss/constraint pair for a network instance. All slots share
/// one incidence matrix.
inline std::vector<SlotProblem> make_network_problems(const CloudNetwork& net,
                                                      const ScenarioStream& stream) {
  auto a = std::make_shared<Mat>(build_incidence(net.num_mapping, net.num_dc));
  std::vector<SlotProblem> problems;
  problems.reserve(stream.horizon);
  const FeasibleBox box = net.box();
  for (long t = 1; t <= stream.horizon; ++t) {
    SlotProblem p;
    const Vec prices = stream.prices_at(t);
    p.loss = LossOracle::diagonal_quadratic(network_quad_diag(prices, net));
    p.loss.grad_bound = (2.0 * p.loss.quad_diag.cwiseProduct(box.upper)).norm();
    p.constraint = ConstraintOracle::affine(a, stream.arrivals_at(t));
    problems.push_back(std::move(p));
  }
  return problems;
}

/// G, M, R, epsilon measured from the instance rather than assumed. G is the
/// gradient norm at the box's upper corner with each data center's maximum
/// price over the stream; M bounds ||A x + b_t|| by per-row interval extremes
/// (each row's extreme is attained at a box vertex); R is the box diameter.
inline ProblemConstants measure_network_constants(const CloudNetwork& net,
                                                  const ScenarioStream& stream,
                                                  const Mat& incidence) {
  ProblemConstants c;
  const FeasibleBox box = net.box();
  c.radius = box.radius();

  Vec p_max(net.num_dc), p_min(net.num_dc);
  for (int k = 0; k < net.num_dc; ++k) {
    p_max(k) = stream.prices.col(k).maxCoeff();
    p_min(k) = stream.prices.col(k).minCoeff();
  }
  Vec grad_corner(net.edges());
  for (int e = 0; e < net.num_mapping * net.num_dc; ++e)
    grad_corner(e) = 2.0 * net.link_cost(e) * net.link_cap(e);
  for (int k = 0; k < net.num_dc; ++k)
    grad_corner(net.virtual_index(k)) = 2.0 * p_max(k) * net.dc_cap(k);
  c.grad_bound = grad_corner.norm();

  double m_sq = 0.0;
  for (int j = 0; j < net.num_mapping; ++j) {
    double out_cap = 0.0;
    for (int k = 0; k < net.num_dc; ++k) out_cap += net.link_cap(net.link_index(j, k));
    const double b_max = stream.loads.col(j).maxCoeff();
    const double b_min = stream.loads.col(j).minCoeff();
    const double row = std::max(std::abs(b_max), std::abs(b_min - out_cap));
    m_sq += row * row;
  }
  for (int k = 0; k < net.num_dc; ++k) {
    double in_cap = 0.0;
    for (int j = 0; j < net.num_mapping; ++j) in_cap += net.link_cap(net.link_index(j, k));
    const double row = std::max(in_cap, net.dc_cap(k));
    m_sq += row * row;
  }
  c.value_bound = std::sqrt(m_sq);

  c.slater_margin = slater_margin(incidence, stream.max_arrivals(), box).margin;
  return c;
}

// ---------------------------------------------------------------------------
// file formats

/// One slot per line: t, p_1..p_K, b_1..b_J (comma-separated, full precision),
/// preceded by header lines naming J, K, T, seed, and the case tag.
inline void export_scenario(const ScenarioStream& s, std::ostream& out) {
  out << "J " << s.num_mapping << "\n";
  out << "K " << s.num_dc << "\n";
  out << "T " << s.horizon << "\n";
  out << "seed " << s.seed << "\n";
  const char* kind = s.kind == ScenarioStream::Kind::kCase1   ? "case1"
                     : s.kind == ScenarioStream::Kind::kCase2 ? "case2"
                                                              : "custom";
  out << "case " << kind << "\n";
  for (long t = 1; t <= s.horizon; ++t) {
    out << t;
    for (int k = 0; k < s.num_dc; ++k) out << "," << format_double(s.prices(t - 1, k));
    for (int j = 0; j < s.num_mapping; ++j) out << "," << format_double(s.loads(t - 1, j));
    out << "\n";
  }
}

inline void export_scenario_file(const ScenarioStream& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  export_scenario(s, out);
}

inline ScenarioStream import_scenario(std::istream& in) {
  ScenarioStream s;
  std::string key;
  std::string case_name;
  in >> key >> s.num_mapping;
  if (key != "J") throw ConfigError("scenario file: expected 'J' header", key, 1);
  in >> key >> s.num_dc;
  if (key != "K") throw ConfigError("scenario file: expected 'K' header", key, 2);
  in >> key >> s.horizon;
  if (key != "T") throw ConfigError("scenario file: expected 'T' header", key, 3);
  in >> key >> s.seed;
  if (key != "seed") throw ConfigError("scenario file: expected 'seed' header", key, 4);
  in >> key >> case_name;
  if (key != "case") throw ConfigError("scenario file: expected 'case' header", key, 5);
  s.kind = case_name == "case1"   ? ScenarioStream::Kind::kCase1
           : case_name == "case2" ? ScenarioStream::Kind::kCase2
                                  : ScenarioStream::Kind::kCustom;
  s.prices.resize(s.horizon, s.num_dc);
  s.loads.resize(s.horizon, s.num_mapping);
  std::string line;
  std::getline(in, line);  // finish the header line
  for (long t = 1; t <= s.horizon; ++t) {
    if (!std::getline(in, line))
      throw ConfigError("scenario file: missing slot line", std::to_string(t), 5 + t);
    std::istringstream fields(line);
    std::string cell;
    std::getline(fields, cell, ',');
    if (std::stol(cell) != t)
      throw ConfigError("scenario file: slot index mismatch", cell, 5 + t);
    for (int k = 0; k < s.num_dc; ++k) {
      std::getline(fields, cell, ',');
      s.prices(t - 1, k) = std::stod(cell);
    }
    for (int j = 0; j < s.num_mapping; ++j) {
      std::getline(fields, cell, ',');
      s.loads(t - 1, j) = std::stod(cell);
    }
  }
  return s;
}

inline ScenarioStream import_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  return import_scenario(in);
}

/// Header lines for J and K followed by the link cap/cost table and the
/// data-center capacity table.
inline void export_network(const CloudNetwork& net, std::ostream& out) {
  out << "J " << net.num_mapping << "\n";
  out << "K " << net.num_dc << "\n";
  out << "links\n";
  for (int j = 0; j < net.num_mapping; ++j)
    for (int k = 0; k < net.num_dc; ++k)
      out << j << " " << k << " " << format_double(net.link_cap(net.link_index(j, k))) << " "
          << format_double(net.link_cost(net.link_index(j, k))) << "\n";
  out << "datacenters\n";
  for (int k = 0; k < net.num_dc; ++k) out << k << " " << format_double(net.dc_cap(k)) << "\n";
}

inline CloudNetwork import_network(std::istream& in) {
  CloudNetwork net;
  std::string key;
  in >> key >> net.num_mapping;
  if (key != "J") throw ConfigError("network file: expected 'J' header", key, 1);
  in >> key >> net.num_dc;
  if (key != "K") throw ConfigError("network file: expected 'K' header", key, 2);
  in >> key;
  if (key != "links") throw ConfigError("network file: expected 'links'", key, 3);
  net.link_cap.resize(net.num_mapping * net.num_dc);
  net.link_cost.resize(net.num_mapping * net.num_dc);
  net.dc_cap.resize(net.num_dc);
  for (int e = 0; e < net.num_mapping * net.num_dc; ++e) {
    int j, k;
    double cap, cost;
    in >> j >> k >> cap >> cost;
    net.link_cap(net.link_index(j, k)) = cap;
    net.link_cost(net.link_index(j, k)) = cost;
  }
  in >> key;
  if (key != "datacenters") throw ConfigError("network file: expected 'datacenters'", key, 0);
  for (int i = 0; i < net.num_dc; ++i) {
    int k;
    double cap;
    in >> k >> cap;
    net.dc_cap(k) = cap;
  }
  return net;
}

}  // namespace mosp
