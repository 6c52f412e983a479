#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mosp/distributed.hpp"
#include "mosp/metrics.hpp"
#include "mosp/odg.hpp"
#include "mosp/scenario.hpp"
#include "mosp/solvers.hpp"

namespace mosp {

inline constexpr double kTraceAgreementTol = 1e-9;

struct ExperimentConfig {
  int num_mapping = 10;  // J
  int num_dc = 10;       // K
  long horizon = 500;    // T
  std::string case_name = "case1";  // case1 | case2 | custom:<scenario path>
  std::vector<std::uint64_t> seeds;
  double alpha_scale = 0.05;
  double mu_scale = 50.0;
  double beta = 1.0 / 3.0;
  std::vector<double> mu_odg = {0.5, 1.0};
  bool bench_perslot = true;
  bool bench_offline = false;
  bool bench_static = false;
  std::optional<long> restart_delta;
  std::string output_dir = ".";

  ExperimentConfig() {
    for (std::uint64_t s = 1; s <= 20; ++s) seeds.push_back(s);
  }

  StepsizePair steps() const {
    return {stepsize_for_horizon(horizon, beta, alpha_scale).alpha,
            stepsize_for_horizon(horizon, beta, mu_scale).mu};
  }

  void validate() const {
    if (horizon < 1) throw ConfigError("T must be >= 1", "T");
    if (num_mapping < 1) throw ConfigError("J must be >= 1", "J");
    if (num_dc < 1) throw ConfigError("K must be >= 1", "K");
    if (alpha_scale <= 0.0) throw ConfigError("alpha_scale must be positive", "alpha_scale");
    if (mu_scale <= 0.0) throw ConfigError("mu_scale must be positive", "mu_scale");
    if (beta < 0.0 || beta >= 1.0) throw ConfigError("beta must lie in [0,1)", "beta");
    if (seeds.empty()) throw ConfigError("need at least one seed", "seeds");
    const long decision_dim = static_cast<long>(num_mapping) * num_dc + num_dc;
    if (bench_offline && horizon * decision_dim > 1'000'000)
      throw ConfigError("offline benchmark refused: T * (JK + K) exceeds 10^6", "offline");
    if (restart_delta && (*restart_delta < 1 || *restart_delta > horizon))
      throw ConfigError("restart_delta must lie in [1, T]", "restart_delta");
    if (case_name != "case1" && case_name != "case2" && case_name.rfind("custom:", 0) != 0)
      throw ConfigError("case must be case1, case2, or custom:<path>", "case");
  }
};

namespace detail {

inline std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto dots = item.find("..");
    if (dots != std::string::npos) {
      const std::uint64_t lo = std::stoull(item.substr(0, dots));
      const std::uint64_t hi = std::stoull(item.substr(dots + 2));
      for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    } else if (!item.empty()) {
      seeds.push_back(std::stoull(item));
    }
  }
  return seeds;
}

inline bool parse_bool(const std::string& value, const std::string& key, int line) {
  if (value == "1" || value == "true" || value == "on") return true;
  if (value == "0" || value == "false" || value == "off") return false;
  throw ConfigError("bad boolean for '" + key + "' on line " + std::to_string(line), key, line);
}

}  // namespace detail

/// Flat key=value file; '#' starts a comment. Unknown keys are rejected.
inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key=value on line " + std::to_string(line_no), line, line_no);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "J") cfg.num_mapping = std::stoi(value);
      else if (key == "K") cfg.num_dc = std::stoi(value);
      else if (key == "T") cfg.horizon = std::stol(value);
      else if (key == "case") cfg.case_name = value;
      else if (key == "seeds") cfg.seeds = detail::parse_seed_list(value);
      else if (key == "alpha_scale") cfg.alpha_scale = std::stod(value);
      else if (key == "mu_scale") cfg.mu_scale = std::stod(value);
      else if (key == "beta") cfg.beta = std::stod(value);
      else if (key == "mu_odg") {
        cfg.mu_odg.clear();
        std::istringstream vs(value);
        std::string item;
        while (std::getline(vs, item, ',')) cfg.mu_odg.push_back(std::stod(item));
      } else if (key == "perslot") cfg.bench_perslot = detail::parse_bool(value, key, line_no);
      else if (key == "offline") cfg.bench_offline = detail::parse_bool(value, key, line_no);
      else if (key == "static") cfg.bench_static = detail::parse_bool(value, key, line_no);
      else if (key == "restart_delta") cfg.restart_delta = std::stol(value);
      else if (key == "output_dir") cfg.output_dir = value;
      else
        throw ConfigError("unknown key '" + key + "' on line " + std::to_string(line_no), key,
                          line_no);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("bad value for '" + key + "' on line " + std::to_string(line_no), key,
                        line_no);
    }
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_config(in);
}

/// One CSV row per (seed, slot). Cumulative columns (regret, fit, avg cost)
/// track the run up to that slot; regret, lambda and queue norms refer to the
/// saddle-point learner.
struct ResultRow {
  std::uint64_t seed = 0;
  long t = 0;
  double cost_mosp = 0.0;
  std::vector<double> cost_odg;
  double cost_perslot = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> cost_offline;
  double regret_d = std::numeric_limits<double>::quiet_NaN();
  double fit_d = 0.0;
  std::vector<double> fit_d_odg;
  double lambda_norm = 0.0;
  double queue_norm = 0.0;
  double avg_cost = 0.0;
};

/// Everything produced for one seed; rows are derived from this.
struct SeedRun {
  std::uint64_t seed = 0;
  std::uint64_t instance_seed = 0;
  bool ok = false;
  std::string error;
  CloudNetwork net;
  ScenarioStream stream;
  StepsizePair steps;
  std::vector<RoundTrace> mosp;
  std::vector<std::vector<RoundTrace>> odg;
  std::vector<double> losses_perslot;
  std::vector<Vec> perslot_solutions;
  std::vector<double> losses_offline;
  ProblemConstants constants;
  BoundCheckReport bounds;
  double trace_agreement = 0.0;
};

namespace detail {

inline ScenarioStream make_stream(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.case_name == "case1")
    return gen_case1(cfg.num_mapping, cfg.num_dc, cfg.horizon, seed);
  if (cfg.case_name == "case2")
    return gen_case2(cfg.num_mapping, cfg.num_dc, cfg.horizon, seed);
  ScenarioStream s = import_scenario_file(cfg.case_name.substr(7));
  if (s.num_mapping != cfg.num_mapping || s.num_dc != cfg.num_dc)
    throw ConfigError("scenario file dimensions do not match J/K", "case");
  if (s.horizon < cfg.horizon)
    throw ConfigError("scenario file is shorter than the configured horizon", "case");
  if (s.horizon > cfg.horizon) {
    s.prices = Mat(s.prices.topRows(cfg.horizon));
    s.loads = Mat(s.loads.topRows(cfg.horizon));
    s.horizon = cfg.horizon;
  }
  return s;
}

}  // namespace detail

/// Runs one seed end to end: instance generation (re-seeded until a strictly
/// feasible instance appears), the distributed run with its centralized
/// shadow, the baselines, benchmarks, and the always-on runtime checks.
inline SeedRun run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  SeedRun run;
  run.seed = seed;
  try {
    Mat incidence;
    for (std::uint64_t attempt = 0;; ++attempt) {
      if (attempt >= 32)
        throw InfeasibleProblem("no strictly feasible instance after 32 re-seeds");
      run.instance_seed = attempt == 0 ? seed : derive_seed(seed, attempt);
      run.net = gen_network(cfg.num_mapping, cfg.num_dc, run.instance_seed);
      run.stream = detail::make_stream(cfg, run.instance_seed);
      incidence = build_incidence(cfg.num_mapping, cfg.num_dc);
      const auto slater = slater_margin(incidence, run.stream.max_arrivals(), run.net.box());
      if (slater.margin > 0.0) break;
    }
    run.steps = cfg.steps();
    std::set<long> restarts;
    if (cfg.restart_delta) restarts = restart_schedule(cfg.horizon, *cfg.restart_delta);

    run.mosp = run_distributed_mosp(run.net, run.stream, run.steps, restarts);
    const auto centralized = run_centralized_mosp(run.net, run.stream, run.steps, restarts);
    run.trace_agreement = trace_deviation(run.mosp, centralized);
    if (run.trace_agreement > kTraceAgreementTol)
      throw std::runtime_error("distributed and centralized traces disagree by " +
                               format_double(run.trace_agreement));

    for (double mu : cfg.mu_odg) run.odg.push_back(run_odg(run.net, run.stream, mu));

    const auto problems = make_network_problems(run.net, run.stream);
    if (cfg.bench_perslot) {
      Vec warm;
      for (long t = 1; t <= cfg.horizon; ++t) {
        const auto report =
            per_slot_optimum(problems[t - 1].loss, problems[t - 1].constraint, run.net.box(),
                             kBenchmarkTol, kBenchmarkMaxIter, warm.size() ? &warm : nullptr,
                             /*check_feasibility=*/false);
        warm = report.multiplier;
        run.losses_perslot.push_back(problems[t - 1].loss.value(report.solution));
        run.perslot_solutions.push_back(report.solution);
      }
    }
    if (cfg.bench_offline) {
      const auto xs = offline_optimum(problems, run.net.box());
      for (long t = 1; t <= cfg.horizon; ++t)
        run.losses_offline.push_back(problems[t - 1].loss.value(xs[t - 1]));
    }

    // always-on runtime verification
    const auto drift = drift_check(run.mosp, run.steps.mu);
    if (!std::all_of(drift.begin(), drift.end(), [](bool b) { return b; }))
      throw std::runtime_error("dual drift inequality violated");
    const auto variation = constraint_variation(problems, run.net.box());
    run.constants = measure_network_constants(run.net, run.stream, incidence);
    run.constants.v_g_max = variation.v_g_max;
    run.bounds = bound_checks(run.mosp, run.constants, run.steps, restarts);
    if (!run.bounds.fit_bound_ok)
      throw std::runtime_error("fit exceeded its telescoped multiplier bound");
    if (run.bounds.dual_bound == CheckStatus::kFailed)
      throw std::runtime_error("multiplier norm exceeded its uniform bound");

    run.ok = true;
  } catch (const std::exception& e) {
    run.ok = false;
    run.error = e.what();
  }
  return run;
}

inline std::vector<ResultRow> rows_from_seed(const SeedRun& run) {
  std::vector<ResultRow> rows;
  if (!run.ok) return rows;
  const auto mosp_metrics = build_metric_series(run.mosp, run.losses_perslot);
  std::vector<std::vector<double>> odg_fit;
  for (const auto& trace : run.odg) {
    std::vector<Vec> gs;
    gs.reserve(trace.size());
    for (const auto& r : trace) gs.push_back(r.constraint);
    odg_fit.push_back(dynamic_fit(gs));
  }
  for (std::size_t i = 0; i < run.mosp.size(); ++i) {
    ResultRow row;
    row.seed = run.seed;
    row.t = run.mosp[i].t;
    row.cost_mosp = run.mosp[i].loss;
    for (const auto& trace : run.odg) row.cost_odg.push_back(trace[i].loss);
    if (!run.losses_perslot.empty()) row.cost_perslot = run.losses_perslot[i];
    if (!run.losses_offline.empty()) row.cost_offline = run.losses_offline[i];
    if (!mosp_metrics.regret_d.empty()) row.regret_d = mosp_metrics.regret_d[i];
    row.fit_d = mosp_metrics.fit_d[i];
    for (const auto& fit : odg_fit) row.fit_d_odg.push_back(fit[i]);
    row.lambda_norm = mosp_metrics.lambda_norm[i];
    row.queue_norm = mosp_metrics.queue_norm[i];
    row.avg_cost = mosp_metrics.avg_cost[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

inline double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

/// Per-algorithm medians across seeds of the final-slot summaries, computed
/// from the emitted rows only so an external reader can reproduce them.
struct Summary {
  std::vector<std::string> algorithms;
  std::vector<double> median_avg_cost;
  std::vector<double> median_regret;  // NaN where undefined
  std::vector<double> median_fit;
};

inline Summary summarize(const std::vector<ResultRow>& rows, const std::vector<double>& mu_odg) {
  Summary s;
  if (rows.empty()) return s;
  const long horizon = std::max_element(rows.begin(), rows.end(), [](auto& a, auto& b) {
                         return a.t < b.t;
                       })->t;
  std::map<std::uint64_t, const ResultRow*> final_rows;
  std::map<std::uint64_t, double> cum_perslot, cum_offline;
  std::map<std::uint64_t, std::vector<double>> cum_odg;
  for (const auto& row : rows) {
    if (row.t == horizon) final_rows[row.seed] = &row;
    cum_perslot[row.seed] += row.cost_perslot;
    if (row.cost_offline) cum_offline[row.seed] += *row.cost_offline;
    auto& c = cum_odg[row.seed];
    c.resize(row.cost_odg.size(), 0.0);
    for (std::size_t i = 0; i < row.cost_odg.size(); ++i) c[i] += row.cost_odg[i];
  }

  auto push = [&](const std::string& name, std::vector<double> avg, std::vector<double> reg,
                  std::vector<double> fit) {
    s.algorithms.push_back(name);
    s.median_avg_cost.push_back(median(std::move(avg)));
    s.median_regret.push_back(median(std::move(reg)));
    s.median_fit.push_back(median(std::move(fit)));
  };

  std::vector<double> mosp_avg, mosp_reg, mosp_fit;
  for (auto& [seed, row] : final_rows) {
    mosp_avg.push_back(row->avg_cost);
    mosp_reg.push_back(row->regret_d);
    mosp_fit.push_back(row->fit_d);
  }
  push("mosp", mosp_avg, mosp_reg, mosp_fit);

  for (std::size_t i = 0; i < mu_odg.size(); ++i) {
    std::vector<double> avg, reg, fit;
    for (auto& [seed, row] : final_rows) {
      avg.push_back(cum_odg[seed][i] / static_cast<double>(horizon));
      reg.push_back(cum_odg[seed][i] - cum_perslot[seed]);
      fit.push_back(row->fit_d_odg[i]);
    }
    push("odg_mu" + format_double(mu_odg[i]), avg, reg, fit);
  }

  {
    std::vector<double> avg;
    for (auto& [seed, total] : cum_perslot) avg.push_back(total / static_cast<double>(horizon));
    push("perslot", avg, {}, {});
  }
  if (!cum_offline.empty()) {
    std::vector<double> avg;
    for (auto& [seed, total] : cum_offline) avg.push_back(total / static_cast<double>(horizon));
    push("offline", avg, {}, {});
  }
  return s;
}

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<std::string> seed_errors;
  Summary summary;
  std::vector<double> mu_odg;
  bool has_offline = false;
};

/// Fans seeds out to a worker pool; rows are merged in seed order so output
/// is independent of scheduling.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult result;
  result.mu_odg = cfg.mu_odg;
  result.has_offline = cfg.bench_offline;

  const unsigned workers =
      std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                      static_cast<unsigned>(cfg.seeds.size())));
  std::vector<SeedRun> runs(cfg.seeds.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.push_back(std::async(std::launch::async, [&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= cfg.seeds.size()) return;
        runs[i] = run_seed(cfg, cfg.seeds[i]);
      }
    }));
  for (auto& f : pool) f.get();

  for (const auto& run : runs) {
    if (!run.ok) {
      result.seed_errors.push_back("seed " + std::to_string(run.seed) + ": " + run.error);
      continue;
    }
    auto rows = rows_from_seed(run);
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
  }
  result.summary = summarize(result.rows, cfg.mu_odg);
  return result;
}

/// Header plus one row per ResultRow, full-precision decimal. Column order
/// follows the ResultRow field order; the per-variant columns expand in the
/// order of the configured ODG stepsizes.
inline void emit_csv(const ExperimentResult& result, std::ostream& out) {
  out << "seed,t,cost_mosp";
  for (double mu : result.mu_odg) out << ",cost_odg_mu" << format_double(mu);
  out << ",cost_perslot";
  if (result.has_offline) out << ",cost_offline";
  out << ",regret_d,fit_d";
  for (double mu : result.mu_odg) out << ",fit_d_odg_mu" << format_double(mu);
  out << ",lambda_norm,queue_norm,avg_cost\n";
  for (const auto& row : result.rows) {
    out << row.seed << "," << row.t << "," << format_double(row.cost_mosp);
    for (double v : row.cost_odg) out << "," << format_double(v);
    out << "," << format_double(row.cost_perslot);
    if (result.has_offline)
      out << ","
          << format_double(row.cost_offline ? *row.cost_offline
                                            : std::numeric_limits<double>::quiet_NaN());
    out << "," << format_double(row.regret_d) << "," << format_double(row.fit_d);
    for (double v : row.fit_d_odg) out << "," << format_double(v);
    out << "," << format_double(row.lambda_norm) << "," << format_double(row.queue_norm) << ","
        << format_double(row.avg_cost) << "\n";
  }
}

inline void write_summary(const Summary& summary, const std::vector<std::string>& errors,
                          std::ostream& out) {
  out << "algorithm,median_avg_cost,median_regret_d,median_fit_d\n";
  for (std::size_t i = 0; i < summary.algorithms.size(); ++i)
    out << summary.algorithms[i] << "," << format_double(summary.median_avg_cost[i]) << ","
        << format_double(summary.median_regret[i]) << "," << format_double(summary.median_fit[i])
        << "\n";
  for (const auto& e : errors) out << "# failed: " << e << "\n";
}

// ---------------------------------------------------------------------------
// horizon sweep

struct SweepPoint {
  long horizon = 0;
  double median_regret = 0.0;
  double median_fit = 0.0;
};

struct SweepReport {
  std::vector<SweepPoint> points;
  double slope_regret = std::numeric_limits<double>::quiet_NaN();
  double slope_fit = std::numeric_limits<double>::quiet_NaN();
  bool slopes_defined = false;
  bool regret_sublinear = true;  // slope <= 0.97
  bool fit_sublinear = true;     // slope <= 2/3 + 0.15
};

inline constexpr double kRegretSlopeLimit = 0.97;
inline constexpr double kFitSlopeLimit = 2.0 / 3.0 + 0.15;
// Regret can be negative (the learner may beat the per-slot benchmark) and
// fit can be exactly zero; values are floored before taking logs, which only
// makes the growth estimate conservative in the sublinear direction.
inline constexpr double kSlopeFloor = 1.0;

/// Re-runs the experiment per horizon with stepsizes recomputed from the
/// schedule, reports median final regret/fit per horizon and their fitted
/// log-log slopes. The sublinearity flags apply the Case-2 growth limits.
inline SweepReport horizon_sweep(const ExperimentConfig& base, const std::vector<long>& horizons) {
  SweepReport report;
  for (std::size_t i = 1; i < horizons.size(); ++i)
    if (horizons[i] <= horizons[i - 1])
      throw std::invalid_argument("horizons must be strictly increasing");
  for (long horizon : horizons) {
    ExperimentConfig cfg = base;
    cfg.horizon = horizon;
    cfg.bench_perslot = true;
    cfg.bench_offline = false;
    const auto result = run_experiment(cfg);
    std::vector<double> regs, fits;
    for (const auto& row : result.rows)
      if (row.t == horizon) {
        regs.push_back(row.regret_d);
        fits.push_back(row.fit_d);
      }
    report.points.push_back({horizon, median(std::move(regs)), median(std::move(fits))});
  }
  if (report.points.size() >= 2) {
    auto slope = [&](auto value_of) {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      const double n = static_cast<double>(report.points.size());
      for (const auto& p : report.points) {
        const double x = std::log(static_cast<double>(p.horizon));
        const double y = std::log(std::max(value_of(p), kSlopeFloor));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
      }
      return (n * sxy - sx * sy) / (n * sxx - sx * sx);
    };
    report.slope_regret = slope([](const SweepPoint& p) { return p.median_regret; });
    report.slope_fit = slope([](const SweepPoint& p) { return p.median_fit; });
    report.slopes_defined = true;
    report.regret_sublinear = report.slope_regret <= kRegretSlopeLimit;
    report.fit_sublinear = report.slope_fit <= kFitSlopeLimit;
  }
  return report;
}

}  // namespace mosp
