#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "mosp/mosp.hpp"

namespace {

constexpr int kExitValidationFailure = 1;
constexpr int kExitConfigError = 2;

struct CommonFlags {
  std::string config_path;
  std::optional<int> num_mapping, num_dc;
  std::optional<long> horizon;
  std::optional<std::string> case_name, seeds, output_dir;
  std::optional<double> alpha_scale, mu_scale, beta;
  std::optional<std::string> mu_odg;
  std::optional<bool> perslot, offline, bench_static;
  std::optional<long> restart_delta;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("-c,--config", flags.config_path, "key=value config file");
  cmd->add_option("-J", flags.num_mapping, "mapping nodes");
  cmd->add_option("-K", flags.num_dc, "data centers");
  cmd->add_option("-T", flags.horizon, "time horizon");
  cmd->add_option("--case", flags.case_name, "case1 | case2 | custom:<scenario path>");
  cmd->add_option("--seeds", flags.seeds, "comma list or a..b range");
  cmd->add_option("--alpha-scale", flags.alpha_scale, "primal stepsize scale");
  cmd->add_option("--mu-scale", flags.mu_scale, "dual stepsize scale");
  cmd->add_option("--beta", flags.beta, "stepsize exponent parameter in [0,1)");
  cmd->add_option("--mu-odg", flags.mu_odg, "comma list of ODG dual stepsizes");
  cmd->add_option("--perslot", flags.perslot, "per-slot benchmark on/off");
  cmd->add_option("--offline", flags.offline, "offline benchmark on/off");
  cmd->add_option("--static", flags.bench_static, "static benchmark on/off");
  cmd->add_option("--restart-delta", flags.restart_delta, "dual restart period");
  cmd->add_option("-o,--output-dir", flags.output_dir, "output directory");
}

// config file first, then flags override
mosp::ExperimentConfig build_config(const CommonFlags& flags) {
  mosp::ExperimentConfig cfg;
  if (!flags.config_path.empty()) cfg = mosp::parse_config_file(flags.config_path);
  if (flags.num_mapping) cfg.num_mapping = *flags.num_mapping;
  if (flags.num_dc) cfg.num_dc = *flags.num_dc;
  if (flags.horizon) cfg.horizon = *flags.horizon;
  if (flags.case_name) cfg.case_name = *flags.case_name;
  if (flags.seeds) cfg.seeds = mosp::detail::parse_seed_list(*flags.seeds);
  if (flags.alpha_scale) cfg.alpha_scale = *flags.alpha_scale;
  if (flags.mu_scale) cfg.mu_scale = *flags.mu_scale;
  if (flags.beta) cfg.beta = *flags.beta;
  if (flags.mu_odg) {
    cfg.mu_odg.clear();
    std::istringstream in(*flags.mu_odg);
    std::string item;
    while (std::getline(in, item, ',')) cfg.mu_odg.push_back(std::stod(item));
  }
  if (flags.perslot) cfg.bench_perslot = *flags.perslot;
  if (flags.offline) cfg.bench_offline = *flags.offline;
  if (flags.bench_static) cfg.bench_static = *flags.bench_static;
  if (flags.restart_delta) cfg.restart_delta = *flags.restart_delta;
  if (flags.output_dir) cfg.output_dir = *flags.output_dir;
  cfg.validate();
  return cfg;
}

int cmd_run(const CommonFlags& flags) {
  const auto cfg = build_config(flags);
  const auto result = mosp::run_experiment(cfg);

  std::filesystem::create_directories(cfg.output_dir);
  const auto csv_path = std::filesystem::path(cfg.output_dir) / "results.csv";
  const auto summary_path = std::filesystem::path(cfg.output_dir) / "summary.txt";
  {
    std::ofstream csv(csv_path);
    mosp::emit_csv(result, csv);
  }
  {
    std::ofstream summary(summary_path);
    mosp::write_summary(result.summary, result.seed_errors, summary);
  }
  mosp::write_summary(result.summary, result.seed_errors, std::cout);
  std::cout << "rows: " << result.rows.size() << " -> " << csv_path.string() << "\n";
  if (!result.seed_errors.empty()) {
    std::cerr << result.seed_errors.size() << " seed(s) failed\n";
    return kExitValidationFailure;
  }
  return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::vector<long>& horizons) {
  const auto cfg = build_config(flags);
  const auto report = mosp::horizon_sweep(cfg, horizons);
  std::cout << "T,median_regret_d,median_fit_d\n";
  for (const auto& p : report.points)
    std::cout << p.horizon << "," << mosp::format_double(p.median_regret) << ","
              << mosp::format_double(p.median_fit) << "\n";
  if (!report.slopes_defined) {
    std::cout << "slopes: undefined (need at least two horizons)\n";
    return 0;
  }
  std::cout << "log-log slope regret: " << mosp::format_double(report.slope_regret) << " (limit "
            << mosp::format_double(mosp::kRegretSlopeLimit) << ")\n";
  std::cout << "log-log slope fit:    " << mosp::format_double(report.slope_fit) << " (limit "
            << mosp::format_double(mosp::kFitSlopeLimit) << ")\n";
  if (cfg.case_name == "case2" && (!report.regret_sublinear || !report.fit_sublinear)) {
    std::cerr << "sub-linearity assertion failed\n";
    return kExitValidationFailure;
  }
  return 0;
}

int cmd_validate(bool fast, std::uint64_t seed) {
  mosp::ValidationOptions opts;
  opts.include_trend = !fast;
  opts.seed = seed;
  const auto report = mosp::run_validation(opts);
  mosp::print_validation(report, std::cout);
  return report.all_ok() ? 0 : kExitValidationFailure;
}

int cmd_export_scenario(const std::string& case_name, int num_mapping, int num_dc, long horizon,
                        std::uint64_t seed, const std::string& out_path,
                        const std::string& network_out) {
  mosp::ScenarioStream stream;
  if (case_name == "case1")
    stream = mosp::gen_case1(num_mapping, num_dc, horizon, seed);
  else if (case_name == "case2")
    stream = mosp::gen_case2(num_mapping, num_dc, horizon, seed);
  else
    throw mosp::ConfigError("export-scenario supports case1 or case2", "case");
  mosp::export_scenario_file(stream, out_path);
  std::cout << "wrote " << out_path << "\n";
  if (!network_out.empty()) {
    std::ofstream out(network_out);
    mosp::export_network(mosp::gen_network(num_mapping, num_dc, seed), out);
    std::cout << "wrote " << network_out << "\n";
  }
  return 0;
}

int cmd_import_scenario(const std::string& path) {
  const auto stream = mosp::import_scenario_file(path);
  std::cout << "scenario: J=" << stream.num_mapping << " K=" << stream.num_dc
            << " T=" << stream.horizon << " seed=" << stream.seed << "\n";
  std::cout << "price range: [" << mosp::format_double(stream.prices.minCoeff()) << ", "
            << mosp::format_double(stream.prices.maxCoeff()) << "]\n";
  std::cout << "load range:  [" << mosp::format_double(stream.loads.minCoeff()) << ", "
            << mosp::format_double(stream.loads.maxCoeff()) << "]\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"online saddle-point resource allocation harness"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  auto* run = app.add_subcommand("run", "run the experiment and write CSV + summary");
  add_common_flags(run, run_flags);

  CommonFlags sweep_flags;
  std::vector<long> horizons = {250, 500, 1000};
  auto* sweep = app.add_subcommand("sweep", "horizon sweep with rescaled stepsizes");
  add_common_flags(sweep, sweep_flags);
  sweep->add_option("--horizons", horizons, "increasing horizons");

  bool fast = false;
  std::uint64_t validate_seed = 1;
  auto* validate = app.add_subcommand("validate", "run the invariant suite");
  validate->add_flag("--fast", fast, "skip the multi-horizon growth checks");
  validate->add_option("--seed", validate_seed, "base seed for the suite");

  std::string exp_case = "case1", exp_out = "scenario.txt", exp_net_out;
  int exp_j = 10, exp_k = 10;
  long exp_t = 500;
  std::uint64_t exp_seed = 1;
  auto* exp = app.add_subcommand("export-scenario", "write a generated scenario to a file");
  exp->add_option("--case", exp_case, "case1 | case2");
  exp->add_option("-J", exp_j, "mapping nodes");
  exp->add_option("-K", exp_k, "data centers");
  exp->add_option("-T", exp_t, "time horizon");
  exp->add_option("--seed", exp_seed, "seed");
  exp->add_option("-o,--out", exp_out, "scenario output path");
  exp->add_option("--network-out", exp_net_out, "also write the generated network");

  std::string imp_path;
  auto* imp = app.add_subcommand("import-scenario", "parse and describe a scenario file");
  imp->add_option("path", imp_path, "scenario file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_flags);
    if (sweep->parsed()) return cmd_sweep(sweep_flags, horizons);
    if (validate->parsed()) return cmd_validate(fast, validate_seed);
    if (exp->parsed())
      return cmd_export_scenario(exp_case, exp_j, exp_k, exp_t, exp_seed, exp_out, exp_net_out);
    if (imp->parsed()) return cmd_import_scenario(imp_path);
  } catch (const mosp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidationFailure;
  }
  return 0;
}
