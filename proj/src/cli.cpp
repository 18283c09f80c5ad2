#include "qsmooth/cli.hpp"

#include <algorithm>
#include <functional>
#include <optional>
#include <ostream>
#include <thread>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "qsmooth/config.hpp"
#include "qsmooth/errors.hpp"
#include "qsmooth/report_io.hpp"

namespace qsmooth {

namespace {

// Flags shared by every subcommand: one per config key plus output control.
struct CommonOptions {
  std::string config_path;
  std::map<std::string, std::string> flag_values;
  std::vector<std::pair<std::string, CLI::Option*>> key_options;
  std::string out_path;
  std::string format;
  std::string timestamp;
  int threads{1};

  void attach(CLI::App& app, bool experiment) {
    app.add_option("--config", config_path, "key = value settings file");
    for (const ConfigKey& key : config_keys()) {
      std::string flag = "--" + std::string(key.name);
      std::replace(flag.begin(), flag.end(), '_', '-');
      auto& slot = flag_values[std::string(key.name)];
      CLI::Option* opt = app.add_option(flag, slot, std::string(key.description))
                             ->default_str(std::string(key.default_value));
      key_options.emplace_back(std::string(key.name), opt);
    }
    app.add_option("--out", out_path, "write results to this file");
    app.add_option("--format", format, "csv | json (default: from --out extension)")
        ->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--timestamp", timestamp, "timestamp recorded in the JSON manifest");
    if (experiment) app.add_option("--threads", threads, "worker threads for trials (0 = all cores)");
  }

  KeyValues merged() const {
    KeyValues values;
    if (!config_path.empty()) values = read_key_value_file(config_path);
    for (const auto& [name, opt] : key_options)
      if (opt->count() > 0) values[name] = flag_values.at(name);
    return values;
  }

  int worker_count() const {
    if (threads > 0) return threads;
    return std::max(1u, std::thread::hardware_concurrency());
  }

  void finish(RunManifest manifest, std::ostream& out) const {
    if (!timestamp.empty()) manifest.timestamp = timestamp;
    check_finite(manifest);
    if (out_path.empty()) return;
    std::optional<ResultFormat> fmt_choice;
    if (format == "csv") fmt_choice = ResultFormat::csv;
    if (format == "json") fmt_choice = ResultFormat::json;
    emit_results(manifest, format_for_path(out_path, fmt_choice), out_path);
    out << "wrote " << out_path << '\n';
  }
};

RunManifest base_manifest(std::string command, const ExperimentConfig& config) {
  RunManifest m;
  m.tool_version = std::string(tool_version());
  m.command = std::move(command);
  m.master_seed = config.master_seed;
  m.config = config_to_values(config, true);
  m.resolved = config_to_values(config, false);
  return m;
}

void run_analytic(const CommonOptions& opts, std::ostream& out) {
  const ExperimentConfig c = config_from_values(opts.merged());
  const ProcessParams& p = c.params;
  const Scheme scheme = c.scheme;
  const double chi = c.estimator.chi_minus;

  const auto best_f = optimal_chi(p, EstimatorMode::filtered, scheme);
  const auto best_s = optimal_chi(p, EstimatorMode::smoothed, scheme);
  const auto ratios = improvement_ratios(p);
  const std::vector<std::pair<std::string, double>> rows{
      {"kappa", p.kappa},
      {"lambda", p.lambda},
      {"flux", p.flux},
      {"effective_flux", effective_flux(p, scheme)},
      {"chi", chi},
      {"filtered_mse", filtered_mse(p, chi, scheme)},
      {"correlation", forward_backward_correlation(p, c.estimator.chi_minus, c.estimator.chi_plus)},
      {"smoothed_mse", smoothed_mse(p, chi, scheme)},
      {"combined_mse", combined_mse(TheoryPoint{p, c.estimator.chi_minus, c.estimator.chi_plus, c.estimator.w_minus,
                                                c.estimator.w_plus, scheme})},
      {"optimal_chi_filtered", best_f.chi_star},
      {"optimal_mse_filtered", best_f.mse_star},
      {"optimal_chi_smoothed", best_s.chi_star},
      {"optimal_mse_smoothed", best_s.mse_star},
      {"optimal_beta", optimal_beta(chi, p.flux)},
      {"sql_mse", sql_mse(p)},
      {"xi", xi(p)},
      {"smoothing_gain", ratios.smoothing_gain},
      {"adaptive_gain", ratios.adaptive_gain},
      {"total_gain_limit", ratios.total_gain_limit},
      {"total_gain_exact", ratios.total_gain_exact},
  };
  out << "scheme " << to_string(scheme) << '\n';
  for (const auto& [name, value] : rows) out << fmt::format("{:<22} {:.6g}\n", name, value);

  RunManifest m = base_manifest("analytic", c);
  m.analytic = rows;
  opts.finish(std::move(m), out);
}

void run_simulate(const CommonOptions& opts, std::ostream& out) {
  const ExperimentConfig c = config_from_values(opts.merged());
  const VarianceReport report = run_ensemble(c, opts.worker_count());
  print_report_table(out, report.records);
  RunManifest m = base_manifest("simulate", c);
  m.results = report.records;
  opts.finish(std::move(m), out);
}

void run_sweep(const CommonOptions& opts, SweepAxis axis, std::vector<double> values, std::ostream& out) {
  const ExperimentConfig c = config_from_values(opts.merged());
  if (values.empty()) {
    if (axis == SweepAxis::chi) {
      const double base = limit_optimal_chi(c.params, c.scheme);
      for (double f : {0.3, 0.6, 1.0, 1.8, 3.0}) values.push_back(f * base);
    } else {
      for (double f : {1.0, 2.0, 5.0, 10.0}) values.push_back(f * 1.35e6);
    }
  }
  const auto reports = sweep(c, axis, values, opts.worker_count());
  RunManifest m = base_manifest(axis == SweepAxis::chi ? "sweep-chi" : "sweep-flux", c);
  m.sweep_values = values;
  for (const auto& r : reports) m.results.insert(m.results.end(), r.records.begin(), r.records.end());
  print_report_table(out, m.results);
  opts.finish(std::move(m), out);
}

void run_compare(const CommonOptions& opts, std::ostream& out) {
  KeyValues values = opts.merged();
  std::vector<VarianceReport> reports;
  std::optional<ExperimentConfig> first;
  for (const char* scheme : {"adaptive", "dual_homodyne"}) {
    values["scheme"] = scheme;
    const ExperimentConfig c = config_from_values(values);
    if (!first) first = c;
    reports.push_back(run_ensemble(c, opts.worker_count()));
  }
  const SchemeComparison cmp = compare_schemes(reports);

  RunManifest m = base_manifest("compare", *first);
  for (const auto& r : reports) m.results.insert(m.results.end(), r.records.begin(), r.records.end());
  m.comparison = cmp;
  print_report_table(out, m.results);
  const auto line = [&](std::string_view name, const GainRatio& g) {
    out << fmt::format("{:<26} {:.6g} +- {:.3g}\n", name, g.value, g.stderr_);
  };
  line("smoothing_gain_mc", cmp.smoothing_gain_mc);
  line("smoothing_gain_dual_mc", cmp.smoothing_gain_dual_mc);
  line("adaptive_gain_mc", cmp.adaptive_gain_mc);
  line("adaptive_gain_smoothed_mc", cmp.adaptive_gain_smoothed_mc);
  line("total_gain_mc", cmp.total_gain_mc);
  opts.finish(std::move(m), out);
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Monte Carlo and closed-form analysis of adaptive phase filtering and smoothing", "qsmooth"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tool_version()));

  CommonOptions analytic_opts, simulate_opts, sweep_chi_opts, sweep_flux_opts, compare_opts;
  std::vector<double> chi_values, flux_values;

  auto* analytic = app.add_subcommand("analytic", "closed-form variances, optima and gains");
  analytic_opts.attach(*analytic, false);
  auto* simulate = app.add_subcommand("simulate", "run one Monte Carlo ensemble");
  simulate_opts.attach(*simulate, true);
  auto* sweep_chi = app.add_subcommand("sweep-chi", "ensembles over averaging rates");
  sweep_chi_opts.attach(*sweep_chi, true);
  sweep_chi->add_option("--values", chi_values, "chi values [1/s], comma separated")->delimiter(',');
  auto* sweep_flux = app.add_subcommand("sweep-flux", "ensembles over photon flux at optimal chi");
  sweep_flux_opts.attach(*sweep_flux, true);
  sweep_flux->add_option("--values", flux_values, "flux values [1/s], comma separated")->delimiter(',');
  auto* compare = app.add_subcommand("compare", "filtered/smoothed x adaptive/dual comparison");
  compare_opts.attach(*compare, true);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitParameterError;
  }

  try {
    if (analytic->parsed()) run_analytic(analytic_opts, out);
    if (simulate->parsed()) run_simulate(simulate_opts, out);
    if (sweep_chi->parsed()) run_sweep(sweep_chi_opts, SweepAxis::chi, chi_values, out);
    if (sweep_flux->parsed()) run_sweep(sweep_flux_opts, SweepAxis::flux, flux_values, out);
    if (compare->parsed()) run_compare(compare_opts, out);
  } catch (const StatisticsError& e) {
    err << "statistics error: " << e.what() << '\n';
    return kExitStatisticsError;
  } catch (const ParameterError& e) {
    err << "parameter error: " << e.what() << '\n';
    return kExitParameterError;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitParameterError;
  } catch (const nlohmann::json::exception& e) {
    err << "json error: " << e.what() << '\n';
    return kExitParameterError;
  }
  return kExitOk;
}

}  // namespace qsmooth
