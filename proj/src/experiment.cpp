#include "qsmooth/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

namespace qsmooth {

double ExperimentConfig::resolved_beta() const {
  if (beta_policy.fixed) return *beta_policy.fixed;
  return optimal_beta(std::max(estimator.chi_minus, estimator.chi_plus), params.flux);
}

ExperimentConfig ExperimentConfig::resolved() const {
  ExperimentConfig out = *this;
  const double beta = resolved_beta();
  if (auto_warmup) {
    double warmup = scheme == Scheme::adaptive ? 5.0 / beta : 0.0;
    if (init.kind == OuInit::Kind::fixed && params.lambda > 0.0) warmup = std::max(warmup, 3.0 / params.lambda);
    out.grid.warmup = warmup;
    out.auto_warmup = false;
  }
  if (auto_edge_discard) {
    double edge = 5.0 / estimator.chi_min();
    if (scheme == Scheme::adaptive) edge = std::max(edge, 5.0 / beta);
    out.estimator.edge_discard = edge;
    out.auto_edge_discard = false;
  }
  return out;
}

void ExperimentConfig::validate() const {
  const ExperimentConfig r = resolved();
  r.params.validate();
  r.grid.validate();
  r.estimator.validate_for_statistics();
  if (trials < 1) throw ParameterError("trials must be >= 1");
  if (!(efficiency > 0.0 && efficiency <= 1.0)) throw ParameterError("efficiency must lie in (0, 1]");
  if (scheme == Scheme::dual_homodyne && estimator.source == AveragingSource::phihat)
    throw ParameterError("source = phihat requires scheme = adaptive");
  if (!(r.estimator.chi_minus * r.grid.dt < 0.5) || !(r.estimator.chi_plus * r.grid.dt < 0.5))
    throw ConfigurationError("chi * dt must be < 0.5");
  if (scheme == Scheme::adaptive) {
    FeedbackParams fb{r.resolved_beta(), omega0, 0.0, efficiency};
    fb.validate(r.grid);
  }
  if (!(2.0 * r.estimator.edge_discard < r.grid.duration - r.grid.warmup))
    throw ParameterError("2 * edge_discard must be < duration - warmup");
}

namespace {

NoiseStream stream_for(const ExperimentConfig& c, std::uint32_t trial, NoiseRole role, bool on) {
  return NoiseStream{c.master_seed, trial, role, on ? 1.0 : 0.0};
}

}  // namespace

std::vector<TrialResult> run_trial_probes(const ExperimentConfig& config, std::uint32_t trial_index,
                                          std::span<const EstimatorParams> probes) {
  const ExperimentConfig c = config.resolved();
  const SimGrid& grid = c.grid;

  const Series<double> phi =
      simulate_ou(c.params, grid, stream_for(c, trial_index, NoiseRole::phase_noise, c.noise.phase), c.init);

  Trajectory traj;
  if (c.scheme == Scheme::adaptive) {
    const FeedbackParams fb{c.resolved_beta(), c.omega0, 0.0, c.efficiency};
    traj = run_adaptive_loop(phi, c.params, fb, grid,
                             stream_for(c, trial_index, NoiseRole::measurement_noise, c.noise.measurement));
  } else {
    traj = run_dual_homodyne(phi, c.params, grid,
                             {stream_for(c, trial_index, NoiseRole::measurement_noise, c.noise.measurement),
                              stream_for(c, trial_index, NoiseRole::measurement_noise_2, c.noise.measurement)},
                             c.dual_mode, c.efficiency);
  }

  std::vector<TrialResult> out;
  out.reserve(probes.size());
  for (const EstimatorParams& probe : probes) {
    probe.validate_for_statistics();
    if (probe.source == AveragingSource::phihat && c.scheme != Scheme::adaptive)
      throw ParameterError("source = phihat requires scheme = adaptive");
    const Series<double>& source = probe.source == AveragingSource::theta ? traj.theta : traj.phihat;
    const EstimateSeries est = estimate_phase(source, grid, probe);
    const auto truth = phi.tail(est.forward.size());
    out.push_back({mean_square_error(est.forward, truth, est.grid, probe.edge_discard),
                   mean_square_error(est.smoothed, truth, est.grid, probe.edge_discard),
                   mean_square_error(est.backward, truth, est.grid, probe.edge_discard)});
  }
  return out;
}

TrialResult run_trial(const ExperimentConfig& config, std::uint32_t trial_index) {
  config.validate();
  const ExperimentConfig c = config.resolved();
  const EstimatorParams probe = c.estimator;
  return run_trial_probes(c, trial_index, std::span<const EstimatorParams>(&probe, 1)).front();
}

EnsembleSamples run_ensemble_samples(const ExperimentConfig& config, std::span<const EstimatorParams> probes,
                                     int threads) {
  config.validate();
  const ExperimentConfig c = config.resolved();
  const auto n = static_cast<std::size_t>(c.trials);
  EnsembleSamples out;
  out.trials.resize(n);
  std::vector<std::exception_ptr> errors(n);

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out.trials[i] = run_trial_probes(c, static_cast<std::uint32_t>(i), probes);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const auto workers = static_cast<std::size_t>(std::clamp(threads, 1, std::max(1, c.trials)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

const ConditionRecord* VarianceReport::find(Scheme scheme, EstimatorMode mode) const {
  for (const auto& r : records)
    if (r.scheme == scheme && r.mode == mode) return &r;
  return nullptr;
}

MeanStderr mean_and_stderr(std::span<const double> samples) {
  if (samples.empty()) throw StatisticsError("no samples");
  const Eigen::Map<const Eigen::VectorXd> x(samples.data(), static_cast<Eigen::Index>(samples.size()));
  const double mean = x.mean();
  if (samples.size() < 2) return {mean, 0.0};
  const double var = (x.array() - mean).square().sum() / static_cast<double>(samples.size() - 1);
  return {mean, std::sqrt(var / static_cast<double>(samples.size()))};
}

namespace {

constexpr int kMinTrialsForStderr = 30;

ConditionRecord summarize(const ExperimentConfig& c, const EnsembleSamples& samples, std::size_t probe_index,
                          const EstimatorParams& probe, EstimatorMode mode) {
  std::vector<double> values;
  values.reserve(samples.trials.size());
  for (const auto& t : samples.trials)
    values.push_back(mode == EstimatorMode::filtered ? t[probe_index].filtered_mse : t[probe_index].smoothed_mse);
  const MeanStderr ms = mean_and_stderr(values);

  const ProcessParams theory_params = c.params.with_flux_scaled(c.efficiency);
  ConditionRecord r;
  r.scheme = c.scheme;
  r.mode = mode;
  r.chi = probe.chi_minus;
  r.kappa = c.params.kappa;
  r.lambda = c.params.lambda;
  r.flux = c.params.flux;
  r.trials = c.trials;
  r.mc_mse = ms.mean;
  r.mc_stderr = ms.stderr_;
  if (mode == EstimatorMode::filtered) {
    r.chi_plus = probe.chi_minus;
    r.w_minus = 1.0;
    r.w_plus = 0.0;
    r.analytic_mse = filtered_mse(theory_params, probe.chi_minus, c.scheme);
  } else {
    r.chi_plus = probe.chi_plus;
    r.w_minus = probe.w_minus;
    r.w_plus = probe.w_plus;
    r.analytic_mse =
        combined_mse(TheoryPoint{theory_params, probe.chi_minus, probe.chi_plus, probe.w_minus, probe.w_plus, c.scheme});
  }
  if (r.mc_stderr > 0.0) {
    r.z_score = (r.mc_mse - r.analytic_mse) / r.mc_stderr;
  } else if (r.mc_mse == r.analytic_mse) {
    r.z_score = 0.0;
  } else {
    throw StatisticsError("zero Monte Carlo standard error: z-score undefined");
  }
  if (!std::isfinite(r.z_score) || !std::isfinite(r.mc_mse)) throw StatisticsError("non-finite ensemble statistic");
  return r;
}

void require_stderr_trials(const ExperimentConfig& c) {
  if (c.trials < kMinTrialsForStderr) throw StatisticsError("at least 30 trials are needed for a standard error");
}

}  // namespace

VarianceReport run_ensemble(const ExperimentConfig& config, int threads) {
  config.validate();
  require_stderr_trials(config);
  const ExperimentConfig c = config.resolved();
  const EstimatorParams probe = c.estimator;
  const EnsembleSamples samples = run_ensemble_samples(c, std::span<const EstimatorParams>(&probe, 1), threads);
  return {{summarize(c, samples, 0, probe, EstimatorMode::filtered),
           summarize(c, samples, 0, probe, EstimatorMode::smoothed)}};
}

std::vector<VarianceReport> sweep(const ExperimentConfig& config, SweepAxis axis, std::span<const double> values,
                                  int threads) {
  if (values.empty()) throw ParameterError("sweep needs at least one value");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || !(values[i] > 0.0)) throw ParameterError("sweep values must be positive");
    if (i > 0 && !(values[i] > values[i - 1])) throw ParameterError("sweep values must be sorted ascending");
  }

  std::vector<VarianceReport> reports;
  reports.reserve(values.size());
  for (const double v : values) {
    ExperimentConfig point = config;
    if (axis == SweepAxis::chi) {
      point.estimator.chi_minus = v;
      point.estimator.chi_plus = v;
      reports.push_back(run_ensemble(point, threads));
      continue;
    }

    point.params.flux = v;
    const ProcessParams theory_params = point.params.with_flux_scaled(point.efficiency);
    const ChiOptimum best_f = optimal_chi(theory_params, EstimatorMode::filtered, point.scheme);
    const ChiOptimum best_s = optimal_chi(theory_params, EstimatorMode::smoothed, point.scheme);
    if (!best_f.interior) throw ConfigurationError("filtered optimum lies at chi -> 0; cannot sweep");
    point.estimator.chi_minus = best_s.chi_star;
    point.estimator.chi_plus = best_s.chi_star;
    point.estimator.w_minus = 0.5;
    point.estimator.w_plus = 0.5;
    point.validate();
    require_stderr_trials(point);
    const ExperimentConfig c = point.resolved();

    EstimatorParams filt = c.estimator;
    filt.chi_minus = best_f.chi_star;
    filt.chi_plus = best_f.chi_star;
    if (config.auto_edge_discard) {
      filt.edge_discard = 5.0 / best_f.chi_star;
      if (c.scheme == Scheme::adaptive) filt.edge_discard = std::max(filt.edge_discard, 5.0 / c.resolved_beta());
    }
    if (!(best_f.chi_star * c.grid.dt < 0.5)) throw ConfigurationError("chi * dt must be < 0.5");
    const std::vector<EstimatorParams> probes{filt, c.estimator};
    const EnsembleSamples samples = run_ensemble_samples(c, probes, threads);
    reports.push_back({{summarize(c, samples, 0, filt, EstimatorMode::filtered),
                        summarize(c, samples, 1, c.estimator, EstimatorMode::smoothed)}});
  }
  return reports;
}

namespace {

GainRatio ratio(double num, double num_se, double den, double den_se) {
  const double r = num / den;
  return {r, std::abs(r) * std::hypot(num_se / num, den_se / den)};
}

}  // namespace

SchemeComparison compare_schemes(std::span<const VarianceReport> reports) {
  const auto unique = [&](Scheme scheme, EstimatorMode mode) {
    const ConditionRecord* found = nullptr;
    for (const auto& rep : reports) {
      for (const auto& r : rep.records) {
        if (r.scheme != scheme || r.mode != mode) continue;
        if (found) throw ParameterError("unmatched conditions: duplicate scheme/mode record");
        found = &r;
      }
    }
    if (!found) throw ParameterError("unmatched conditions: missing scheme/mode record");
    return *found;
  };
  const ConditionRecord af = unique(Scheme::adaptive, EstimatorMode::filtered);
  const ConditionRecord as = unique(Scheme::adaptive, EstimatorMode::smoothed);
  const ConditionRecord df = unique(Scheme::dual_homodyne, EstimatorMode::filtered);
  const ConditionRecord ds = unique(Scheme::dual_homodyne, EstimatorMode::smoothed);
  if (af.kappa != df.kappa || af.lambda != df.lambda || af.flux != df.flux || af.kappa != as.kappa ||
      af.flux != as.flux || df.flux != ds.flux)
    throw ParameterError("unmatched conditions: process parameters differ between records");

  SchemeComparison out;
  out.smoothing_gain_mc = ratio(af.mc_mse, af.mc_stderr, as.mc_mse, as.mc_stderr);
  out.smoothing_gain_dual_mc = ratio(df.mc_mse, df.mc_stderr, ds.mc_mse, ds.mc_stderr);
  out.adaptive_gain_mc = ratio(df.mc_mse, df.mc_stderr, af.mc_mse, af.mc_stderr);
  out.adaptive_gain_smoothed_mc = ratio(ds.mc_mse, ds.mc_stderr, as.mc_mse, as.mc_stderr);
  const double sql = sql_mse(ProcessParams{as.kappa, as.lambda, as.flux});
  out.total_gain_mc = ratio(sql, 0.0, as.mc_mse, as.mc_stderr);
  return out;
}

}  // namespace qsmooth
