#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qsmooth/analytics.hpp"
#include "qsmooth/detection.hpp"
#include "qsmooth/estimators.hpp"
#include "qsmooth/scheme.hpp"
#include "qsmooth/stochastic.hpp"

namespace qsmooth {

// Feedback gain: sqrt(8 chi N) from the estimator rate, or a fixed value.
struct BetaPolicy {
  std::optional<double> fixed;

  bool is_auto() const { return !fixed.has_value(); }
  static BetaPolicy automatic() { return {}; }
  static BetaPolicy fixed_at(double beta) { return {beta}; }
};

// Switching a source off replaces it with a silent stream.
struct NoiseSwitches {
  bool phase{true};
  bool measurement{true};
};

// One Monte Carlo experiment. Warmup and edge discard are derived from the
// rates unless set explicitly (see resolved()).
struct ExperimentConfig {
  ProcessParams params{1.5868e4, 6.1451e4, 1.3499e6};
  SimGrid grid{2e-8, 1e-2, 0.0, 1};
  Scheme scheme{Scheme::adaptive};
  DualMode dual_mode{DualMode::linearized};
  EstimatorParams estimator{EstimatorParams::symmetric(2.0 * std::sqrt(1.5868e4 * 1.3499e6))};
  BetaPolicy beta_policy{};
  double omega0{0.0};
  double efficiency{1.0};
  int trials{200};
  std::uint64_t master_seed{20100401};
  OuInit init{OuInit::stationary()};
  NoiseSwitches noise{};
  bool auto_warmup{true};
  bool auto_edge_discard{true};

  // sqrt(8 * max(chi_minus, chi_plus) * N) under the auto policy.
  double resolved_beta() const;
  // Copy with warmup and edge_discard filled in where they are automatic:
  // warmup = 5/beta for the adaptive loop (0 for dual homodyne), plus 3/lambda
  // when the phase starts from a fixed value; edge = max(5/chi_min, 5/beta).
  ExperimentConfig resolved() const;
  // Checks every invariant of the resolved configuration.
  void validate() const;
};

struct TrialResult {
  double filtered_mse{0.0};
  double smoothed_mse{0.0};
  double backward_mse{0.0};
};

TrialResult run_trial(const ExperimentConfig& config, std::uint32_t trial_index);

// Evaluates several estimators on one simulated trajectory. Each probe's
// edge_discard is used as given.
std::vector<TrialResult> run_trial_probes(const ExperimentConfig& config, std::uint32_t trial_index,
                                          std::span<const EstimatorParams> probes);

// Per-trial results, indexed [trial][probe].
struct EnsembleSamples {
  std::vector<std::vector<TrialResult>> trials;
};

// Runs trials 0..config.trials-1 on `threads` workers. The result does not
// depend on the thread count.
EnsembleSamples run_ensemble_samples(const ExperimentConfig& config, std::span<const EstimatorParams> probes,
                                     int threads = 1);

struct ConditionRecord {
  Scheme scheme{Scheme::adaptive};
  EstimatorMode mode{EstimatorMode::filtered};
  double chi{0.0};  // chi_minus
  double chi_plus{0.0};
  double w_minus{1.0};
  double w_plus{0.0};
  double kappa{0.0};
  double lambda{0.0};
  double flux{0.0};
  int trials{0};
  double mc_mse{0.0};
  double mc_stderr{0.0};
  double analytic_mse{0.0};
  double z_score{0.0};
};

struct VarianceReport {
  std::vector<ConditionRecord> records;

  const ConditionRecord* find(Scheme scheme, EstimatorMode mode) const;
};

// Mean and standard error (std-dev across trials / sqrt(trials)) of a sample.
struct MeanStderr {
  double mean{0.0};
  double stderr_{0.0};
};

MeanStderr mean_and_stderr(std::span<const double> samples);

// Filtered and smoothed records for one configuration.
VarianceReport run_ensemble(const ExperimentConfig& config, int threads = 1);

enum class SweepAxis { chi, flux };

// chi axis: symmetric estimator at each chi. flux axis: per point, filtered at
// its optimal chi and smoothed at its optimal chi on shared trajectories, with
// beta from the smoothed optimum under the auto policy.
std::vector<VarianceReport> sweep(const ExperimentConfig& config, SweepAxis axis, std::span<const double> values,
                                  int threads = 1);

struct GainRatio {
  double value{0.0};
  double stderr_{0.0};
};

struct SchemeComparison {
  GainRatio smoothing_gain_mc;         // adaptive filtered / adaptive smoothed
  GainRatio smoothing_gain_dual_mc;    // dual filtered / dual smoothed
  GainRatio adaptive_gain_mc;          // dual filtered / adaptive filtered
  GainRatio adaptive_gain_smoothed_mc; // dual smoothed / adaptive smoothed
  GainRatio total_gain_mc;             // limit-form SQL / adaptive smoothed
};

// Needs exactly one record for each scheme x mode across `reports`.
SchemeComparison compare_schemes(std::span<const VarianceReport> reports);

}  // namespace qsmooth
