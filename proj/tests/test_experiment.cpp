#include <cmath>

#include "doctest.h"
#include "qsmooth/experiment.hpp"

using namespace qsmooth;

namespace {

ExperimentConfig short_config(int trials, double duration) {
  ExperimentConfig c;
  c.trials = trials;
  c.grid.duration = duration;
  c.master_seed = 4242;
  return c;
}

bool same(const VarianceReport& a, const VarianceReport& b) {
  if (a.records.size() != b.records.size()) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto& x = a.records[i];
    const auto& y = b.records[i];
    if (x.mc_mse != y.mc_mse || x.mc_stderr != y.mc_stderr || x.analytic_mse != y.analytic_mse ||
        x.z_score != y.z_score || x.chi != y.chi)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("run_trial: noiseless fixed point") {
  ExperimentConfig c = short_config(1, 1e-3);
  c.noise = {false, false};
  c.init = OuInit::fixed(0.0);
  for (Scheme scheme : {Scheme::adaptive, Scheme::dual_homodyne}) {
    c.scheme = scheme;
    const TrialResult r = run_trial(c, 0);
    CHECK(r.filtered_mse == 0.0);
    CHECK(r.smoothed_mse == 0.0);
    CHECK(r.backward_mse == 0.0);
  }
}

TEST_CASE("run_trial: deterministic in (seed, index)") {
  ExperimentConfig c = short_config(1, 1e-3);
  c.estimator.source = AveragingSource::phihat;
  const TrialResult a = run_trial(c, 7);
  const TrialResult b = run_trial(c, 7);
  CHECK(a.filtered_mse == b.filtered_mse);
  CHECK(a.smoothed_mse == b.smoothed_mse);
  CHECK(a.backward_mse == b.backward_mse);
  CHECK(a.filtered_mse > 0.0);
  const TrialResult other = run_trial(c, 8);
  CHECK(other.filtered_mse != a.filtered_mse);
}

TEST_CASE("config resolution and validation") {
  ExperimentConfig c;
  const ExperimentConfig r = c.resolved();
  const double beta = std::sqrt(8.0 * c.estimator.chi_minus * c.params.flux);
  CHECK(r.resolved_beta() == doctest::Approx(beta).epsilon(1e-15));
  CHECK(r.grid.warmup == doctest::Approx(5.0 / beta));
  CHECK(r.estimator.edge_discard == doctest::Approx(5.0 / c.estimator.chi_minus));
  CHECK_NOTHROW(c.validate());

  c.init = OuInit::fixed(0.0);
  CHECK(c.resolved().grid.warmup == doctest::Approx(3.0 / c.params.lambda));

  ExperimentConfig dual;
  dual.scheme = Scheme::dual_homodyne;
  CHECK(dual.resolved().grid.warmup == 0.0);
  dual.estimator.source = AveragingSource::phihat;
  CHECK_THROWS_AS(dual.validate(), ParameterError);

  ExperimentConfig unstable;
  unstable.beta_policy = BetaPolicy::fixed_at(3e7);
  CHECK_THROWS_AS(unstable.validate(), ConfigurationError);

  ExperimentConfig weights;
  weights.estimator.w_minus = 0.6;
  weights.estimator.w_plus = 0.6;
  CHECK_THROWS_AS(weights.validate(), ParameterError);

  ExperimentConfig too_short = short_config(1, 2e-5);
  CHECK_THROWS_AS(too_short.validate(), ParameterError);
}

TEST_CASE("run_ensemble: serial and parallel runs agree exactly") {
  const ExperimentConfig c = short_config(30, 1e-3);
  const auto serial = run_ensemble(c, 1);
  const auto parallel = run_ensemble(c, 3);
  CHECK(same(serial, parallel));
  CHECK(same(serial, run_ensemble(c, 1)));
  REQUIRE(serial.records.size() == 2);
  CHECK(serial.records[0].mode == EstimatorMode::filtered);
  CHECK(serial.records[1].mode == EstimatorMode::smoothed);
  for (const auto& r : serial.records)
    CHECK(r.z_score == doctest::Approx((r.mc_mse - r.analytic_mse) / r.mc_stderr));

  CHECK_THROWS_AS(run_ensemble(short_config(29, 1e-3)), StatisticsError);
}

TEST_CASE("ensemble: forward and backward errors agree; smoothing beats filtering") {
  const ExperimentConfig c = short_config(60, 4e-3);
  const auto resolved = c.resolved();
  const EstimatorParams probe = resolved.estimator;
  const auto samples = run_ensemble_samples(c, std::span<const EstimatorParams>(&probe, 1));
  std::vector<double> fwd, bwd, smo;
  for (const auto& t : samples.trials) {
    fwd.push_back(t[0].filtered_mse);
    bwd.push_back(t[0].backward_mse);
    smo.push_back(t[0].smoothed_mse);
  }
  const auto f = mean_and_stderr(fwd);
  const auto b = mean_and_stderr(bwd);
  const auto s = mean_and_stderr(smo);
  CHECK(std::abs(f.mean - b.mean) < 3.0 * std::hypot(f.stderr_, b.stderr_));
  CHECK(s.mean < f.mean);
}

TEST_CASE("ensemble: smoothing never loses across chi") {
  ExperimentConfig c = short_config(30, 2e-3);
  const double base = 2.0 * std::sqrt(c.params.kappa * c.params.flux);
  for (double f : {0.3, 1.0, 3.0}) {
    c.estimator = EstimatorParams::symmetric(f * base);
    const auto rep = run_ensemble(c);
    const auto* filt = rep.find(Scheme::adaptive, EstimatorMode::filtered);
    const auto* smooth = rep.find(Scheme::adaptive, EstimatorMode::smoothed);
    CHECK(smooth->mc_mse <= filt->mc_mse + 3.0 * std::hypot(smooth->mc_stderr, filt->mc_stderr));
  }
}

TEST_CASE("ensemble: discretization bias stays below statistical noise") {
  // dt with two noise substeps and dt/2 share one Brownian path.
  ExperimentConfig coarse = short_config(40, 3e-3);
  coarse.grid.dt = 4e-8;
  coarse.grid.substeps = 2;
  ExperimentConfig fine = coarse;
  fine.grid.dt = 2e-8;
  fine.grid.substeps = 1;
  const auto a = run_ensemble(coarse);
  const auto b = run_ensemble(fine);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    INFO("z coarse " << a.records[i].z_score << " z fine " << b.records[i].z_score);
    CHECK(std::abs(a.records[i].z_score - b.records[i].z_score) < 1.0);
  }
}

TEST_CASE("ensemble: stderr scales as trials^-1/2") {
  const auto se = [](int trials) {
    return run_ensemble(short_config(trials, 5e-4)).records[0].mc_stderr;
  };
  const double s50 = se(50), s200 = se(200), s800 = se(800);
  CHECK(s50 / s200 == doctest::Approx(2.0).epsilon(0.2));
  CHECK(s200 / s800 == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("ensemble: low-pass cutoff omega0 hardly matters") {
  ExperimentConfig c = short_config(30, 2e-3);
  c.estimator.source = AveragingSource::phihat;
  const auto integrator = run_ensemble(c);
  c.omega0 = 100.0;
  const auto lowpass = run_ensemble(c);
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(lowpass.records[i].mc_mse == doctest::Approx(integrator.records[i].mc_mse).epsilon(0.01));
}

TEST_CASE("ensemble: averaging phihat instead of theta changes smoothing by < 5%") {
  ExperimentConfig c = short_config(40, 4e-3);
  const auto theta = run_ensemble(c);
  c.estimator.source = AveragingSource::phihat;
  const auto phihat = run_ensemble(c);
  CHECK(phihat.records[1].mc_mse == doctest::Approx(theta.records[1].mc_mse).epsilon(0.05));
}

TEST_CASE("sweep over chi: U-shaped theory and MC coverage") {
  ExperimentConfig c = short_config(30, 2e-3);
  const double base = 2.0 * std::sqrt(c.params.kappa * c.params.flux);
  std::vector<double> values;
  for (double f : {0.3, 0.6, 1.0, 1.8, 3.0}) values.push_back(f * base);
  const auto reports = sweep(c, SweepAxis::chi, values);
  REQUIRE(reports.size() == 5);

  std::vector<double> theory;
  int covered = 0, total = 0;
  for (const auto& rep : reports) {
    theory.push_back(rep.find(Scheme::adaptive, EstimatorMode::filtered)->analytic_mse);
    for (const auto& r : rep.records) {
      ++total;
      covered += std::abs(r.z_score) <= 3.0;
    }
  }
  CHECK(theory[0] > theory[1]);
  CHECK(theory[1] > theory[2]);
  CHECK(theory[3] > theory[2]);
  CHECK(theory[4] > theory[3]);
  const double chi_star = optimal_chi(c.params, EstimatorMode::filtered).chi_star;
  CHECK(chi_star > values[1]);
  CHECK(chi_star < values[2]);
  CHECK(covered >= 0.95 * total);

  const std::vector<double> unsorted{2e5, 1e5};
  CHECK_THROWS_AS(sweep(c, SweepAxis::chi, unsorted), ParameterError);
}

TEST_CASE("sweep over flux uses per-point optima") {
  ExperimentConfig c = short_config(30, 1e-3);
  const std::vector<double> values{1.35e6, 2.7e6};
  const auto reports = sweep(c, SweepAxis::flux, values);
  REQUIRE(reports.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    ProcessParams p = c.params;
    p.flux = values[i];
    const auto* f = reports[i].find(Scheme::adaptive, EstimatorMode::filtered);
    const auto* s = reports[i].find(Scheme::adaptive, EstimatorMode::smoothed);
    CHECK(f->chi == doctest::Approx(optimal_chi(p, EstimatorMode::filtered).chi_star));
    CHECK(s->chi == doctest::Approx(optimal_chi(p, EstimatorMode::smoothed).chi_star));
    CHECK(f->analytic_mse == doctest::Approx(optimal_chi(p, EstimatorMode::filtered).mse_star));
    CHECK(f->flux == values[i]);
  }
}

TEST_CASE("compare_schemes: ratios and unmatched conditions") {
  auto rec = [](Scheme s, EstimatorMode m, double mse) {
    ConditionRecord r;
    r.scheme = s;
    r.mode = m;
    r.kappa = 1.6e4;
    r.lambda = 100.0;
    r.flux = 1.35e6;
    r.mc_mse = mse;
    r.mc_stderr = 0.01 * mse;
    return r;
  };
  const VarianceReport adaptive{{rec(Scheme::adaptive, EstimatorMode::filtered, 0.05),
                                 rec(Scheme::adaptive, EstimatorMode::smoothed, 0.025)}};
  const VarianceReport dual{{rec(Scheme::dual_homodyne, EstimatorMode::filtered, 0.08),
                             rec(Scheme::dual_homodyne, EstimatorMode::smoothed, 0.04)}};
  const std::vector<VarianceReport> both{adaptive, dual};
  const auto cmp = compare_schemes(both);
  CHECK(cmp.smoothing_gain_mc.value == doctest::Approx(2.0));
  CHECK(cmp.smoothing_gain_mc.stderr_ == doctest::Approx(2.0 * std::sqrt(2.0) * 0.01));
  CHECK(cmp.adaptive_gain_mc.value == doctest::Approx(1.6));
  CHECK(cmp.total_gain_mc.value == doctest::Approx(sql_mse(ProcessParams{1.6e4, 100.0, 1.35e6}) / 0.025));
  CHECK(cmp.total_gain_mc.stderr_ == doctest::Approx(0.01 * cmp.total_gain_mc.value));

  const std::vector<VarianceReport> only{adaptive};
  CHECK_THROWS_AS(compare_schemes(only), ParameterError);
  const std::vector<VarianceReport> twice{adaptive, dual, adaptive};
  CHECK_THROWS_AS(compare_schemes(twice), ParameterError);
}
