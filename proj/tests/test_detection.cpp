#include <cmath>
#include <numbers>

#include "doctest.h"
#include "qsmooth/analytics.hpp"
#include "qsmooth/detection.hpp"
#include "qsmooth/estimators.hpp"
#include "test_support.hpp"

using namespace qsmooth;

namespace {

const ProcessParams kAp{1.5868e4, 6.1451e4, 1.3499e6};
const ProcessParams kDh{1.6218e4, 6.4593e4, 1.3235e6};
const NoiseStream kSilent{1, 0, NoiseRole::measurement_noise, 0.0};

}  // namespace

TEST_CASE("instantaneous estimate") {
  CHECK(instantaneous_estimate(0.0, 0.5, 123.0) == 0.5);
  const double n = 1.3499e6;
  CHECK(instantaneous_estimate(2.0 * std::sqrt(n) * 0.1, 0.0, n) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(instantaneous_estimate(1.0, 0.2, n) == doctest::Approx(0.200430347422).epsilon(1e-11));
  CHECK(instantaneous_estimate(1.0, 0.2, n) == doctest::Approx(0.200430).epsilon(1e-6));
  CHECK_THROWS_AS(instantaneous_estimate(1.0, 0.0, 0.0), ParameterError);
}

TEST_CASE("adaptive loop: noise-free fixed point") {
  const SimGrid g{2e-8, 1e-5, 0.0, 1};
  const Series<double> phi = Series<double>::Zero(g.n_steps());
  const auto t = run_adaptive_loop(phi, kAp, FeedbackParams{1e6, 0.0, 0.0}, g, kSilent);
  CHECK(t.current.cwiseAbs().maxCoeff() == 0.0);
  CHECK(t.phihat.cwiseAbs().maxCoeff() == 0.0);
  CHECK(t.theta.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adaptive loop: first-order tracking of a constant phase") {
  const double beta = 1e6, dt = 2e-8, c = 0.3;
  const SimGrid g{dt, 2e-5, 0.0, 1};
  const Series<double> phi = Series<double>::Constant(g.n_steps(), c);
  const auto t = run_adaptive_loop(phi, kAp, FeedbackParams{beta, 0.0, 0.0}, g, kSilent);
  const auto k = static_cast<Eigen::Index>(std::llround(5.0 / beta / dt));
  const double bound = std::abs(c) * std::exp(-beta * g.time(k) * (1.0 - beta * dt));
  CHECK(std::abs(t.phihat[k] - c) <= bound);
  CHECK(std::abs(t.phihat[k] - c) > 0.0);
}

TEST_CASE("adaptive loop: instantaneous-estimate identity holds bit-exactly") {
  const SimGrid g{2e-8, 2e-4, 0.0, 1};
  const auto phi = simulate_ou(kAp, g, NoiseStream{3, 0, NoiseRole::phase_noise});
  const FeedbackParams fb{1.77794e6, 100.0, 0.0};
  const auto t = run_adaptive_loop(phi, kAp, fb, g, NoiseStream{3, 0, NoiseRole::measurement_noise});
  REQUIRE(t.theta.size() == g.n_steps());
  REQUIRE(t.phihat.size() == g.n_steps());
  REQUIRE(t.current.size() == g.n_steps());
  for (Eigen::Index k = 0; k < t.theta.size(); ++k)
    REQUIRE(t.theta[k] == t.phihat[k] + t.current[k] / (2.0 * std::sqrt(kAp.flux)));
}

TEST_CASE("adaptive loop: guards") {
  const SimGrid g{2e-8, 1e-5, 0.0, 1};
  const Series<double> phi = Series<double>::Zero(g.n_steps());
  CHECK_THROWS_AS(run_adaptive_loop(phi, kAp, FeedbackParams{2.5e7, 0.0, 0.0}, g, kSilent), ConfigurationError);
  CHECK_THROWS_AS(run_adaptive_loop(phi.head(10), kAp, FeedbackParams{1e6, 0.0, 0.0}, g, kSilent), ParameterError);
  CHECK_THROWS_AS(run_adaptive_loop(phi, kAp, FeedbackParams{1e2, 1e3, 0.0}, g, kSilent), ParameterError);
}

TEST_CASE("adaptive loop: closed-loop error stays bounded without drift") {
  const SimGrid g{2e-8, 4e-3, 0.0, 1};
  const double chi = 2.0 * std::sqrt(kAp.kappa * kAp.flux);
  const FeedbackParams fb{optimal_beta(chi, kAp.flux), 0.0, 0.0};
  const auto phi = simulate_ou(kAp, g, NoiseStream{10, 0, NoiseRole::phase_noise});
  const auto t = run_adaptive_loop(phi, kAp, fb, g, NoiseStream{10, 0, NoiseRole::measurement_noise});
  const Eigen::VectorXd err2 = (t.phi - t.phihat).array().square().matrix();
  CHECK(std::isfinite(err2.sum()));

  // Ten segment means must agree with the pooled mean.
  const Eigen::Index seg = err2.size() / 10;
  const auto batch = static_cast<std::int64_t>(std::ceil(10.0 / kAp.lambda / g.dt));
  const auto pooled = test::batch_means(err2, batch);
  for (int s = 0; s < 10; ++s) {
    const Eigen::VectorXd part = err2.segment(s * seg, seg);
    const auto stat = test::batch_means(part, batch);
    CHECK(std::abs(stat.mean - pooled.mean) < 5.0 * std::hypot(stat.stderr_, pooled.stderr_));
  }
}

TEST_CASE("dual homodyne: noise-free arg recovery and wrapping") {
  const SimGrid g{2e-8, 1e-6, 0.0, 1};
  const std::pair<NoiseStream, NoiseStream> silent{{1, 0, NoiseRole::measurement_noise, 0.0},
                                                   {1, 0, NoiseRole::measurement_noise_2, 0.0}};
  const auto t = run_dual_homodyne(Series<double>::Constant(g.n_steps(), 0.3), kAp, g, silent, DualMode::arg);
  CHECK((t.theta.array() - 0.3).abs().maxCoeff() < 1e-15);
  CHECK(t.phihat.size() == 0);
  CHECK(t.current_minus.size() == g.n_steps());

  const auto w = run_dual_homodyne(Series<double>::Constant(g.n_steps(), std::numbers::pi), kAp, g, silent,
                                   DualMode::arg);
  CHECK((w.theta.array() > -std::numbers::pi).all());
  CHECK((w.theta.array() <= std::numbers::pi).all());

  const auto lin = run_dual_homodyne(Series<double>::Constant(g.n_steps(), 0.3), kAp, g, silent);
  CHECK((lin.theta.array() == 0.3).all());

  CHECK_THROWS_AS(run_dual_homodyne(Series<double>::Zero(g.n_steps()), kAp, g,
                                    {{1, 0, NoiseRole::measurement_noise}, {1, 1, NoiseRole::measurement_noise}}),
                  ParameterError);
}

TEST_CASE("dual homodyne linearized: filtered white noise has variance chi / (8 N_s)") {
  const SimGrid g{2e-8, 0.02, 0.0, 1};
  const double chi = 2.92714e5;
  const auto t = run_dual_homodyne(Series<double>::Zero(g.n_steps()), kAp, g,
                                   {{4, 0, NoiseRole::measurement_noise}, {4, 0, NoiseRole::measurement_noise_2}});
  const auto y = causal_exponential_average(t.theta, chi, g.dt);
  const Eigen::VectorXd sq = y.array().square().matrix();
  const auto stat = test::batch_means(sq.tail(sq.size() - 1000), static_cast<std::int64_t>(10.0 / chi / g.dt));
  const double expected = chi / (4.0 * kAp.flux);
  INFO("filtered variance " << stat.mean << " +- " << stat.stderr_ << " expected " << expected);
  CHECK(std::abs(stat.mean - expected) < 3.0 * stat.stderr_ + 0.002 * expected);
}

TEST_CASE("dual homodyne: arg and linearized modes agree at DH parameters") {
  const SimGrid g{2e-8, 0.01, 0.0, 1};
  const double chi = 2.0 * std::sqrt(kDh.kappa * kDh.flux / 2.0);
  double lin_sum = 0.0, arg_sum = 0.0;
  for (std::uint32_t trial = 0; trial < 4; ++trial) {
    const auto phi = simulate_ou(kDh, g, NoiseStream{6, trial, NoiseRole::phase_noise});
    const std::pair<NoiseStream, NoiseStream> s{{6, trial, NoiseRole::measurement_noise},
                                                {6, trial, NoiseRole::measurement_noise_2}};
    const auto lin = run_dual_homodyne(phi, kDh, g, s, DualMode::linearized);
    const auto arg = run_dual_homodyne(phi, kDh, g, s, DualMode::arg);
    const double edge = 5.0 / chi;
    lin_sum += mean_square_error(causal_exponential_average(lin.theta, chi, g.dt), phi, g, edge);
    arg_sum += mean_square_error(causal_exponential_average(arg.theta, chi, g.dt), phi, g, edge);
  }
  CHECK(arg_sum == doctest::Approx(lin_sum).epsilon(0.10));
}
