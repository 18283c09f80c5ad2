#include "qsmooth/detection.hpp"

#include <numbers>

namespace qsmooth {

std::string_view to_string(DualMode mode) { return mode == DualMode::linearized ? "linearized" : "arg"; }

void FeedbackParams::validate() const {
  if (!std::isfinite(beta) || !(beta > 0.0)) throw ParameterError("feedback beta must be finite and > 0");
  if (!std::isfinite(omega0) || omega0 < 0.0) throw ParameterError("feedback omega0 must be finite and >= 0");
  if (!(omega0 < beta)) throw ParameterError("feedback omega0 must be < beta");
  if (!std::isfinite(phihat0)) throw ParameterError("initial phihat must be finite");
  if (!(efficiency > 0.0 && efficiency <= 1.0)) throw ParameterError("efficiency must lie in (0, 1]");
}

void FeedbackParams::validate(const SimGrid& grid) const {
  validate();
  if (!(beta * grid.dt < 0.5))
    throw ConfigurationError("feedback loop unstable: beta * dt must be < 0.5");
}

double instantaneous_estimate(double current_sample, double phihat_sample, double flux) {
  if (!(flux > 0.0)) throw ParameterError("flux must be > 0");
  return phihat_sample + current_sample / (2.0 * std::sqrt(flux));
}

namespace {

void check_phase(const Series<double>& phi, const SimGrid& grid) {
  grid.validate();
  if (phi.size() != grid.n_steps()) throw ParameterError("phase trajectory length does not match grid n_steps");
}

}  // namespace

Trajectory run_adaptive_loop(const Series<double>& phi, const ProcessParams& params, const FeedbackParams& fb,
                             const SimGrid& grid, const NoiseStream& meas_stream) {
  params.validate();
  check_phase(phi, grid);
  fb.validate(grid);

  const std::int64_t n = grid.n_steps();
  const double dt = grid.dt;
  const double flux_eff = fb.efficiency * params.flux;
  const double gain = 2.0 * std::sqrt(flux_eff);
  const Series<double> dw = wiener_increments(meas_stream, n, dt, grid.substeps);

  Trajectory out{grid, Scheme::adaptive, phi, Series<double>(n), {}, Series<double>(n), Series<double>(n)};
  double phihat = fb.phihat0;
  for (std::int64_t k = 0; k < n; ++k) {
    const double current = gain * (phi[k] - phihat) + dw[k] / dt;
    out.current[k] = current;
    out.phihat[k] = phihat;
    out.theta[k] = instantaneous_estimate(current, phihat, flux_eff);
    phihat += dt * (-fb.omega0 * phihat + fb.beta * current / gain);
  }
  return out;
}

Trajectory run_dual_homodyne(const Series<double>& phi, const ProcessParams& params, const SimGrid& grid,
                             const std::pair<NoiseStream, NoiseStream>& streams, DualMode mode, double efficiency) {
  params.validate();
  check_phase(phi, grid);
  if (streams.first.role == streams.second.role)
    throw ParameterError("dual homodyne arms need independent streams (distinct roles)");
  if (!(efficiency > 0.0 && efficiency <= 1.0)) throw ParameterError("efficiency must lie in (0, 1]");

  const std::int64_t n = grid.n_steps();
  const double dt = grid.dt;
  const double gain = 2.0 * std::sqrt(efficiency * params.flux / 2.0);
  const Series<double> dw_plus = wiener_increments(streams.first, n, dt, grid.substeps);
  const Series<double> dw_minus = wiener_increments(streams.second, n, dt, grid.substeps);

  Trajectory out{grid, Scheme::dual_homodyne, phi, Series<double>(n), Series<double>(n), {}, Series<double>(n)};
  for (std::int64_t k = 0; k < n; ++k) {
    if (mode == DualMode::linearized) {
      out.current[k] = gain + dw_plus[k] / dt;
      out.current_minus[k] = gain * phi[k] + dw_minus[k] / dt;
      out.theta[k] = phi[k] + dw_minus[k] / (dt * gain);
    } else {
      out.current[k] = gain * std::cos(phi[k]) + dw_plus[k] / dt;
      out.current_minus[k] = gain * std::sin(phi[k]) + dw_minus[k] / dt;
      double theta = std::atan2(out.current_minus[k], out.current[k]);
      if (theta <= -std::numbers::pi) theta = std::numbers::pi;
      out.theta[k] = theta;
    }
  }
  return out;
}

}  // namespace qsmooth
