#pragma once

#include <utility>

#include "qsmooth/scheme.hpp"
#include "qsmooth/stochastic.hpp"

namespace qsmooth {

enum class DualMode { linearized, arg };

std::string_view to_string(DualMode mode);

// Low-pass feedback filter: d(phihat) = (-omega0 phihat + beta I / 2sqrt(N)) dt.
// `efficiency` scales the flux seen by the signal term (N_eff = efficiency * N);
// shot noise stays at unit level.
struct FeedbackParams {
  double beta{1e6};
  double omega0{0.0};
  double phihat0{0.0};
  double efficiency{1.0};

  void validate() const;
  // Also checks the loop stability margin beta * dt < 0.5.
  void validate(const SimGrid& grid) const;
};

// Time-aligned record of one detection run. Adaptive runs fill `current` with
// the photocurrent I and `phihat`; dual-homodyne runs fill `current` with I+,
// `current_minus` with I- and leave `phihat` empty. `theta` is the
// instantaneous estimate in both cases.
struct Trajectory {
  SimGrid grid;
  Scheme scheme{Scheme::adaptive};
  Series<double> phi;
  Series<double> current;
  Series<double> current_minus;
  Series<double> phihat;
  Series<double> theta;
};

// phihat + I / (2 sqrt(flux)).
double instantaneous_estimate(double current_sample, double phihat_sample, double flux);

Trajectory run_adaptive_loop(const Series<double>& phi, const ProcessParams& params, const FeedbackParams& fb,
                             const SimGrid& grid, const NoiseStream& meas_stream);

// Dual homodyne: the beam is split so each arm carries N/2. `streams.first`
// drives the I+ arm and `streams.second` the I- arm.
Trajectory run_dual_homodyne(const Series<double>& phi, const ProcessParams& params, const SimGrid& grid,
                             const std::pair<NoiseStream, NoiseStream>& streams, DualMode mode = DualMode::linearized,
                             double efficiency = 1.0);

}  // namespace qsmooth
