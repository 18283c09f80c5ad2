#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>

#include <Eigen/Core>

#include "qsmooth/errors.hpp"

namespace qsmooth {

template <typename Scalar>
using Series = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Phase-diffusion strength kappa [rad^2/s], mean-reversion rate lambda [1/s]
// and photon flux N [1/s].
template <typename Scalar>
struct BasicProcessParams {
  Scalar kappa{};
  Scalar lambda{};
  Scalar flux{};

  void validate() const {
    using std::isfinite;
    if (!isfinite(kappa) || !isfinite(lambda) || !isfinite(flux))
      throw ParameterError("process parameters must be finite");
    if (!(kappa > Scalar(0))) throw ParameterError("kappa must be > 0");
    if (!(lambda >= Scalar(0))) throw ParameterError("lambda must be >= 0");
    if (!(flux > Scalar(0))) throw ParameterError("flux must be > 0");
  }

  // Same process observed with flux scaled by `factor`.
  BasicProcessParams with_flux_scaled(Scalar factor) const { return {kappa, lambda, flux * factor}; }
};

using ProcessParams = BasicProcessParams<double>;

// Uniform time grid. Noise is drawn on a grid `substeps` times finer and
// aggregated, so runs at dt (substeps=2) and dt/2 (substeps=1) share one
// underlying Brownian path.
struct SimGrid {
  double dt{2e-8};
  double duration{1e-2};
  double warmup{0.0};
  int substeps{1};

  std::int64_t n_steps() const { return static_cast<std::int64_t>(std::llround(duration / dt)); }
  std::int64_t warmup_steps() const { return static_cast<std::int64_t>(std::ceil(warmup / dt - 1e-9)); }
  double time(std::int64_t k) const { return static_cast<double>(k) * dt; }

  void validate() const;
};

enum class NoiseRole : std::uint32_t {
  phase_noise = 0,
  measurement_noise = 1,
  measurement_noise_2 = 2,
};

std::string_view to_string(NoiseRole role);

// Identity of one Gaussian stream. Samples are a pure function of
// (master_seed, trial_index, role, index); `amplitude` scales every sample
// (0 gives a silent stream for noise-free runs).
struct NoiseStream {
  std::uint64_t master_seed{0};
  std::uint32_t trial_index{0};
  NoiseRole role{NoiseRole::phase_noise};
  double amplitude{1.0};

  bool same_identity(const NoiseStream& other) const {
    return master_seed == other.master_seed && trial_index == other.trial_index && role == other.role;
  }
};

// Writes standard normals with indices [first, first + out.size()) of the stream.
void fill_standard_normals(const NoiseStream& stream, std::uint64_t first, std::span<double> out);

Series<double> standard_normals(const NoiseStream& stream, std::int64_t n);

// n increments of variance dt. With substeps > 1 each increment is the sum of
// `substeps` finer increments of variance dt/substeps.
Series<double> wiener_increments(const NoiseStream& stream, std::int64_t n, double dt, int substeps = 1);

struct OuInit {
  enum class Kind { stationary, fixed };
  Kind kind{Kind::stationary};
  double value{0.0};

  static OuInit stationary() { return {Kind::stationary, 0.0}; }
  static OuInit fixed(double phi0) { return {Kind::fixed, phi0}; }
};

// Exact Ornstein-Uhlenbeck transitions d(phi) = -lambda phi dt + sqrt(kappa) dV
// sampled on the grid. lambda == 0 is pure diffusion and requires a fixed start.
Series<double> simulate_ou(const ProcessParams& params, const SimGrid& grid, const NoiseStream& stream,
                           OuInit init = OuInit::stationary());

}  // namespace qsmooth
