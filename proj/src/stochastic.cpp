#include "qsmooth/stochastic.hpp"

#include <numbers>
#include <vector>

#include "qsmooth/philox.hpp"

namespace qsmooth {

void SimGrid::validate() const {
  if (!std::isfinite(dt) || !(dt > 0.0)) throw ParameterError("grid dt must be finite and > 0");
  if (!std::isfinite(duration) || !(duration > 0.0)) throw ParameterError("grid duration must be finite and > 0");
  if (!std::isfinite(warmup) || warmup < 0.0) throw ParameterError("grid warmup must be finite and >= 0");
  if (!(warmup < duration)) throw ParameterError("grid warmup must be < duration");
  if (substeps < 1) throw ParameterError("grid substeps must be >= 1");
  if (n_steps() < 2) throw ParameterError("grid must have n_steps >= 2");
}

std::string_view to_string(NoiseRole role) {
  switch (role) {
    case NoiseRole::phase_noise: return "phase_noise";
    case NoiseRole::measurement_noise: return "measurement_noise";
    case NoiseRole::measurement_noise_2: return "measurement_noise_2";
  }
  return "unknown";
}

namespace {

// (k + 1/2) * 2^-53 for the top 53 bits of a 64-bit word: never 0 or 1.
double open_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

// Box-Muller on one Philox block gives normals 2*block and 2*block + 1.
std::array<double, 2> normal_pair(const Philox4x32::Key& key, std::uint32_t trial, std::uint32_t role,
                                  std::uint64_t block) {
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32), trial,
                                role};
  const auto r = Philox4x32::block(ctr, key);
  const double u1 = open_unit(r[0], r[1]);
  const double u2 = open_unit(r[2], r[3]);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

}  // namespace

void fill_standard_normals(const NoiseStream& stream, std::uint64_t first, std::span<double> out) {
  const Philox4x32::Key key{static_cast<std::uint32_t>(stream.master_seed),
                            static_cast<std::uint32_t>(stream.master_seed >> 32)};
  const auto role = static_cast<std::uint32_t>(stream.role);
  const double amp = stream.amplitude;

  std::size_t pos = 0;
  std::uint64_t index = first;
  while (pos < out.size()) {
    const auto pair = normal_pair(key, stream.trial_index, role, index / 2);
    if (index % 2 == 0) {
      out[pos++] = amp * pair[0];
      ++index;
      if (pos == out.size()) break;
    }
    out[pos++] = amp * pair[1];
    ++index;
  }
}

Series<double> standard_normals(const NoiseStream& stream, std::int64_t n) {
  if (n < 0) throw ParameterError("sample count must be >= 0");
  Series<double> z(n);
  fill_standard_normals(stream, 0, std::span<double>(z.data(), static_cast<std::size_t>(n)));
  return z;
}

Series<double> wiener_increments(const NoiseStream& stream, std::int64_t n, double dt, int substeps) {
  if (n < 0) throw ParameterError("increment count must be >= 0");
  if (!std::isfinite(dt) || dt < 0.0) throw ParameterError("increment dt must be finite and >= 0");
  if (substeps < 1) throw ParameterError("substeps must be >= 1");

  const double fine_sd = std::sqrt(dt / substeps);
  if (substeps == 1) return fine_sd * standard_normals(stream, n);

  const Series<double> z = standard_normals(stream, n * substeps);
  Series<double> dw(n);
  for (std::int64_t k = 0; k < n; ++k) dw[k] = fine_sd * z.segment(k * substeps, substeps).sum();
  return dw;
}

Series<double> simulate_ou(const ProcessParams& params, const SimGrid& grid, const NoiseStream& stream,
                           OuInit init) {
  params.validate();
  grid.validate();
  if (init.kind == OuInit::Kind::stationary && params.lambda == 0.0)
    throw ParameterError("stationary initial condition requires lambda > 0");
  if (!std::isfinite(init.value)) throw ParameterError("initial phase must be finite");

  const std::int64_t n = grid.n_steps();
  const int m = grid.substeps;
  const double h = grid.dt / m;
  const Series<double> z = standard_normals(stream, 1 + (n - 1) * m);

  double decay = 1.0;
  double step_sd = std::sqrt(params.kappa * h);
  if (params.lambda > 0.0) {
    decay = std::exp(-params.lambda * h);
    step_sd = std::sqrt(-params.kappa * std::expm1(-2.0 * params.lambda * h) / (2.0 * params.lambda));
  }

  Series<double> phi(n);
  double x = init.kind == OuInit::Kind::stationary
                 ? std::sqrt(params.kappa / (2.0 * params.lambda)) * z[0]
                 : init.value;
  phi[0] = x;
  std::int64_t j = 1;
  for (std::int64_t k = 1; k < n; ++k) {
    for (int s = 0; s < m; ++s) x = decay * x + step_sd * z[j++];
    phi[k] = x;
  }
  return phi;
}

}  // namespace qsmooth
