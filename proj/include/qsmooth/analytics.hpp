#pragma once

#include <cmath>

#include "qsmooth/errors.hpp"
#include "qsmooth/scheme.hpp"
#include "qsmooth/stochastic.hpp"

// Closed-form mean-square errors of exponential-kernel phase estimators for an
// Ornstein-Uhlenbeck phase seen through shot-noise-limited homodyne detection.
// Every formula takes the scheme; dual homodyne is the adaptive formula at N/2.

namespace qsmooth {

template <typename Scalar>
struct BasicTheoryPoint {
  BasicProcessParams<Scalar> params;
  Scalar chi_minus{};
  Scalar chi_plus{};
  Scalar w_minus{0.5};
  Scalar w_plus{0.5};
  Scheme scheme{Scheme::adaptive};
};

using TheoryPoint = BasicTheoryPoint<double>;

template <typename Scalar>
struct BasicChiOptimum {
  Scalar chi_star{};
  Scalar mse_star{};
  // false when the minimum sits on the chi -> 0 boundary (filtered mode only).
  bool interior{true};
};

using ChiOptimum = BasicChiOptimum<double>;

template <typename Scalar>
struct BasicImprovementRatios {
  Scalar smoothing_gain{};
  Scalar adaptive_gain{};
  Scalar total_gain_limit{};
  Scalar total_gain_exact{};
};

using ImprovementRatios = BasicImprovementRatios<double>;

namespace detail {

template <typename Scalar>
void check_chi(Scalar chi) {
  using std::isfinite;
  if (!isfinite(chi) || !(chi > Scalar(0))) throw ParameterError("chi must be finite and > 0");
}

}  // namespace detail

// N for adaptive detection, N/2 for dual homodyne.
template <typename Scalar>
Scalar effective_flux(const BasicProcessParams<Scalar>& p, Scheme scheme) {
  return scheme == Scheme::adaptive ? p.flux : p.flux / Scalar(2);
}

// kappa / (2 (chi + lambda)) + chi / (8 N'). Same for the forward and backward estimate.
template <typename Scalar>
Scalar filtered_mse(const BasicProcessParams<Scalar>& p, Scalar chi, Scheme scheme = Scheme::adaptive) {
  p.validate();
  detail::check_chi(chi);
  return p.kappa / (Scalar(2) * (chi + p.lambda)) + chi / (Scalar(8) * effective_flux(p, scheme));
}

// Error correlation between forward and backward estimates. The shot-noise
// parts are independent, so only the signal term survives.
template <typename Scalar>
Scalar forward_backward_correlation(const BasicProcessParams<Scalar>& p, Scalar chi_minus, Scalar chi_plus) {
  p.validate();
  detail::check_chi(chi_minus);
  detail::check_chi(chi_plus);
  return p.kappa * p.lambda / (Scalar(2) * (chi_minus + p.lambda) * (chi_plus + p.lambda));
}

template <typename Scalar>
Scalar combined_mse(const BasicTheoryPoint<Scalar>& t) {
  using std::abs;
  if (abs(t.w_minus + t.w_plus - Scalar(1)) > Scalar(1e-12))
    throw ParameterError("weights must satisfy w_minus + w_plus = 1");
  const Scalar var_minus = filtered_mse(t.params, t.chi_minus, t.scheme);
  const Scalar var_plus = filtered_mse(t.params, t.chi_plus, t.scheme);
  const Scalar corr = forward_backward_correlation(t.params, t.chi_minus, t.chi_plus);
  return t.w_minus * t.w_minus * var_minus + t.w_plus * t.w_plus * var_plus + Scalar(2) * t.w_minus * t.w_plus * corr;
}

// Symmetric optimum of the combined estimate (chi_- = chi_+ = chi, w = 1/2).
template <typename Scalar>
Scalar smoothed_mse(const BasicProcessParams<Scalar>& p, Scalar chi, Scheme scheme = Scheme::adaptive) {
  p.validate();
  detail::check_chi(chi);
  const Scalar s = chi + p.lambda;
  return p.kappa * (chi + Scalar(2) * p.lambda) / (Scalar(4) * s * s) + chi / (Scalar(16) * effective_flux(p, scheme));
}

template <typename Scalar>
BasicChiOptimum<Scalar> optimal_chi(const BasicProcessParams<Scalar>& p, EstimatorMode mode,
                                    Scheme scheme = Scheme::adaptive) {
  using std::sqrt;
  p.validate();
  const Scalar n_eff = effective_flux(p, scheme);
  const Scalar limit_chi = Scalar(2) * sqrt(p.kappa * n_eff);

  if (mode == EstimatorMode::filtered) {
    // d/dchi = 0  <=>  (chi + lambda)^2 = 4 kappa N'
    const Scalar chi = limit_chi - p.lambda;
    if (!(chi > Scalar(0))) return {Scalar(0), p.kappa / (Scalar(2) * p.lambda), false};
    return {chi, filtered_mse(p, chi, scheme), true};
  }

  // d/dchi = 0  <=>  (chi + lambda)^3 = 4 kappa N' (chi + 3 lambda); the cubic
  // residual is convex for chi > -lambda, so one sign change means one root.
  const auto residual = [&](Scalar chi) {
    const Scalar s = chi + p.lambda;
    return s * s * s - Scalar(4) * p.kappa * n_eff * (chi + Scalar(3) * p.lambda);
  };
  Scalar lo = limit_chi * Scalar(1e-12);
  Scalar hi = Scalar(10) * limit_chi;
  if (!(residual(lo) < Scalar(0)) || !(residual(hi) > Scalar(0)))
    throw ConfigurationError("no positive bracket for the smoothed optimal chi");
  while (hi - lo > Scalar(1e-10) * hi) {
    const Scalar mid = Scalar(0.5) * (lo + hi);
    if (residual(mid) < Scalar(0))
      lo = mid;
    else
      hi = mid;
  }
  const Scalar chi = Scalar(0.5) * (lo + hi);
  return {chi, smoothed_mse(p, chi, scheme), true};
}

// Small-xi optimum of filtering, sqrt(kappa / N') / 2.
template <typename Scalar>
Scalar limit_filtered_mse(const BasicProcessParams<Scalar>& p, Scheme scheme = Scheme::adaptive) {
  using std::sqrt;
  p.validate();
  return sqrt(p.kappa / effective_flux(p, scheme)) / Scalar(2);
}

// Small-xi optimum of smoothing, sqrt(kappa / N') / 4.
template <typename Scalar>
Scalar limit_smoothed_mse(const BasicProcessParams<Scalar>& p, Scheme scheme = Scheme::adaptive) {
  return limit_filtered_mse(p, scheme) / Scalar(2);
}

// Standard quantum limit: ideal dual-homodyne filtering in the small-xi limit.
template <typename Scalar>
Scalar sql_mse(const BasicProcessParams<Scalar>& p) {
  return limit_filtered_mse(p, Scheme::dual_homodyne);
}

template <typename Scalar>
Scalar optimal_beta(Scalar chi, Scalar flux) {
  using std::isfinite;
  using std::sqrt;
  if (!isfinite(chi) || chi < Scalar(0)) throw ParameterError("chi must be finite and >= 0");
  if (!isfinite(flux) || !(flux > Scalar(0))) throw ParameterError("flux must be finite and > 0");
  return sqrt(Scalar(8) * chi * flux);
}

template <typename Scalar>
Scalar xi(const BasicProcessParams<Scalar>& p) {
  using std::sqrt;
  p.validate();
  return p.lambda / (Scalar(2) * sqrt(p.kappa * p.flux));
}

template <typename Scalar>
BasicImprovementRatios<Scalar> improvement_ratios(const BasicProcessParams<Scalar>& p) {
  using std::sqrt;
  p.validate();
  const Scalar chi = Scalar(2) * sqrt(p.kappa * p.flux);
  BasicImprovementRatios<Scalar> r;
  r.smoothing_gain = filtered_mse(p, chi) / smoothed_mse(p, chi);
  r.adaptive_gain = limit_filtered_mse(p, Scheme::dual_homodyne) / limit_filtered_mse(p, Scheme::adaptive);
  r.total_gain_limit = sql_mse(p) / limit_smoothed_mse(p, Scheme::adaptive);
  r.total_gain_exact = sql_mse(p) / optimal_chi(p, EstimatorMode::smoothed).mse_star;
  return r;
}

}  // namespace qsmooth
