#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <Eigen/Core>

#include "qsmooth/stochastic.hpp"

namespace qsmooth {

// Which series the exponential averages act on: the instantaneous estimate
// theta, or the loop's intermediate estimate phihat.
enum class AveragingSource { theta, phihat };

inline std::string_view to_string(AveragingSource source) {
  return source == AveragingSource::theta ? "theta" : "phihat";
}

struct EstimatorParams {
  double chi_minus{1.0};
  double chi_plus{1.0};
  double w_minus{0.5};
  double w_plus{0.5};
  AveragingSource source{AveragingSource::theta};
  double edge_discard{0.0};

  static EstimatorParams symmetric(double chi, AveragingSource source = AveragingSource::theta) {
    return {chi, chi, 0.5, 0.5, source, 5.0 / chi};
  }

  double chi_min() const { return std::min(chi_minus, chi_plus); }

  void validate() const {
    if (!std::isfinite(chi_minus) || !(chi_minus > 0.0)) throw ParameterError("chi_minus must be finite and > 0");
    if (!std::isfinite(chi_plus) || !(chi_plus > 0.0)) throw ParameterError("chi_plus must be finite and > 0");
    if (!std::isfinite(w_minus) || !std::isfinite(w_plus)) throw ParameterError("weights must be finite");
    if (std::abs(w_minus + w_plus - 1.0) > 1e-12) throw ParameterError("weights must satisfy w_minus + w_plus = 1");
    if (!std::isfinite(edge_discard) || edge_discard < 0.0) throw ParameterError("edge_discard must be >= 0");
  }

  // Statistics over a window need the infinite-window transients gone.
  void validate_for_statistics() const {
    validate();
    if (edge_discard * chi_min() < 5.0 * (1.0 - 1e-12))
      throw ParameterError("edge_discard must be >= 5 / min(chi_minus, chi_plus)");
  }
};

namespace detail {

template <typename Scalar>
void check_recursion(Scalar chi, Scalar dt) {
  using std::isfinite;
  if (!isfinite(chi) || !(chi > Scalar(0))) throw ParameterError("chi must be finite and > 0");
  if (!isfinite(dt) || !(dt > Scalar(0))) throw ParameterError("dt must be finite and > 0");
  if (!(chi * dt < Scalar(0.5))) throw ConfigurationError("chi * dt must be < 0.5");
}

}  // namespace detail

// y_k = a y_{k-1} + (1 - a) x_k with a = exp(-chi dt), y_0 = x_0: the exact-decay
// discretization of chi * int_{-inf}^t x(s) exp(-chi (t - s)) ds.
template <typename Derived>
Series<typename Derived::Scalar> causal_exponential_average(const Eigen::MatrixBase<Derived>& series,
                                                            typename Derived::Scalar chi,
                                                            typename Derived::Scalar dt) {
  using Scalar = typename Derived::Scalar;
  using std::exp;
  using std::expm1;
  detail::check_recursion(chi, dt);
  const Scalar a = exp(-chi * dt);
  const Scalar b = -expm1(-chi * dt);
  const Eigen::Index n = series.size();
  Series<Scalar> y(n);
  if (n == 0) return y;
  y[0] = series[0];
  for (Eigen::Index k = 1; k < n; ++k) y[k] = a * y[k - 1] + b * series[k];
  return y;
}

// Mirror image of the causal average: averages the future, seeded at the last sample.
template <typename Derived>
Series<typename Derived::Scalar> anticausal_exponential_average(const Eigen::MatrixBase<Derived>& series,
                                                                typename Derived::Scalar chi,
                                                                typename Derived::Scalar dt) {
  using Scalar = typename Derived::Scalar;
  using std::exp;
  using std::expm1;
  detail::check_recursion(chi, dt);
  const Scalar a = exp(-chi * dt);
  const Scalar b = -expm1(-chi * dt);
  const Eigen::Index n = series.size();
  Series<Scalar> y(n);
  if (n == 0) return y;
  y[n - 1] = series[n - 1];
  for (Eigen::Index k = n - 2; k >= 0; --k) y[k] = a * y[k + 1] + b * series[k];
  return y;
}

template <typename DerivedF, typename DerivedB>
Series<typename DerivedF::Scalar> combine_smoothed(const Eigen::MatrixBase<DerivedF>& forward,
                                                   const Eigen::MatrixBase<DerivedB>& backward,
                                                   const EstimatorParams& params) {
  using Scalar = typename DerivedF::Scalar;
  if (forward.size() != backward.size()) throw ParameterError("forward and backward lengths differ");
  if (std::abs(params.w_minus + params.w_plus - 1.0) > 1e-12)
    throw ParameterError("weights must satisfy w_minus + w_plus = 1");
  const auto wm = static_cast<Scalar>(params.w_minus);
  const auto wp = static_cast<Scalar>(params.w_plus);
  return wm * forward + wp * backward;
}

// Forward (filtered), backward (retrodicted) and smoothed estimates over the
// retained part of a run: samples [first_index, first_index + size) of the
// source series. `grid` describes the retained span (warmup 0).
template <typename Scalar>
struct BasicEstimateSeries {
  SimGrid grid;
  std::int64_t first_index{0};
  Series<Scalar> forward;
  Series<Scalar> backward;
  Series<Scalar> smoothed;
};

using EstimateSeries = BasicEstimateSeries<double>;

// Drops the grid's warmup, then runs both recursions seeded at the ends of
// what remains.
template <typename Derived>
BasicEstimateSeries<typename Derived::Scalar> estimate_phase(const Eigen::MatrixBase<Derived>& series,
                                                            const SimGrid& grid, const EstimatorParams& params) {
  using Scalar = typename Derived::Scalar;
  params.validate();
  grid.validate();
  if (series.size() != grid.n_steps()) throw ParameterError("series length does not match grid n_steps");
  const std::int64_t first = grid.warmup_steps();
  const std::int64_t kept = grid.n_steps() - first;

  BasicEstimateSeries<Scalar> out;
  out.grid = grid;
  out.grid.warmup = 0.0;
  out.grid.duration = static_cast<double>(kept) * grid.dt;
  out.first_index = first;
  const auto tail = series.tail(kept);
  out.forward = causal_exponential_average(tail, static_cast<Scalar>(params.chi_minus), static_cast<Scalar>(grid.dt));
  out.backward = anticausal_exponential_average(tail, static_cast<Scalar>(params.chi_plus), static_cast<Scalar>(grid.dt));
  out.smoothed = combine_smoothed(out.forward, out.backward, params);
  return out;
}

struct MseEstimate {
  double mse{0.0};
  double std_error{0.0};
  std::int64_t n_eff{0};
};

// Sample range [begin, end) kept after dropping warmup + edge at the start and
// edge at the end.
struct SampleWindow {
  std::int64_t begin{0};
  std::int64_t end{0};
  std::int64_t size() const { return end - begin; }
};

inline SampleWindow statistics_window(const SimGrid& grid, double edge_discard) {
  grid.validate();
  if (!std::isfinite(edge_discard) || edge_discard < 0.0) throw ParameterError("edge_discard must be >= 0");
  if (!(2.0 * edge_discard < grid.duration - grid.warmup))
    throw ParameterError("2 * edge_discard must be < duration - warmup");
  const auto edge = static_cast<std::int64_t>(std::ceil(edge_discard / grid.dt - 1e-9));
  SampleWindow w{grid.warmup_steps() + edge, grid.n_steps() - edge};
  if (w.size() < 1) throw ParameterError("statistics window is empty");
  return w;
}

// Plain mean of squared deviations over the statistics window.
template <typename DerivedE, typename DerivedT>
double mean_square_error(const Eigen::MatrixBase<DerivedE>& estimate, const Eigen::MatrixBase<DerivedT>& truth,
                         const SimGrid& grid, double edge_discard) {
  if (estimate.size() != truth.size()) throw ParameterError("estimate and truth lengths differ");
  if (estimate.size() != grid.n_steps()) throw ParameterError("series length does not match grid n_steps");
  const SampleWindow w = statistics_window(grid, edge_discard);
  const auto diff = (estimate.segment(w.begin, w.size()) - truth.segment(w.begin, w.size())).template cast<double>();
  return diff.squaredNorm() / static_cast<double>(w.size());
}

// Mean square error with a batch-means standard error; batches of
// `batch_duration` absorb the autocorrelation of the error series.
template <typename DerivedE, typename DerivedT>
MseEstimate empirical_mse(const Eigen::MatrixBase<DerivedE>& estimate, const Eigen::MatrixBase<DerivedT>& truth,
                          const SimGrid& grid, double edge_discard, double batch_duration) {
  if (!std::isfinite(batch_duration) || !(batch_duration > 0.0))
    throw ParameterError("batch_duration must be finite and > 0");
  const double mse = mean_square_error(estimate, truth, grid, edge_discard);
  const SampleWindow w = statistics_window(grid, edge_discard);
  const auto batch_len = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(batch_duration / grid.dt - 1e-9)));
  const std::int64_t batches = w.size() / batch_len;
  if (batches < 10) throw StatisticsError("run too short: fewer than 10 batches for batch-means error");

  Eigen::VectorXd means(batches);
  for (std::int64_t b = 0; b < batches; ++b) {
    const auto lo = w.begin + b * batch_len;
    const auto diff = (estimate.segment(lo, batch_len) - truth.segment(lo, batch_len)).template cast<double>();
    means[b] = diff.squaredNorm() / static_cast<double>(batch_len);
  }
  const double centre = means.mean();
  const double var = (means.array() - centre).square().sum() / static_cast<double>(batches - 1);
  return {mse, std::sqrt(var / static_cast<double>(batches)), batches};
}

}  // namespace qsmooth
