#pragma once

#include <cstdint>
#include <vector>

#include "itoanova/quadvar.hpp"
#include "itoanova/series.hpp"

namespace itoanova {

/// Flat rolling window of length h, tied to the sampling density through
/// c = sqrt(dt_bar) / h.
struct Bandwidth {
  double c = 1.0;
  double h = 0.0;

  static Bandwidth from_c(double c, const SamplingGrid& grid);
  static Bandwidth from_h(double h, const SamplingGrid& grid);

  /// Fewer than about five increments fit in a window.
  bool thin(const SamplingGrid& grid) const { return h < 5.0 * grid.mesh(); }
};

enum class FillPolicy : std::uint8_t { BackfillFirstValid };

/// Rolling estimates at grid times. Indices before valid_from have no full
/// window and hold the first valid value. valid(i) is 0 for those indices and
/// for indices carried forward over a denominator-floor hit.
struct SpotSeries {
  SamplingGrid grid;
  Column values;
  std::vector<std::uint8_t> valid;
  Index valid_from = 0;
  Index floor_hits = 0;
  FillPolicy fill = FillPolicy::BackfillFirstValid;
};

/// First increment index inside (t_i - h, t_i] for every i, or -1 while t_i < h.
/// An increment [t_j, t_{j+1}] belongs to the window iff t_i - h <= t_j and t_{j+1} <= t_i.
std::vector<Index> window_starts(const SamplingGrid& grid, double h);

/// ([X,Y]_t - [X,Y]_{t-h}) / h from a cumulative path.
SpotSeries spot_from_path(const Column& cumulative, const SamplingGrid& grid, const Bandwidth& bw);

template <typename DX, typename DY>
SpotSeries spot_cov(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y, const SamplingGrid& grid,
                    const Bandwidth& bw) {
  return spot_from_path(realized_cov(x, y, grid).values, grid, bw);
}

inline constexpr double kDefaultFloor = 1e-10;

/// Regression-coefficient path rho_hat = spot<Xi,S> / spot<S,S>. Denominators
/// below floor * [S,S]_T / T are skipped and the last value carried forward.
SpotSeries rho_hat(const Column& s, const Column& xi, const SamplingGrid& grid, const Bandwidth& bw,
                   double floor = kDefaultFloor);

/// Every rolling plug-in the downstream estimators need, from one pass.
struct SpotEstimates {
  Bandwidth bw;
  SpotSeries rho;
  SpotSeries ss, xis, xixi;
  /// Heteroskedasticity-robust variance of rho_hat - rho over each window.
  Column rho_noise_var;
  /// Debiased estimate of d<rho,rho>/dt (may be negative; unclipped).
  Column rho_qv_rate;
  std::vector<Index> window_start;
};

SpotEstimates estimate_spot(const Column& s, const Column& xi, const SamplingGrid& grid, const Bandwidth& bw,
                            double floor = kDefaultFloor);

/// Asymptotic variance profile of rho_hat - rho in the dt_bar^{1/4} scale:
/// rho_qv / (3c) + c H' (xixi / ss - rho^2), clipped below at 0.
Column rho_variance_profile(const Column& rho_qv_rate, const Column& xixi, const Column& ss, const Column& rho,
                            const Column& h_prime, double c);

Column rho_variance_profile(const SpotEstimates& spot, const WindowedSlope& h_prime);

}  // namespace itoanova
