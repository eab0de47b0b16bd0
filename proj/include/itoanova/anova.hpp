#pragma once

#include <optional>

#include "itoanova/quadvar.hpp"
#include "itoanova/series.hpp"
#include "itoanova/spot.hpp"

namespace itoanova {

/// Z_hat increments dXi_i - rho_hat_i dS_i and their cumulative path.
struct ResidualSeries {
  SamplingGrid grid;
  Column increments;  // size k
  Column path;        // size k + 1, starts at 0
};

/// rho holds rho_hat at grid times; entry i multiplies the increment over [t_i, t_{i+1}].
ResidualSeries residuals(const Column& xi, const Column& s, const Column& rho, const SamplingGrid& grid);
ResidualSeries residuals(const Column& xi, const Column& s, const SpotSeries& rho, const SamplingGrid& grid);

/// Per-interval terms of (1 - alpha) [Z_hat, Z_hat] + alpha sum(dXi^2 - rho_hat^2 dS^2),
/// written as dZ_hat ((1 - alpha) dZ_hat + alpha (dXi + rho_hat dS)).
Column qv_alpha_increments(const ResidualSeries& res, const Column& xi, const Column& s, const Column& rho,
                           double alpha);

/// Residual quadratic-variation estimate for alpha in [0, 1]; alpha = 1/2 is [Xi, Z_hat].
QvPath qv_alpha(const ResidualSeries& res, const Column& xi, const Column& s, const Column& rho, double alpha);

/// Least-squares nondecreasing projection (pool adjacent violators).
Column isotonic_projection(const Column& path);

/// Per-interval plug-ins for the asymptotic bias, all of size k.
struct BiasInputs {
  double c = 1.0;
  Column xis_rate;  // <Xi,S>' evaluated before the interval (predictable)
  Column drho;      // rho increments over the interval
  Column rho_qv;    // <rho,rho>' at the interval start
  Column dss;       // d<S,S> over the interval
  Column dzz;       // d<Z,Z> over the interval
  Column h_prime;   // H' over the interval
};

/// Plug-ins from data: lagged spot <Xi,S>', rho_hat increments, the debiased
/// <rho,rho>' rate, squared S increments, alpha = 1/2 residual increments and
/// the windowed H'.
BiasInputs bias_inputs(const SpotEstimates& spot, const ResidualSeries& res, const Column& xi, const Column& s,
                       const SamplingGrid& grid);

/// Per-interval terms of bias^(alpha) = (alpha/c) int <Xi,S>' d rho + (1 - 2 alpha) D,
/// D = (1/(3c)) int <rho,rho>' d<S,S> + c int H' d<Z,Z>.
Column bias_alpha_increments(const BiasInputs& in, double alpha);

/// Cumulative bias path in the dt_bar^{-1/2}-normalized scale.
QvPath bias_alpha(const BiasInputs& in, const SamplingGrid& grid, double alpha);

/// Probability that a standard Brownian motion stays in [-c, c] on [0, 1].
double unit_band_probability(double c);
/// c_1 with unit_band_probability(c_1) = level, by bisection.
double unit_band_constant(double level);

struct Interval {
  double level = 0.0;
  Column lower;
  Column upper;
};

struct GlobalBand {
  double level = 0.0;
  double tau_hat = 0.0;
  double c_unit = 0.0;  // c_1(level)
  double c_tau = 0.0;   // sqrt(tau_hat) * c_1
  double half_width = 0.0;
  Column lower;
  Column upper;
};

/// estimate - correction +/- z_{(1+level)/2} sqrt(dt_bar avar_t).
/// correction is the un-normalized bias sqrt(dt_bar) * bias (or zero).
Interval pointwise_ci(const QvPath& estimate, const Column& correction, const QvPath& avar, double level);

/// estimate - correction +/- sqrt(dt_bar) c_tau, with tau_hat the terminal avar.
GlobalBand global_band(const QvPath& estimate, const Column& correction, const QvPath& avar, double level);

struct AnovaOptions {
  double alpha = 0.5;
  double c = 1.0;
  double level = 0.95;
  double floor = kDefaultFloor;
  bool bias_correct = true;
  bool isotonic = false;
};

void validate_options(const AnovaOptions& options);

struct AnovaDiagnostics {
  double burn_in_span = 0.0;
  Index burn_in_points = 0;
  Index floor_hits = 0;
  bool thin_window = false;
  double mesh_ratio = 1.0;
  bool mesh_ratio_ok = true;
  bool isotonic_applied = false;
  bool rho_qv_caveat = true;  // the <rho,rho>' plug-in is a debiased heuristic
};

struct AnovaReport {
  SamplingGrid grid;
  AnovaOptions options;
  Bandwidth bw;
  SpotEstimates spot;
  ResidualSeries residuals;
  QvPath raw_estimate;
  QvPath estimate;
  QvPath bias;            // normalized scale
  Column bias_correction;  // sqrt(dt_bar) * bias, or zero when not correcting
  QvPath avar;
  Interval ci;
  std::optional<GlobalBand> band;  // absent when tau_hat <= 0
  AnovaDiagnostics diag;
};

/// Full residual-QV analysis of S and Xi observed on grid.
AnovaReport analyze(const Column& s, const Column& xi, const SamplingGrid& grid, const AnovaOptions& options);

}  // namespace itoanova
