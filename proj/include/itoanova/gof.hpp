#pragma once

#include <cstdint>
#include <string>

#include "itoanova/anova.hpp"

namespace itoanova {

/// R^2_t = 1 - <Z,Z>^(alpha)_t / [Xi,Xi]_t with its asymptotic law.
struct RSquaredReport {
  SamplingGrid grid;
  Column r2;          // NaN where [Xi,Xi]_t = 0
  Column mean_shift;  // -bias / [Xi,Xi], normalized scale
  Column variance;    // normalized scale, clipped at 0
  Interval ci;
};

/// Variance path (1/[Xi,Xi]^2)[R^4 A_Z + (1 - R^2)^2 (A_Xi - A_Z)] with A_X the
/// quarticity estimate (2/3) dt_bar^{-1} [X,X,X,X]. The CI recentres by the
/// report's bias correction. Throws DegenerateTotalSS when [Xi,Xi]_T = 0.
RSquaredReport r_squared(const Column& xi, const AnovaReport& report);

/// Global realized regression [Xi,S]_T / [S,S]_T; DegenerateRegressor when [S,S]_T = 0.
double fit_constant_beta(const Column& xi, const Column& s, const SamplingGrid& grid);

/// Test of the constant-beta family against the residual-QV estimate.
struct ParametricFit {
  std::string family = "constant";
  double theta_hat = 0.0;
  Column v_increments;  // dXi - theta_hat dS
  double u = 0.0;       // dt_bar^{-1/2} ([V,V]_T - <Z,Z>^(alpha)_T)
  double bias = 0.0;    // plug-in bias^(alpha)_T; U is centred at -bias under the null
  double null_sd = 0.0;
  double p_value = 1.0;
  double gap = 0.0;  // sqrt(dt_bar) U, estimates int (theta_0 - rho)^2 d<S,S>
  double level = 0.95;
  bool rejected = false;
  /// Influence-increment plug-ins eta_hat and [V,S]_T. Their product times 2
  /// is the first-order null sd, which vanishes for the least-squares theta_hat.
  double eta_hat = 0.0;
  double vs_terminal = 0.0;
  Index bootstrap = 0;
};

struct GofOptions {
  Index bootstrap = 99;     // wild-bootstrap replicates for the null sd
  std::uint64_t seed = 0;   // Rademacher stream
};

/// U statistic with a null sd from a wild bootstrap conditional on S:
/// Xi* = theta_hat S + sum xi_i dZ_hat_i with Rademacher xi, re-estimated at
/// the report's options. Two-sided normal p-value for U + bias.
ParametricFit u_statistic(const Column& xi, const Column& s, const SamplingGrid& grid, double theta_hat,
                          const AnovaReport& report, const GofOptions& options = {});

}  // namespace itoanova
