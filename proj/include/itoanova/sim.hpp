#pragma once

#include <cstdint>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "itoanova/series.hpp"

namespace itoanova {

/// dXi = rho dS + dZ with constant coefficients.
struct ConstantRho {
  double rho = 1.0;
  double sigma_s = 1.0;
  double sigma_z = 1.0;
};

/// rho_t = rho0 + sigma_rho * W^rho, a driftless martingale.
struct MartingaleRho {
  double rho0 = 1.0;
  double sigma_rho = 1.0;
  double sigma_s = 1.0;
  double sigma_z = 1.0;
};

/// Log-volatility v_t is Ornstein-Uhlenbeck with v_0 = theta_v and
/// dv = kappa_v (theta_v - v) dt + xi dW^v. S has volatility exp(v_t) and Z has
/// volatility sigma_z * exp(v_t), so <Z,Z>' is random. rho as in MartingaleRho.
struct StochVol {
  double kappa_v = 1.0;
  double theta_v = 0.0;
  double xi = 1.0;
  double rho0 = 1.0;
  double sigma_rho = 0.0;
  double sigma_z = 1.0;
};

/// Short rate dr = kappa (alpha - r) dt + gamma dW; S and Xi are zero-coupon
/// bond prices maturing at maturity1 < maturity2 (zero market price of risk).
struct VasicekBondPair {
  double kappa = 0.5;
  double alpha = 0.05;
  double gamma = 0.02;
  double maturity1 = 2.0;
  double maturity2 = 5.0;
  double r0 = 0.05;
};

using SimModel = std::variant<ConstantRho, MartingaleRho, StochVol, VasicekBondPair>;

std::string_view model_name(const SimModel& model);

/// Throws ConfigError naming the valid variants when "model" is unknown.
SimModel model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const SimModel& model);

/// Throws DegenerateModel on parameter invariants (negative volatility,
/// non-positive mean reversion, zero regressor volatility, bad maturities).
void validate_model(const SimModel& model, double horizon);

namespace vasicek {
/// B(t, T) = (1 - exp(-kappa (T - t))) / kappa.
double duration_factor(double kappa, double tau);
/// Closed-form zero-coupon price A(t,T) exp(-B(t,T) r), tau = T - t.
double bond_price(const VasicekBondPair& m, double r, double tau);
/// g'_r / f'_r for the longer (Xi) over the shorter (S) bond.
double hedge_ratio(const VasicekBondPair& m, double r, double t);
}  // namespace vasicek

/// Euler-Maruyama path on a uniform fine grid plus left-point ground truth.
struct FinePath {
  double horizon = 0.0;
  Index n_fine = 0;

  Column s, xi, z, rho;
  /// Instantaneous coefficients at each fine time: <S,S>', <Z,Z>', <Xi,S>'.
  Column spot_ss, spot_zz, spot_xis;
  /// Cumulative ground truth, zero at t = 0.
  Column qv_z, qv_s, qv_xi, cov_xis, int_rho2_dss, qv_rho;
  /// int <Xi,S>' d rho (Ito, left point) and int <rho,rho>' d<S,S>.
  Column int_cov_drho, int_rhoqv_dss;

  double step() const { return horizon / static_cast<double>(n_fine); }
  double time(Index j) const { return horizon * static_cast<double>(j) / static_cast<double>(n_fine); }
};

FinePath simulate(const SimModel& model, double horizon, Index n_fine, std::uint64_t seed);

/// Observed S and Xi on an observation grid; nothing else leaves the simulator
/// through this type.
struct Observation {
  PathSeries paths;
  std::vector<Index> fine_index;
  double max_snap_error = 0.0;
};

Observation subsample(const FinePath& fine, const SamplingGrid& grid);

/// Ground truth restricted to the observation grid (validation only).
struct GroundTruth {
  Column qv_z, qv_s, qv_xi, cov_xis, int_rho2_dss, rho, z;
  Column int_cov_drho, int_rhoqv_dss;
  /// int H' d<Z,Z> with H' taken interval-wise as dt_i / dt_bar.
  Column h_weighted_qv_z;
  /// 2 int H' (<Z,Z>')^2 du, summed on the observation grid.
  double tau = 0.0;
};

GroundTruth ground_truth(const FinePath& fine, const Observation& obs);

/// Sum of 2 (dt_i^2 / dt_bar) (<Z,Z>'(t_i))^2 over the observation grid.
double tau_true(const FinePath& fine, const SamplingGrid& grid, const std::vector<Index>& fine_index);

}  // namespace itoanova
