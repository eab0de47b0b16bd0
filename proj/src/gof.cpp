#include "itoanova/gof.hpp"

#include <cmath>
#include <limits>
#include <tuple>

#include "itoanova/rng.hpp"
#include "itoanova/stats.hpp"

namespace itoanova {

RSquaredReport r_squared(const Column& xi, const AnovaReport& report) {
  const auto& grid = report.grid;
  detail::require_aligned(xi.size(), grid, "Xi column");
  const Column total = realized_cov(xi, xi, grid).values;
  if (!(total(total.size() - 1) > 0.0)) fail(ErrorKind::DegenerateTotalSS, "[Xi,Xi]_T is zero");

  const double dt_bar = grid.mean_spacing();
  const Column a_z = report.avar.values;
  const Column a_xi = avar_estimate(xi, grid).values;
  const Index n = grid.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  RSquaredReport out;
  out.grid = grid;
  out.r2.resize(n);
  out.mean_shift.resize(n);
  out.variance.resize(n);
  Column center(n), half(n);
  const double z = stats::normal_quantile(0.5 * (1.0 + report.options.level));
  for (Index i = 0; i < n; ++i) {
    const double x = total(i);
    if (!(x > 0.0)) {
      out.r2(i) = out.mean_shift(i) = out.variance(i) = center(i) = half(i) = nan;
      continue;
    }
    const double r2 = 1.0 - report.estimate.values(i) / x;
    const double u = 1.0 - r2;
    out.r2(i) = r2;
    out.mean_shift(i) = -report.bias.values(i) / x;
    const double v = (r2 * r2 * a_z(i) + u * u * (a_xi(i) - a_z(i))) / (x * x);
    out.variance(i) = std::max(v, 0.0);
    center(i) = r2 + report.bias_correction(i) / x;
    half(i) = z * std::sqrt(dt_bar * out.variance(i));
  }
  out.ci = {report.options.level, center - half, center + half};
  return out;
}

double fit_constant_beta(const Column& xi, const Column& s, const SamplingGrid& grid) {
  const double ss = realized_cov(s, s, grid).terminal();
  if (!(ss > 0.0)) fail(ErrorKind::DegenerateRegressor, "[S,S]_T is zero");
  return realized_cov(xi, s, grid).terminal() / ss;
}

namespace {

// U and bias_T for given data and a finished report.
std::pair<double, double> centred_u(const Column& v_increments, const AnovaReport& report) {
  const double vv = cumulate(v_increments.cwiseProduct(v_increments)).coeff(v_increments.size());
  return {(vv - report.raw_estimate.terminal()) / std::sqrt(report.grid.mean_spacing()), report.bias.terminal()};
}

}  // namespace

ParametricFit u_statistic(const Column& xi, const Column& s, const SamplingGrid& grid, double theta_hat,
                          const AnovaReport& report, const GofOptions& options) {
  detail::require_aligned(xi.size(), grid, "Xi column");
  detail::require_aligned(s.size(), grid, "S column");
  if (!(report.grid == grid)) fail(ErrorKind::LengthMismatch, "report was computed on a different grid");
  if (options.bootstrap < 2) fail(ErrorKind::InvalidArgument, "bootstrap needs at least 2 replicates");
  const double dt_bar = grid.mean_spacing();

  ParametricFit fit;
  fit.theta_hat = theta_hat;
  fit.level = report.options.level;
  const Column ds = increments(s);
  fit.v_increments = increments(xi) - theta_hat * ds;
  std::tie(fit.u, fit.bias) = centred_u(fit.v_increments, report);
  fit.gap = std::sqrt(dt_bar) * fit.u;

  const double ss = ds.squaredNorm();
  fit.vs_terminal = fit.v_increments.dot(ds);
  fit.eta_hat = ss > 0.0 ? std::sqrt(fit.v_increments.cwiseProduct(ds).squaredNorm() / dt_bar) / ss : 0.0;

  // U + bias is degenerate at first order under the null (the least-squares
  // theta_hat makes [V,S]_T vanish), so its spread comes from the rho_hat noise.
  // Resample that noise with S held fixed.
  AnovaOptions opt = report.options;
  opt.isotonic = false;
  const Column& dz = report.residuals.increments;
  Xoshiro256 rng(stream_key({options.seed, 0x6f66ULL}));
  std::vector<double> draws;
  draws.reserve(static_cast<std::size_t>(options.bootstrap));
  Column dx(dz.size());
  for (Index b = 0; b < options.bootstrap; ++b) {
    for (Index i = 0; i < dz.size(); ++i) dx(i) = theta_hat * ds(i) + ((rng() >> 63) ? dz(i) : -dz(i));
    Column path = cumulate(dx);
    path.array() += xi(0);
    const AnovaReport rep = analyze(s, path, grid, opt);
    const double th = fit_constant_beta(path, s, grid);
    const auto [u, bias] = centred_u(increments(path) - th * ds, rep);
    draws.push_back(u + bias);
  }
  fit.bootstrap = options.bootstrap;
  fit.null_sd = std::sqrt(stats::variance(draws));

  // Values at rounding scale of dt_bar^{-1/2} [Xi,Xi]_T count as zero (exact fits).
  const double noise = 1e-10 * increments(xi).squaredNorm() / std::sqrt(dt_bar);
  double centred = fit.u + fit.bias;
  if (std::abs(centred) <= noise) centred = 0.0;
  if (fit.null_sd <= noise) fit.null_sd = 0.0;
  if (fit.null_sd > 0.0)
    fit.p_value = std::erfc(std::abs(centred / fit.null_sd) / std::numbers::sqrt2);
  else
    fit.p_value = centred == 0.0 ? 1.0 : 0.0;
  fit.rejected = fit.p_value < 1.0 - fit.level;
  return fit;
}

}  // namespace itoanova
