#include "itoanova/anova.hpp"

#include <cmath>

#include "itoanova/stats.hpp"

namespace itoanova {

namespace {

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    fail(ErrorKind::AlphaOutOfRange, "alpha must lie in [0, 1], got " + std::to_string(alpha));
}

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0))
    fail(ErrorKind::LevelOutOfRange, "level must lie in (0, 1), got " + std::to_string(level));
}

void check_intervals(const Column& c, Index k, const char* what) {
  if (c.size() != k)
    fail(ErrorKind::LengthMismatch, std::string(what) + " has " + std::to_string(c.size()) +
                                        " entries, expected " + std::to_string(k));
}

}  // namespace

ResidualSeries residuals(const Column& xi, const Column& s, const Column& rho, const SamplingGrid& grid) {
  detail::require_aligned(xi.size(), grid, "Xi column");
  detail::require_aligned(s.size(), grid, "S column");
  detail::require_aligned(rho.size(), grid, "rho path");
  const Index k = grid.intervals();
  ResidualSeries r{grid, increments(xi) - rho.head(k).cwiseProduct(increments(s)), Column()};
  if (!r.increments.allFinite()) fail(ErrorKind::InvalidArgument, "residual increments are not finite");
  r.path = cumulate(r.increments);
  return r;
}

ResidualSeries residuals(const Column& xi, const Column& s, const SpotSeries& rho, const SamplingGrid& grid) {
  return residuals(xi, s, rho.values, grid);
}

Column qv_alpha_increments(const ResidualSeries& res, const Column& xi, const Column& s, const Column& rho,
                           double alpha) {
  check_alpha(alpha);
  const auto& grid = res.grid;
  detail::require_aligned(xi.size(), grid, "Xi column");
  detail::require_aligned(s.size(), grid, "S column");
  detail::require_aligned(rho.size(), grid, "rho path");
  const Index k = grid.intervals();
  check_intervals(res.increments, k, "residual increments");
  const Column dz = res.increments;
  const Column other = increments(xi) + rho.head(k).cwiseProduct(increments(s));
  return dz.cwiseProduct((1.0 - alpha) * dz + alpha * other);
}

QvPath qv_alpha(const ResidualSeries& res, const Column& xi, const Column& s, const Column& rho, double alpha) {
  return {res.grid, cumulate(qv_alpha_increments(res, xi, s, rho, alpha))};
}

Column isotonic_projection(const Column& path) {
  // Blocks of (mean, weight) merged while they violate monotonicity.
  std::vector<double> level;
  std::vector<Index> weight;
  for (Index i = 0; i < path.size(); ++i) {
    level.push_back(path(i));
    weight.push_back(1);
    while (level.size() > 1 && level[level.size() - 2] > level.back()) {
      const double w1 = static_cast<double>(weight[weight.size() - 2]);
      const double w2 = static_cast<double>(weight.back());
      const double merged = (w1 * level[level.size() - 2] + w2 * level.back()) / (w1 + w2);
      const Index wsum = weight[weight.size() - 2] + weight.back();
      level.pop_back();
      weight.pop_back();
      level.back() = merged;
      weight.back() = wsum;
    }
  }
  Column out(path.size());
  Index pos = 0;
  for (std::size_t b = 0; b < level.size(); ++b)
    for (Index j = 0; j < weight[b]; ++j) out(pos++) = level[b];
  return out;
}

BiasInputs bias_inputs(const SpotEstimates& spot, const ResidualSeries& res, const Column& xi, const Column& s,
                       const SamplingGrid& grid) {
  const Index k = grid.intervals();
  const Column ds = increments(s);
  const Column dxi = increments(xi);
  const auto hp = h_prime_window(grid, spot.bw.h);

  BiasInputs in;
  in.c = spot.bw.c;
  in.xis_rate.resize(k);
  in.drho = increments(spot.rho.values);
  in.rho_qv = spot.rho_qv_rate.head(k);
  in.dss = ds.cwiseProduct(ds);
  in.dzz = dxi.cwiseProduct(res.increments);
  in.h_prime = hp.values.tail(k);
  for (Index i = 0; i < k; ++i) {
    // Spot <Xi,S>' from the window ending at or before t_i - h, disjoint from
    // the windows that drive rho_hat_i and rho_hat_{i+1}.
    const Index lag = grid.last_index_at_or_before(grid[i] - spot.bw.h);
    in.xis_rate(i) = spot.xis.values(std::max<Index>(lag, 0));
  }
  return in;
}

Column bias_alpha_increments(const BiasInputs& in, double alpha) {
  check_alpha(alpha);
  if (!(in.c > 0.0)) fail(ErrorKind::BandwidthOutOfRange, "bias needs c > 0");
  const Index k = in.drho.size();
  check_intervals(in.xis_rate, k, "<Xi,S>' plug-in");
  check_intervals(in.rho_qv, k, "<rho,rho>' plug-in");
  check_intervals(in.dss, k, "d<S,S> plug-in");
  check_intervals(in.dzz, k, "d<Z,Z> plug-in");
  check_intervals(in.h_prime, k, "H' plug-in");
  const double c = in.c;
  const Column ito = in.xis_rate.cwiseProduct(in.drho);
  const Column d = in.rho_qv.cwiseProduct(in.dss) / (3.0 * c) + c * in.h_prime.cwiseProduct(in.dzz);
  return (alpha / c) * ito + (1.0 - 2.0 * alpha) * d;
}

QvPath bias_alpha(const BiasInputs& in, const SamplingGrid& grid, double alpha) {
  Column terms = bias_alpha_increments(in, alpha);
  check_intervals(terms, grid.intervals(), "bias terms");
  return {grid, cumulate(terms)};
}

double unit_band_probability(double c) {
  if (!(c > 0.0)) return 0.0;
  // Reflection principle: sum_k (-1)^k [Phi((2k+1)c) - Phi((2k-1)c)], paired in +/-k.
  auto mass = [](double a, double b) {  // Phi(b) - Phi(a), 0 <= a < b
    return 0.5 * (std::erfc(a / std::numbers::sqrt2) - std::erfc(b / std::numbers::sqrt2));
  };
  double p = 1.0 - std::erfc(c / std::numbers::sqrt2);  // k = 0
  for (int k = 1;; ++k) {
    const double term = 2.0 * mass((2.0 * k - 1.0) * c, (2.0 * k + 1.0) * c);
    p += (k % 2 ? -term : term);
    if (term < 1e-12) break;
  }
  return p;
}

double unit_band_constant(double level) {
  check_level(level);
  double lo = 1e-3, hi = 40.0;
  while (hi - lo > 1e-14 * hi) {
    const double mid = 0.5 * (lo + hi);
    (unit_band_probability(mid) < level ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Interval pointwise_ci(const QvPath& estimate, const Column& correction, const QvPath& avar, double level) {
  check_level(level);
  const Index n = estimate.values.size();
  if (correction.size() != n || avar.values.size() != n)
    fail(ErrorKind::LengthMismatch, "confidence interval inputs differ in length");
  const double z = stats::normal_quantile(0.5 * (1.0 + level));
  const double dt_bar = estimate.grid.mean_spacing();
  const Column center = estimate.values - correction;
  const Column half = z * (dt_bar * avar.values.cwiseMax(0.0)).cwiseSqrt();
  return {level, center - half, center + half};
}

GlobalBand global_band(const QvPath& estimate, const Column& correction, const QvPath& avar, double level) {
  check_level(level);
  const Index n = estimate.values.size();
  if (correction.size() != n || avar.values.size() != n)
    fail(ErrorKind::LengthMismatch, "band inputs differ in length");
  GlobalBand b;
  b.level = level;
  b.tau_hat = avar.terminal();
  if (!(b.tau_hat > 0.0))
    fail(ErrorKind::DegenerateTau, "estimated tau must be > 0, got " + std::to_string(b.tau_hat));
  b.c_unit = unit_band_constant(level);
  b.c_tau = std::sqrt(b.tau_hat) * b.c_unit;
  b.half_width = std::sqrt(estimate.grid.mean_spacing()) * b.c_tau;
  const Column center = estimate.values - correction;
  b.lower = center.array() - b.half_width;
  b.upper = center.array() + b.half_width;
  return b;
}

void validate_options(const AnovaOptions& o) {
  check_alpha(o.alpha);
  check_level(o.level);
  if (!(o.c > 0.0) || !std::isfinite(o.c))
    fail(ErrorKind::BandwidthOutOfRange, "smoothing constant c must be finite and > 0");
  if (!(o.floor > 0.0)) fail(ErrorKind::InvalidArgument, "denominator floor must be > 0");
}

AnovaReport analyze(const Column& s, const Column& xi, const SamplingGrid& grid, const AnovaOptions& options) {
  validate_options(options);
  AnovaReport r;
  r.grid = grid;
  r.options = options;
  r.bw = Bandwidth::from_c(options.c, grid);
  r.spot = estimate_spot(s, xi, grid, r.bw, options.floor);
  r.residuals = residuals(xi, s, r.spot.rho.values, grid);
  r.raw_estimate = qv_alpha(r.residuals, xi, s, r.spot.rho.values, options.alpha);
  r.estimate = r.raw_estimate;
  if (options.isotonic) r.estimate.values = isotonic_projection(r.raw_estimate.values);
  r.bias = bias_alpha(bias_inputs(r.spot, r.residuals, xi, s, grid), grid, options.alpha);
  r.bias_correction = options.bias_correct ? Column(std::sqrt(grid.mean_spacing()) * r.bias.values)
                                           : Column(Column::Zero(grid.size()));
  r.avar = avar_estimate(r.residuals.path, grid);
  r.ci = pointwise_ci(r.estimate, r.bias_correction, r.avar, options.level);
  if (r.avar.terminal() > 0.0) r.band = global_band(r.estimate, r.bias_correction, r.avar, options.level);

  auto& d = r.diag;
  d.burn_in_points = r.spot.rho.valid_from;
  d.burn_in_span = r.spot.rho.valid_from < grid.size() ? grid[r.spot.rho.valid_from] : grid.horizon();
  d.floor_hits = r.spot.rho.floor_hits;
  d.thin_window = r.bw.thin(grid);
  d.mesh_ratio = grid.mesh_ratio();
  d.mesh_ratio_ok = grid.mesh_ratio_ok();
  d.isotonic_applied = options.isotonic;
  return r;
}

}  // namespace itoanova
