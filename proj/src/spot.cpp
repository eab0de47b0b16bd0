#include "itoanova/spot.hpp"

#include <algorithm>
#include <cmath>

namespace itoanova {

namespace {

// Fills indices without a full window (and any pending floor-rejected prefix)
// with the first accepted value.
void backfill(SpotSeries& out, Index first_accepted) {
  for (Index i = 0; i < first_accepted; ++i) out.values(i) = out.values(first_accepted);
}

double window_sum(const Column& cumulative, Index start, Index i) { return cumulative(i) - cumulative(start); }

}  // namespace

Bandwidth Bandwidth::from_c(double c, const SamplingGrid& grid) {
  if (!(c > 0.0) || !std::isfinite(c))
    fail(ErrorKind::BandwidthOutOfRange, "smoothing constant c must be finite and > 0");
  return from_h(std::sqrt(grid.mean_spacing()) / c, grid);
}

Bandwidth Bandwidth::from_h(double h, const SamplingGrid& grid) {
  const double T = grid.horizon();
  if (!(h > 0.0) || h > T * (1.0 + 1e-12))
    fail(ErrorKind::BandwidthOutOfRange,
         "window " + std::to_string(h) + " outside (0, " + std::to_string(T) + "]");
  if (h < 2.0 * grid.mesh() * (1.0 - 1e-12))
    fail(ErrorKind::BandwidthOutOfRange, "window " + std::to_string(h) + " shorter than twice the mesh " +
                                             std::to_string(grid.mesh()));
  return {std::sqrt(grid.mean_spacing()) / h, std::min(h, T)};
}

std::vector<Index> window_starts(const SamplingGrid& grid, double h) {
  const Index n = grid.size();
  const double tol = 1e-9 * grid.mean_spacing();
  std::vector<Index> start(static_cast<std::size_t>(n), -1);
  Index lo = 0;
  for (Index i = 0; i < n; ++i) {
    const double left = grid[i] - h;
    if (left < -tol) continue;
    while (grid[lo] < left - tol) ++lo;
    start[static_cast<std::size_t>(i)] = lo;
  }
  return start;
}

SpotSeries spot_from_path(const Column& cumulative, const SamplingGrid& grid, const Bandwidth& bw) {
  detail::require_aligned(cumulative.size(), grid, "cumulative path");
  const auto start = window_starts(grid, bw.h);
  SpotSeries out{grid, Column::Zero(grid.size()), std::vector<std::uint8_t>(static_cast<std::size_t>(grid.size()), 0)};
  out.valid_from = grid.size();
  for (Index i = 0; i < grid.size(); ++i) {
    const Index lo = start[static_cast<std::size_t>(i)];
    if (lo < 0) continue;
    out.values(i) = window_sum(cumulative, lo, i) / bw.h;
    out.valid[static_cast<std::size_t>(i)] = 1;
    out.valid_from = std::min(out.valid_from, i);
  }
  backfill(out, out.valid_from);
  return out;
}

SpotSeries rho_hat(const Column& s, const Column& xi, const SamplingGrid& grid, const Bandwidth& bw,
                   double floor) {
  return estimate_spot(s, xi, grid, bw, floor).rho;
}

SpotEstimates estimate_spot(const Column& s, const Column& xi, const SamplingGrid& grid, const Bandwidth& bw,
                            double floor) {
  detail::require_aligned(s.size(), grid, "S column");
  detail::require_aligned(xi.size(), grid, "Xi column");
  if (!(floor > 0.0)) fail(ErrorKind::InvalidArgument, "denominator floor must be > 0");

  SpotEstimates est;
  est.bw = bw;
  est.window_start = window_starts(grid, bw.h);

  const Column ds = increments(s);
  const Column dx = increments(xi);
  const Column c_ss = cumulate(ds.cwiseProduct(ds));
  const Column c_xs = cumulate(dx.cwiseProduct(ds));
  const Column c_xx = cumulate(dx.cwiseProduct(dx));
  // Fourth-order window sums for the sandwich variance of rho_hat.
  const Column c_xxss = cumulate(dx.cwiseProduct(dx).cwiseProduct(ds).cwiseProduct(ds));
  const Column c_xsss = cumulate(dx.cwiseProduct(ds).cwiseProduct(ds).cwiseProduct(ds));
  const Column c_ssss = cumulate(ds.array().square().square().matrix());

  est.ss = spot_from_path(c_ss, grid, bw);
  est.xis = spot_from_path(c_xs, grid, bw);
  est.xixi = spot_from_path(c_xx, grid, bw);

  const Index n = grid.size();
  const double abs_floor = floor * c_ss(n - 1) / grid.horizon();

  SpotSeries& rho = est.rho;
  rho.grid = grid;
  rho.values = Column::Zero(n);
  rho.valid.assign(static_cast<std::size_t>(n), 0);
  rho.valid_from = est.ss.valid_from;
  est.rho_noise_var = Column::Zero(n);

  Index first_accepted = -1;
  for (Index i = rho.valid_from; i < n; ++i) {
    const Index lo = est.window_start[static_cast<std::size_t>(i)];
    const double denom = window_sum(c_ss, lo, i);
    if (!(denom / bw.h >= abs_floor) || denom <= 0.0) {
      ++rho.floor_hits;
      if (first_accepted >= 0) {
        rho.values(i) = rho.values(i - 1);
        est.rho_noise_var(i) = est.rho_noise_var(i - 1);
      }
      continue;
    }
    const double r = window_sum(c_xs, lo, i) / denom;
    rho.values(i) = r;
    rho.valid[static_cast<std::size_t>(i)] = 1;
    const double num = window_sum(c_xxss, lo, i) - 2.0 * r * window_sum(c_xsss, lo, i) + r * r * window_sum(c_ssss, lo, i);
    est.rho_noise_var(i) = std::max(num, 0.0) / (denom * denom);
    if (first_accepted < 0) first_accepted = i;
  }
  if (first_accepted < 0)
    fail(ErrorKind::NoValidWindow, "no window has a regressor variation above the floor");
  for (Index i = 0; i < first_accepted; ++i) {
    rho.values(i) = rho.values(first_accepted);
    est.rho_noise_var(i) = est.rho_noise_var(first_accepted);
  }

  // <rho,rho>' from differences of rho_hat over disjoint adjacent windows.
  // E[(rho_hat_i - rho_hat_l)^2] = <rho,rho>' (t_i - t_l - h/3) + v_i + v_l.
  Column raw = Column::Zero(n);
  std::vector<std::uint8_t> raw_ok(static_cast<std::size_t>(n), 0);
  for (Index i = 0; i < n; ++i) {
    if (grid[i] < 2.0 * bw.h * (1.0 - 1e-12) || i < first_accepted) continue;
    const Index l = grid.last_index_at_or_before(grid[i] - bw.h);
    if (l < first_accepted || est.window_start[static_cast<std::size_t>(l)] < 0) continue;
    const double d = rho.values(i) - rho.values(l);
    const double lag = grid[i] - grid[l] - bw.h / 3.0;
    raw(i) = (d * d - est.rho_noise_var(i) - est.rho_noise_var(l)) / lag;
    raw_ok[static_cast<std::size_t>(i)] = 1;
  }
  est.rho_qv_rate = Column::Zero(n);
  Index first_rate = -1;
  {
    // Average the raw values over the trailing window (t_i - h, t_i].
    double sum = 0.0;
    Index count = 0, tail = 0;
    for (Index i = 0; i < n; ++i) {
      if (raw_ok[static_cast<std::size_t>(i)]) {
        sum += raw(i);
        ++count;
      }
      while (grid[tail] <= grid[i] - bw.h) {
        if (raw_ok[static_cast<std::size_t>(tail)]) {
          sum -= raw(tail);
          --count;
        }
        ++tail;
      }
      if (count > 0 && grid[i] >= 3.0 * bw.h * (1.0 - 1e-12)) {
        est.rho_qv_rate(i) = sum / static_cast<double>(count);
        if (first_rate < 0) first_rate = i;
      } else if (first_rate >= 0) {
        est.rho_qv_rate(i) = est.rho_qv_rate(i - 1);
      }
    }
  }
  if (first_rate < 0) {
    // Horizon too short for two disjoint windows plus smoothing: fall back to
    // whatever raw values exist, else report no roughness.
    const double total = raw.sum();
    Index count = 0;
    for (auto ok : raw_ok) count += ok;
    est.rho_qv_rate.setConstant(count > 0 ? total / static_cast<double>(count) : 0.0);
  } else {
    for (Index i = 0; i < first_rate; ++i) est.rho_qv_rate(i) = est.rho_qv_rate(first_rate);
  }
  return est;
}

Column rho_variance_profile(const Column& rho_qv_rate, const Column& xixi, const Column& ss, const Column& rho,
                            const Column& h_prime, double c) {
  const Index n = rho.size();
  if (rho_qv_rate.size() != n || xixi.size() != n || ss.size() != n || h_prime.size() != n)
    fail(ErrorKind::LengthMismatch, "variance profile inputs differ in length");
  Column v(n);
  for (Index i = 0; i < n; ++i) {
    const double hp = std::isfinite(h_prime(i)) ? h_prime(i) : (n > 1 ? h_prime(1) : 1.0);
    const double ratio = ss(i) > 0.0 ? xixi(i) / ss(i) - rho(i) * rho(i) : 0.0;
    v(i) = std::max(0.0, rho_qv_rate(i) / (3.0 * c) + c * hp * ratio);
  }
  return v;
}

Column rho_variance_profile(const SpotEstimates& spot, const WindowedSlope& h_prime) {
  return rho_variance_profile(spot.rho_qv_rate, spot.xixi.values, spot.ss.values, spot.rho.values,
                              h_prime.values, spot.bw.c);
}

}  // namespace itoanova
