#include "itoanova/series.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace itoanova {

namespace {

void check_times(std::span<const double> times) {
  if (times.size() < 2)
    fail(ErrorKind::TooFewPoints, "a grid needs at least two time points, got " +
                                      std::to_string(times.size()));
  for (std::size_t i = 0; i < times.size(); ++i)
    if (!std::isfinite(times[i]))
      fail(ErrorKind::NonFiniteTime, "time at index " + std::to_string(i) + " is not finite");
  if (times[0] != 0.0)
    fail(ErrorKind::FirstTimeNonzero, "first time must be 0, got " + std::to_string(times[0]));
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      fail(ErrorKind::NonMonotoneTime, "time at index " + std::to_string(i) +
                                           " does not exceed its predecessor");
}

void check_raw(const RawSeries& r, const char* what) {
  if (r.times.empty()) fail(ErrorKind::TooFewPoints, std::string(what) + " series is empty");
  if (r.times.size() != r.values.size())
    fail(ErrorKind::LengthMismatch, std::string(what) + " series has mismatched times/values");
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    if (!std::isfinite(r.times[i]))
      fail(ErrorKind::NonFiniteTime, std::string(what) + " time " + std::to_string(i));
    if (!std::isfinite(r.values[i]))
      fail(ErrorKind::FormatError, std::string(what) + " value " + std::to_string(i) + " not finite");
    if (i > 0 && !(r.times[i] > r.times[i - 1]))
      fail(ErrorKind::NonMonotoneTime, std::string(what) + " time " + std::to_string(i));
  }
}

// Value at the last observation at or before t; caller guarantees existence.
double carried(const RawSeries& r, double t) {
  auto it = std::upper_bound(r.times.begin(), r.times.end(), t);
  return r.values[static_cast<std::size_t>(std::distance(r.times.begin(), it)) - 1];
}

}  // namespace

SamplingGrid validate_grid(std::span<const double> times) { return SamplingGrid(times); }

SamplingGrid::SamplingGrid(std::span<const double> times) {
  check_times(times);
  auto t = std::make_shared<Column>(static_cast<Index>(times.size()));
  std::copy(times.begin(), times.end(), t->begin());
  const Index k = t->size() - 1;
  double mesh = 0.0;
  for (Index i = 0; i < k; ++i) mesh = std::max(mesh, (*t)(i + 1) - (*t)(i));
  mesh_ = mesh;
  dt_bar_ = (*t)(k) / static_cast<double>(k);
  times_ = std::move(t);
}

SamplingGrid::SamplingGrid() : SamplingGrid(Column::LinSpaced(2, 0.0, 1.0)) {}

SamplingGrid::SamplingGrid(const Column& times)
    : SamplingGrid(std::span<const double>(times.data(), static_cast<std::size_t>(times.size()))) {}

SamplingGrid SamplingGrid::uniform(double horizon, Index intervals) {
  if (intervals < 1 || !(horizon > 0.0))
    fail(ErrorKind::InvalidArgument, "uniform grid needs horizon > 0 and at least one interval");
  std::vector<double> t(static_cast<std::size_t>(intervals) + 1);
  for (Index i = 0; i <= intervals; ++i)
    t[static_cast<std::size_t>(i)] = horizon * static_cast<double>(i) / static_cast<double>(intervals);
  t.back() = horizon;
  return SamplingGrid(t);
}

SamplingGrid SamplingGrid::alternating(double horizon, Index intervals) {
  if (intervals < 1 || !(horizon > 0.0))
    fail(ErrorKind::InvalidArgument, "alternating grid needs horizon > 0 and at least one interval");
  std::vector<double> units(static_cast<std::size_t>(intervals) + 1, 0.0);
  for (Index i = 0; i < intervals; ++i)
    units[static_cast<std::size_t>(i) + 1] = units[static_cast<std::size_t>(i)] + (i % 2 == 0 ? 1.0 : 2.0);
  const double a = horizon / units.back();
  for (auto& u : units) u *= a;
  units.back() = horizon;
  return SamplingGrid(units);
}

Column SamplingGrid::spacings() const {
  const Index k = intervals();
  return times_->tail(k) - times_->head(k);
}

Index SamplingGrid::last_index_at_or_before(double t) const {
  const double tol = 1e-9 * dt_bar_;
  const auto* begin = times_->data();
  const auto* end = begin + times_->size();
  const auto* it = std::upper_bound(begin, end, t + tol);
  return static_cast<Index>(it - begin) - 1;
}

bool SamplingGrid::operator==(const SamplingGrid& other) const {
  return times_ == other.times_ || *times_ == *other.times_;
}

Column h_curve(const SamplingGrid& grid) {
  const Index k = grid.intervals();
  const Column dt = grid.spacings();
  Column h(k + 1);
  h(0) = 0.0;
  // Plain running sum: the terms are positive, so there is no cancellation.
  for (Index i = 0; i < k; ++i) h(i + 1) = h(i) + dt(i) * dt(i) / grid.mean_spacing();
  return h;
}

double h_curve_at(const SamplingGrid& grid, const Column& curve, double t) {
  const Index i = grid.last_index_at_or_before(t);
  if (i < 0) return 0.0;
  if (i == grid.intervals() || std::abs(t - grid[i]) <= 1e-12 * grid.mean_spacing()) return curve(i);
  const double w = (t - grid[i]) / (grid[i + 1] - grid[i]);
  return curve(i) + w * (curve(i + 1) - curve(i));
}

WindowedSlope h_prime_window(const SamplingGrid& grid, double h) {
  if (!(h > 0.0) || h > grid.horizon() * (1.0 + 1e-12))
    fail(ErrorKind::BandwidthOutOfRange,
         "window " + std::to_string(h) + " outside (0, " + std::to_string(grid.horizon()) + "]");
  const Column curve = h_curve(grid);
  WindowedSlope out;
  out.values.resize(grid.size());
  out.values(0) = std::numeric_limits<double>::quiet_NaN();
  for (Index j = 1; j < grid.size(); ++j) {
    const double t = grid[j];
    const double lo = std::max(t - h, 0.0);
    out.values(j) = (curve(j) - h_curve_at(grid, curve, lo)) / std::min(h, t);
  }
  return out;
}

GridFunctionals grid_functionals(const SamplingGrid& grid, double h) {
  return {h_curve(grid), h_prime_window(grid, h), grid.mean_spacing(), grid.mesh()};
}

PathSeries::PathSeries(SamplingGrid grid, std::vector<std::string> names, std::vector<Column> columns)
    : grid_(std::move(grid)), names_(std::move(names)), columns_(std::move(columns)) {
  if (names_.size() != columns_.size())
    fail(ErrorKind::LengthMismatch, "column names and columns differ in count");
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (columns_[c].size() != grid_.size())
      fail(ErrorKind::LengthMismatch, "column '" + names_[c] + "' has " +
                                          std::to_string(columns_[c].size()) + " entries, grid has " +
                                          std::to_string(grid_.size()));
    if (!columns_[c].allFinite())
      fail(ErrorKind::FormatError, "column '" + names_[c] + "' contains non-finite values");
  }
}

bool PathSeries::has_column(std::string_view name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

const Column& PathSeries::column(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) fail(ErrorKind::FormatError, "missing column '" + std::string(name) + "'");
  return columns_[static_cast<std::size_t>(std::distance(names_.begin(), it))];
}

PathSeries previous_tick_align(const RawSeries& s, const RawSeries& xi, const std::string& s_name,
                               const std::string& xi_name) {
  check_raw(s, "S");
  check_raw(xi, "Xi");
  const double lo = std::max(s.times.front(), xi.times.front());
  const double hi = std::min(s.times.back(), xi.times.back());
  if (lo > hi) fail(ErrorKind::NoOverlap, "series observation ranges do not intersect");

  std::vector<double> merged;
  merged.reserve(s.times.size() + xi.times.size());
  std::merge(s.times.begin(), s.times.end(), xi.times.begin(), xi.times.end(),
             std::back_inserter(merged));
  merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
  std::erase_if(merged, [&](double t) { return t < lo || t > hi; });
  if (merged.size() < 2)
    fail(ErrorKind::NoOverlap, "common observation range holds fewer than two time stamps");

  const auto n = static_cast<Index>(merged.size());
  Column times(n), sv(n), xv(n);
  for (Index i = 0; i < n; ++i) {
    const double t = merged[static_cast<std::size_t>(i)];
    times(i) = t - lo;
    sv(i) = carried(s, t);
    xv(i) = carried(xi, t);
  }
  return PathSeries(SamplingGrid(times), {s_name, xi_name}, {std::move(sv), std::move(xv)});
}

}  // namespace itoanova
