#pragma once

#include <Eigen/Core>

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "itoanova/error.hpp"

namespace itoanova {

/// One value per grid time (or per grid interval, for increments).
using Column = Eigen::VectorXd;
using Index = Eigen::Index;

/// Strictly increasing observation times 0 = t_0 < ... < t_k = T.
///
/// The time storage is shared and immutable, so copies are cheap and a grid
/// can be handed to any number of paths and threads.
class SamplingGrid {
 public:
  static constexpr double kDefaultMeshRatioCap = 50.0;

  /// Placeholder single-interval grid [0, 1], so aggregates can default-construct.
  SamplingGrid();
  /// Validating constructor; see validate_grid.
  explicit SamplingGrid(std::span<const double> times);
  explicit SamplingGrid(const Column& times);

  static SamplingGrid uniform(double horizon, Index intervals);
  /// Spacings a, 2a, a, 2a, ... scaled so the last time equals horizon.
  static SamplingGrid alternating(double horizon, Index intervals);

  const Column& times() const { return *times_; }
  double operator[](Index i) const { return (*times_)(i); }
  Index size() const { return times_->size(); }
  Index intervals() const { return times_->size() - 1; }
  double horizon() const { return (*times_)(intervals()); }

  /// Largest spacing, delta.
  double mesh() const { return mesh_; }
  /// T / k.
  double mean_spacing() const { return dt_bar_; }
  double mesh_ratio() const { return mesh_ / dt_bar_; }
  bool mesh_ratio_ok(double cap = kDefaultMeshRatioCap) const { return mesh_ratio() <= cap; }

  /// Delta t_i for i = 0..k-1.
  Column spacings() const;

  /// Largest index i with t_i <= t (within a relative tolerance of the mean
  /// spacing); -1 when t precedes t_0.
  Index last_index_at_or_before(double t) const;

  bool operator==(const SamplingGrid& other) const;

 private:
  std::shared_ptr<const Column> times_;
  double mesh_ = 0.0;
  double dt_bar_ = 0.0;
};

SamplingGrid validate_grid(std::span<const double> times);

/// H_n at every grid time: sum over completed intervals of (dt_i)^2 / dt_bar.
Column h_curve(const SamplingGrid& grid);

/// H_n at an arbitrary time, linear between grid times (so H_n(t) = t on uniform grids).
double h_curve_at(const SamplingGrid& grid, const Column& curve, double t);

/// Windowed slope [H_n(t_j) - H_n(max(t_j - h, 0))] / min(h, t_j).
/// Index 0 has no window and is NaN; valid_from is always 1.
struct WindowedSlope {
  Column values;
  Index valid_from = 1;
};

WindowedSlope h_prime_window(const SamplingGrid& grid, double h);

struct GridFunctionals {
  Column h_curve;
  WindowedSlope h_prime;
  double dt_bar = 0.0;
  double mesh = 0.0;
};

GridFunctionals grid_functionals(const SamplingGrid& grid, double h);

/// Named real-valued columns aligned to one grid.
class PathSeries {
 public:
  PathSeries(SamplingGrid grid, std::vector<std::string> names, std::vector<Column> columns);

  const SamplingGrid& grid() const { return grid_; }
  const std::vector<std::string>& names() const { return names_; }
  bool has_column(std::string_view name) const;
  /// Throws FormatError naming the column when absent.
  const Column& column(std::string_view name) const;
  const Column& column(std::size_t i) const { return columns_.at(i); }

 private:
  SamplingGrid grid_;
  std::vector<std::string> names_;
  std::vector<Column> columns_;
};

/// A single asynchronously sampled series; times need not start at zero.
struct RawSeries {
  std::vector<double> times;
  std::vector<double> values;
};

/// Previous-tick alignment of two asynchronous series onto the union of their
/// time stamps inside the common observation range, re-based to start at 0.
PathSeries previous_tick_align(const RawSeries& s, const RawSeries& xi,
                               const std::string& s_name = "S",
                               const std::string& xi_name = "Xi");

}  // namespace itoanova
