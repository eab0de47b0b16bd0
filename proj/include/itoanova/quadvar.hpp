#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>

#include "itoanova/series.hpp"

namespace itoanova {

/// Neumaier-compensated running sum.
template <typename Scalar>
class CompensatedSum {
 public:
  void add(Scalar v) {
    const Scalar t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  Scalar value() const { return sum_ + comp_; }

 private:
  Scalar sum_{0};
  Scalar comp_{0};
};

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// First differences x_{i+1} - x_i as an expression.
template <typename Derived>
auto increments(const Eigen::MatrixBase<Derived>& x) {
  const Index k = x.size() - 1;
  return x.tail(k) - x.head(k);
}

/// Cumulative path of per-interval terms: out(0) = 0, out(j) = sum_{i<j} terms(i).
template <typename Derived>
Vec<typename Derived::Scalar> cumulate(const Eigen::MatrixBase<Derived>& terms) {
  using Scalar = typename Derived::Scalar;
  Vec<Scalar> out(terms.size() + 1);
  CompensatedSum<Scalar> acc;
  out(0) = Scalar(0);
  for (Index i = 0; i < terms.size(); ++i) {
    acc.add(terms(i));
    out(i + 1) = acc.value();
  }
  return out;
}

/// sum_{i<j} dX_i dY_i at every j.
template <typename DX, typename DY>
Vec<typename DX::Scalar> cumulative_cross(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
  return cumulate(increments(x).cwiseProduct(increments(y)));
}

/// sum_{i<j} (dX_i)^4 at every j.
template <typename DX>
Vec<typename DX::Scalar> cumulative_quartic(const Eigen::MatrixBase<DX>& x) {
  return cumulate(increments(x).array().square().square().matrix());
}

/// Cumulative step path of a realized or estimated quadratic variation.
struct QvPath {
  SamplingGrid grid;
  Column values;

  double terminal() const { return values(values.size() - 1); }
};

namespace detail {
inline void require_aligned(Index n, const SamplingGrid& grid, const char* what) {
  if (n != grid.size())
    fail(ErrorKind::LengthMismatch, std::string(what) + " has " + std::to_string(n) +
                                        " values, grid has " + std::to_string(grid.size()));
}
}  // namespace detail

/// Observed covariation [X, Y] at every grid time.
template <typename DX, typename DY>
QvPath realized_cov(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y,
                    const SamplingGrid& grid) {
  detail::require_aligned(x.size(), grid, "first column");
  detail::require_aligned(y.size(), grid, "second column");
  return {grid, cumulative_cross(x.template cast<double>(), y.template cast<double>())};
}

/// Observed fourth-order variation [X, X, X, X].
template <typename DX>
QvPath quartic(const Eigen::MatrixBase<DX>& x, const SamplingGrid& grid) {
  detail::require_aligned(x.size(), grid, "column");
  return {grid, cumulative_quartic(x.template cast<double>())};
}

/// (2/3) dt_bar^{-1} [Z, Z, Z, Z]: estimates int 2 H'(u) (d<Z,Z>/du)^2 du.
template <typename DX>
QvPath avar_estimate(const Eigen::MatrixBase<DX>& zhat, const SamplingGrid& grid) {
  QvPath q = quartic(zhat, grid);
  q.values *= 2.0 / (3.0 * grid.mean_spacing());
  return q;
}

}  // namespace itoanova
