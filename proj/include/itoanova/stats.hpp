#pragma once

#include <span>
#include <vector>

namespace itoanova::stats {

double normal_cdf(double x);
/// Inverse of normal_cdf on (0, 1).
double normal_quantile(double p);

double mean(std::span<const double> x);
/// Unbiased sample variance (M - 1 denominator).
double variance(std::span<const double> x);
double median(std::span<const double> x);

/// Kolmogorov-Smirnov distance between the empirical law of x and N(0, 1).
double ks_distance_normal(std::span<const double> x);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};

/// Ordinary least squares y = intercept + slope * x.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

}  // namespace itoanova::stats
