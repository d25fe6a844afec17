#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace latwalk {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// Standard error of the slope from the residual variance (0 for two points).
  double slope_stderr = 0.0;
};

/// Ordinary least squares y ≈ slope * x + intercept.
/// Throws Error{InsufficientSamples} for fewer than two points or constant x.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

/// Weighted least squares with weights w_i (e.g. 1 / var_i).
LinearFit weighted_least_squares(std::span<const double> x, std::span<const double> y, std::span<const double> w);

/// Spearman rank correlation with average ranks for ties; 0 when either side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

/// Wilson score interval for `successes` out of `n` at normal quantile z.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};
Interval wilson_interval(std::uint64_t successes, std::uint64_t n, double z = 1.959963984540054);

}  // namespace latwalk
