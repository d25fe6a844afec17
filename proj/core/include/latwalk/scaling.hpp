#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace latwalk {

struct ScalingRow {
  std::int64_t n = 0;
  std::int64_t k = 0;  ///< secondary parameter (k or j); 0 when unused
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Estimates along a geometric grid in n for one experiment label.
struct ScalingTable {
  std::string label;
  std::string model_hash;
  std::vector<ScalingRow> rows;

  /// Throws Error{InvalidArgument} unless n is strictly increasing and every estimate is positive.
  void validate() const;
};

struct PowerFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  std::vector<double> residuals;
  /// Extremes of estimate * n^(-target_exponent) and their ratio.
  double ratio_min = 0.0;
  double ratio_max = 0.0;
  double spread = 0.0;
};

/// Least squares on (log n, log estimate) plus the ratio-spread diagnostic
/// against `target_exponent`. Throws Error{InsufficientSamples} below two rows.
PowerFit fit_power(const ScalingTable& table, double target_exponent);

/// Reads rows of one label from a results CSV (columns as written by the CLI;
/// '#' lines are comments). An empty label selects the first label present.
ScalingTable read_scaling_csv(const std::string& path, const std::string& label = "");

}  // namespace latwalk
