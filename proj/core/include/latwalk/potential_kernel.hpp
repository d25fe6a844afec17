#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "latwalk/lattice.hpp"
#include "latwalk/walk_model.hpp"

namespace latwalk {

enum class KernelMethod { Series, Fourier, Exact };

std::string_view to_string(KernelMethod m);

struct KernelValue {
  double value = 0.0;
  double error = 0.0;
  KernelMethod method = KernelMethod::Exact;
};

// ---------------------------------------------------------------------------
// Series evaluation (the defining limit, used as the independent oracle)

struct Smoothing {
  enum class Kind { Cesaro, Abel };
  Kind kind = Kind::Cesaro;
  double r = 0.999;

  static Smoothing cesaro() { return {}; }
  static Smoothing abel(double r) { return {Kind::Abel, r}; }
};

struct SeriesOptions {
  std::int64_t n_terms = 2000;
  Smoothing smoothing = Smoothing::cesaro();
  /// Throw Error{BudgetExceeded} when the error estimate exceeds this.
  std::optional<double> tolerance;
  /// The convolution box after j steps has half-width about
  /// box_scale * sqrt(lambda_max * j * log(j + 2)) coordinates.
  double box_scale = 4.0;
};

/// Partial sums of sum_j [P(S_j = 0) - P(S_j = z)] with P(S_j = .) from
/// iterated convolution on a growing box; mass pushed out of the box is
/// tracked and added to the error bound.
///
/// Cesaro: consecutive partial sums are averaged (period-2 parity
/// oscillation cancels), then Richardson-extrapolated in 1/n; the error is
/// the change between the n/2 and n extrapolants plus the mass-loss bound.
/// Abel(r): sum r^j d_j; the error converts |A(r) - A(r^2)| into a bias bound
/// (infinite when r is too far from 1) and adds the truncated tail.
std::vector<KernelValue> kernel_series(const WalkModel& model, std::span<const Point> points,
                                       const SeriesOptions& options = {});
KernelValue kernel_series(const WalkModel& model, Point z, std::int64_t n_terms,
                          Smoothing smoothing = Smoothing::cesaro());

// ---------------------------------------------------------------------------
// Dual-torus quadrature (production path)

struct QuadratureSpec {
  int order = 16;              ///< Gauss-Legendre nodes per uniform panel
  int graded_order = 12;       ///< nodes per geometrically graded panel near 0
  int check_drop = 2;          ///< the check rule uses order - check_drop nodes
  double periods_per_panel = 2.0;
  int min_panels = 8;
  double target = 1e-8;
};

/// Evaluates a(x) = (2pi)^-2 \int Re[(1 - e^{-i theta.x}) / (1 - phi(theta))]
/// over the torus for all |x_j|, |x_k| <= max_coordinate. The singular cell
/// around theta = 0 uses the local expansion 1 - phi ≈ theta^T Q theta / 2;
/// the error estimate is the gap to a lower-order rule on the same panels.
/// Throws Error{PeriodicWalk} when 1 - phi vanishes off the origin.
class FourierKernel {
 public:
  FourierKernel(const WalkModel& model, std::int32_t max_coordinate, QuadratureSpec spec = {});

  KernelValue operator()(Point z) const;
  std::int32_t max_coordinate() const { return max_coord_; }

 private:
  struct Rule {
    std::vector<double> nodes;
    std::vector<std::uint8_t> inner;
    std::vector<std::complex<double>> weights;  // w_a w_b / (1 - phi), inner x inner zeroed
    std::complex<double> total;
  };
  Rule build(int order, int graded_order) const;
  double evaluate(const Rule& rule, Point z) const;
  double inner_cell(Point z) const;

  std::vector<Step> steps_;
  double q_[2][2]{};  // coordinate second moments
  std::int32_t max_coord_;
  QuadratureSpec spec_;
  int panels_ = 0;
  int levels_ = 0;
  double inner_half_width_ = 0.0;
  Rule main_, check_;
};

KernelValue kernel_fourier(const WalkModel& model, Point z, QuadratureSpec spec = {});

// ---------------------------------------------------------------------------

/// a(z) with a persistent cache. Concurrent lookups are safe; inserts take an
/// exclusive lock. Non-generating walks fall back to the series.
class PotentialKernel {
 public:
  explicit PotentialKernel(WalkModel model, QuadratureSpec spec = {}, SeriesOptions fallback = {});

  const WalkModel& model() const { return model_; }

  KernelValue value(Point z);
  double operator()(Point z) { return value(z).value; }

  /// Computes every uncached point in one pass.
  void prefetch(std::span<const Point> points);

  std::size_t cache_size() const;

  /// CSV rows: model_hash,x,y,value,err,method. Rows for other models are ignored.
  void load_cache(const std::string& path);
  void save_cache(const std::string& path) const;

  std::optional<double> fitted_sigma2;
  std::optional<double> fitted_kbar;

 private:
  WalkModel model_;
  QuadratureSpec spec_;
  SeriesOptions fallback_;
  bool periodic_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<Point, KernelValue, PointHash> cache_;
  std::shared_ptr<const FourierKernel> evaluator_;
};

struct RadiiWindow {
  double r_min = 50.0;
  double r_max = 200.0;
  std::size_t n_points = 160;
  std::size_t bins = 8;
};

struct AsymptoticFit {
  double sigma2_fit = 0.0;
  double kbar_fit = 0.0;
  double slope = 0.0;
  double residual_exponent = 0.0;
  std::vector<double> radii;
  std::vector<double> residuals;
};

/// Deterministic sample of lattice points with r_min <= |z| <= r_max
/// (geometric radii, golden-angle directions).
std::vector<Point> ring_points(const LatticeBasis& basis, const RadiiWindow& window);

/// Least squares a(z) ≈ slope * log|z| + kbar; sigma2_fit = covolume / (pi * slope).
/// residual_exponent is the log-log slope of the per-bin maxima of |residual|.
/// Stores the fit on the kernel. Throws Error{InsufficientSamples} below 100 points.
AsymptoticFit fit_asymptotics(PotentialKernel& kernel, const RadiiWindow& window = {});

}  // namespace latwalk
