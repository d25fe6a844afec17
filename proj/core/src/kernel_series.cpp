#include <algorithm>
#include <cmath>

#include "latwalk/error.hpp"
#include "latwalk/potential_kernel.hpp"

namespace latwalk {

namespace {

/// Lower-order constant d/c assumed in the Abel bias model; chosen on the conservative side.
constexpr double kAbelOffset = 1.5;

/// Distribution of S_j on a square box of coordinates, stepped by convolution.
class Convolver {
 public:
  Convolver(const WalkModel& model, std::int64_t n_terms, double box_scale) {
    for (const auto& s : model.steps())
      if (s.prob > 0.0) steps_.push_back(s);
    reach_ = model.max_coordinate();
    double q11 = 0, q12 = 0, q22 = 0;
    for (const auto& s : steps_) {
      q11 += s.prob * s.offset.j * s.offset.j;
      q12 += s.prob * s.offset.j * s.offset.k;
      q22 += s.prob * s.offset.k * s.offset.k;
    }
    lambda_ = 0.5 * (q11 + q22) + std::sqrt(0.25 * (q11 - q22) * (q11 - q22) + q12 * q12);
    scale_ = box_scale;
    half_ = cap(n_terms) + reach_;
    side_ = 2 * half_ + 1;
    if (static_cast<double>(side_) * side_ > 2.5e8)
      fail(ErrorCode::BudgetExceeded, "series convolution box too large for " + std::to_string(n_terms) + " terms");
    cur_.assign(static_cast<std::size_t>(side_) * side_, 0.0);
    next_ = cur_;
    cur_[index(0, 0)] = 1.0;
  }

  /// Advances to step j and returns the cumulative mass dropped so far.
  double advance(std::int64_t j) {
    const std::int64_t grown = extent_ + reach_;
    const std::int64_t lo = -grown, hi = grown;
    for (std::int64_t k = lo; k <= hi; ++k) std::fill_n(&next_[index(lo, k)], hi - lo + 1, 0.0);
    for (std::int64_t k = -extent_; k <= extent_; ++k) {
      for (std::int64_t i = -extent_; i <= extent_; ++i) {
        const double v = cur_[index(i, k)];
        if (v == 0.0) continue;
        for (const auto& s : steps_) next_[index(i + s.offset.j, k + s.offset.k)] += v * s.prob;
      }
    }
    extent_ = grown;
    const std::int64_t limit = cap(j);
    if (extent_ > limit) {
      for (std::int64_t k = -extent_; k <= extent_; ++k)
        for (std::int64_t i = -extent_; i <= extent_; ++i) {
          if (std::abs(i) <= limit && std::abs(k) <= limit) continue;
          double& v = next_[index(i, k)];
          lost_ += v;
          v = 0.0;
        }
      extent_ = limit;
    }
    cur_.swap(next_);
    return lost_;
  }

  double at(Point p) const {
    if (std::abs(p.j) > extent_ || std::abs(p.k) > extent_) return 0.0;
    return cur_[index(p.j, p.k)];
  }

 private:
  std::int64_t cap(std::int64_t j) const {
    const double jj = static_cast<double>(std::max<std::int64_t>(j, 1));
    return static_cast<std::int64_t>(std::ceil(scale_ * std::sqrt(lambda_ * jj * std::log(jj + 2.0)))) + reach_;
  }
  std::size_t index(std::int64_t i, std::int64_t k) const {
    return static_cast<std::size_t>((k + half_) * side_ + (i + half_));
  }

  std::vector<Step> steps_;
  std::int64_t reach_ = 0, half_ = 0, side_ = 0, extent_ = 0;
  double lambda_ = 0.0, scale_ = 0.0, lost_ = 0.0;
  std::vector<double> cur_, next_;
};

}  // namespace

std::vector<KernelValue> kernel_series(const WalkModel& model, std::span<const Point> points,
                                       const SeriesOptions& options) {
  if (options.n_terms < 1) fail(ErrorCode::InvalidArgument, "n_terms must be at least 1");
  const bool abel = options.smoothing.kind == Smoothing::Kind::Abel;
  if (abel && !(options.smoothing.r > 0.0 && options.smoothing.r < 1.0))
    fail(ErrorCode::InvalidArgument, "Abel parameter must lie in (0, 1)");

  // Cesaro needs checkpoints at N/4, N/2, N with N divisible by 4.
  const std::int64_t n = abel || options.n_terms < 8 ? options.n_terms : options.n_terms / 4 * 4;
  const double r = options.smoothing.r, r2 = r * r;
  const std::size_t m = points.size();

  Convolver conv(model, n, options.box_scale);
  std::vector<double> partial(m, 0.0), prev(m, 0.0), abel1(m, 0.0), abel2(m, 0.0), last(m, 0.0);
  std::vector<double> t_quarter(m), t_half(m), t_full(m);
  double rj = 1.0, r2j = 1.0, loss_sum = 0.0, abel_loss = 0.0;

  for (std::int64_t j = 0; j <= n; ++j) {
    const double lost = j == 0 ? 0.0 : conv.advance(j);
    loss_sum += lost;
    abel_loss += rj * lost;
    const double p0 = conv.at({0, 0});
    for (std::size_t i = 0; i < m; ++i) {
      const double d = p0 - conv.at(points[i]);
      prev[i] = partial[i];
      partial[i] += d;
      abel1[i] += rj * d;
      abel2[i] += r2j * d;
      last[i] = d;
      const double t = 0.5 * (prev[i] + partial[i]);
      if (j == n / 4) t_quarter[i] = t;
      if (j == n / 2) t_half[i] = t;
      if (j == n) t_full[i] = t;
    }
    rj *= r;
    r2j *= r2;
  }

  std::vector<KernelValue> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (points[i] == Point{}) {
      out[i] = {0.0, 0.0, KernelMethod::Exact};
      continue;
    }
    KernelValue v{0.0, 0.0, KernelMethod::Series};
    if (abel) {
      v.value = abel1[i];
      // Summands decay like c/j^2, so the bias of A(r) is about eps (c log(1/eps) + d) with
      // eps = 1 - r; bias(r^2) / bias(r) then converts |A(r) - A(r^2)| into a bias bound.
      const double tail = std::abs(last[i]) * rj / (1.0 - r);
      const double log_inv = std::log(1.0 / (1.0 - r)) - kAbelOffset;
      const double ratio = log_inv > 0.0 ? 2.0 * (1.0 - std::log(2.0) / log_inv) : 0.0;
      const double bias = ratio > 1.0 ? std::abs(abel1[i] - abel2[i]) / (ratio - 1.0) : INFINITY;
      v.error = bias + tail + 2.0 * abel_loss;
    } else if (n >= 8) {
      const double rich = 2.0 * t_full[i] - t_half[i];
      const double rich_half = 2.0 * t_half[i] - t_quarter[i];
      v.value = rich;
      v.error = std::abs(rich - rich_half) + 3.0 * loss_sum;
    } else {
      v.value = t_full[i];
      v.error = std::abs(t_full[i] - t_half[i]) + loss_sum;
    }
    if (options.tolerance && v.error > *options.tolerance)
      fail(ErrorCode::BudgetExceeded, "series error estimate " + std::to_string(v.error) + " exceeds tolerance " +
                                          std::to_string(*options.tolerance) + " after " + std::to_string(n) +
                                          " terms");
    out[i] = v;
  }
  return out;
}

KernelValue kernel_series(const WalkModel& model, Point z, std::int64_t n_terms, Smoothing smoothing) {
  SeriesOptions options;
  options.n_terms = n_terms;
  options.smoothing = smoothing;
  const Point one[1] = {z};
  return kernel_series(model, one, options).front();
}

}  // namespace latwalk
