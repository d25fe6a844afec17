#include <cmath>
#include <filesystem>
#include <numbers>

#include <gtest/gtest.h>

#include "latwalk/error.hpp"
#include "latwalk/green.hpp"
#include "latwalk/potential_kernel.hpp"

using namespace latwalk;

TEST(KernelSeries, OriginIsExactlyZero) {
  const auto v = kernel_series(presets::srw(), {0, 0}, 500);
  EXPECT_EQ(v.value, 0.0);
  EXPECT_EQ(v.error, 0.0);
}

TEST(KernelSeries, NeighbourOfOrigin) {
  // Delta_{p*} a(0) = 1 and the four-fold symmetry force a = 1 at the neighbours.
  const auto v = kernel_series(presets::srw(), {1, 0}, 4000);
  EXPECT_NEAR(v.value, 1.0, 1e-3);
  EXPECT_LE(v.error, 1e-3);
}

TEST(KernelSeries, ClosedFormValue) {
  // a(2, 1) = 8/pi - 1 for the simple random walk.
  const auto c = kernel_series(presets::srw(), {2, 1}, 4000, Smoothing::cesaro());
  EXPECT_NEAR(c.value, 8.0 / std::numbers::pi - 1.0, c.error);
  EXPECT_LE(c.error, 1e-3);
}

TEST(KernelSeries, AbelErrorCoversBias) {
  const auto a = kernel_series(presets::srw(), {2, 1}, 2000, Smoothing::abel(0.98));
  EXPECT_NEAR(a.value, 8.0 / std::numbers::pi - 1.0, a.error);
  EXPECT_TRUE(std::isinf(kernel_series(presets::srw(), {2, 1}, 50, Smoothing::abel(0.5)).error));
}

TEST(KernelSeries, ToleranceBudget) {
  SeriesOptions opts;
  opts.n_terms = 50;
  opts.tolerance = 1e-12;
  const std::vector<Point> z{{3, 0}};
  try {
    kernel_series(presets::srw(), z, opts);
    FAIL() << "expected BudgetExceeded";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BudgetExceeded);
  }
}

TEST(KernelFourier, NeighbourOfOrigin) {
  const auto v = kernel_fourier(presets::srw(), {1, 0});
  EXPECT_NEAR(v.value, 1.0, 1e-8);
  EXPECT_LE(v.error, 1e-8);
}

TEST(KernelFourier, Origin) { EXPECT_NEAR(kernel_fourier(presets::srw(), {0, 0}).value, 0.0, 1e-8); }

TEST(KernelFourier, DiagonalNeighbourMatchesSeries) {
  const auto f = kernel_fourier(presets::srw(), {1, 1});
  const auto s = kernel_series(presets::srw(), {1, 1}, 4000);
  EXPECT_NEAR(f.value, s.value, f.error + s.error);
}

TEST(KernelFourier, RangeTwoMatchesSeries) {
  const auto f = kernel_fourier(presets::range2(), {3, 0});
  const auto s = kernel_series(presets::range2(), {3, 0}, 4000);
  EXPECT_NEAR(f.value, s.value, f.error + s.error);
}

TEST(KernelFourier, MethodsAgreeOnSeveralPoints) {
  for (const auto& model : {presets::srw(), presets::skewed_normalized()}) {
    const std::vector<Point> pts{{1, 0}, {0, 1}, {2, -1}, {-3, 2}, {4, 4}, {0, -5}};
    SeriesOptions opts;
    opts.n_terms = 4000;
    const auto series = kernel_series(model, pts, opts);
    const FourierKernel fourier(model, 8);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto f = fourier(pts[i]);
      EXPECT_NEAR(f.value, series[i].value, f.error + series[i].error) << model.name() << " " << pts[i].j << ","
                                                                        << pts[i].k;
    }
  }
}

TEST(KernelFourier, PeriodicWalkRejected) {
  try {
    kernel_fourier(presets::diagonal(), {1, 1});
    FAIL() << "expected PeriodicWalk";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PeriodicWalk);
  }
}

TEST(PotentialKernel, ReversalConsistency) {
  const auto model = presets::skewed_normalized();
  PotentialKernel a(model);
  PotentialKernel a_star(reverse(model));
  for (const Point z : {Point{1, 0}, Point{-2, 1}, Point{3, -3}, Point{0, 4}}) {
    const auto lhs = a_star.value(z);
    const auto rhs = a.value(-z);
    EXPECT_NEAR(lhs.value, rhs.value, lhs.error + rhs.error + 1e-12);
  }
}

namespace {

void expect_harmonic(const WalkModel& model, double radius, double tol) {
  PotentialKernel kernel(model);
  const WalkModel reversed = reverse(model);
  const auto pts = enumerate(Region::disk(radius + model.max_step_length() + 1), model.basis());
  kernel.prefetch(pts);
  auto a = [&](Point p) -> std::optional<double> { return kernel.value(p).value; };
  for (const auto& z : pts) {
    const double r = std::sqrt(model.basis().norm2(z));
    if (r > radius) continue;
    const double expected = r == 0.0 ? 1.0 : 0.0;
    EXPECT_NEAR(harmonic_residual(reversed, a, z), expected, tol) << model.name() << " " << z.j << "," << z.k;
  }
}

}  // namespace

TEST(PotentialKernel, HarmonicSimpleRandomWalk) { expect_harmonic(presets::srw(), 10, 1e-6); }
TEST(PotentialKernel, HarmonicRangeTwo) { expect_harmonic(presets::range2(), 10, 1e-6); }
TEST(PotentialKernel, HarmonicSkewed) { expect_harmonic(presets::skewed_normalized(), 6, 1e-6); }

TEST(PotentialKernel, PeriodicWalkFallsBackToSeries) {
  PotentialKernel kernel(presets::diagonal(), {}, {1000});
  const auto v = kernel.value({2, 0});
  EXPECT_EQ(v.method, KernelMethod::Series);
  EXPECT_GT(v.value, 0.0);
}

TEST(PotentialKernel, CacheRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "latwalk_kernel_cache.csv";
  PotentialKernel kernel(presets::srw());
  const std::vector<Point> pts{{1, 0}, {2, 3}, {-4, 1}};
  kernel.prefetch(pts);
  kernel.save_cache(path.string());
  PotentialKernel other(presets::srw());
  other.load_cache(path.string());
  EXPECT_EQ(other.cache_size(), kernel.cache_size());
  for (const auto& p : pts) EXPECT_EQ(other.value(p).value, kernel.value(p).value);
  // Rows of other models are skipped.
  PotentialKernel other_model(presets::range2());
  other_model.load_cache(path.string());
  EXPECT_EQ(other_model.cache_size(), 0u);
  std::filesystem::remove(path);
}

TEST(FitAsymptotics, SimpleRandomWalk) {
  PotentialKernel kernel(presets::srw());
  const auto fit = fit_asymptotics(kernel);
  EXPECT_NEAR(fit.sigma2_fit, 0.5, 0.02 * 0.5);
  EXPECT_LE(fit.residual_exponent, -0.8);
  ASSERT_TRUE(kernel.fitted_sigma2.has_value());
}

TEST(FitAsymptotics, RangeTwo) {
  PotentialKernel kernel(presets::range2());
  const auto fit = fit_asymptotics(kernel);
  EXPECT_NEAR(fit.sigma2_fit, 1.25, 0.02 * 1.25);
}

TEST(FitAsymptotics, TooFewPoints) {
  PotentialKernel kernel(presets::srw());
  RadiiWindow w;
  w.n_points = 10;
  try {
    fit_asymptotics(kernel, w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientSamples);
  }
}
