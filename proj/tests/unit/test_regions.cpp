#include <cmath>
#include <memory>

#include <gtest/gtest.h>

#include "latwalk/error.hpp"
#include "latwalk/regions.hpp"

using namespace latwalk;

TEST(MakeDense, RayIsThePositiveAxis) {
  const auto set = make_dense(1, 50, DensePolicy::ray());
  ASSERT_EQ(set.points().size(), 50u);
  for (std::size_t j = 0; j < set.points().size(); ++j) EXPECT_EQ(set.points()[j], (Point{static_cast<int>(j), 0}));
}

TEST(MakeDense, EveryPolicyIsDense) {
  const LatticeBasis skew(std::complex<double>(1.0 / std::sqrt(2.0), 0.0), std::complex<double>(0.0, 1.0));
  for (const auto& policy : {DensePolicy::ray(), DensePolicy::random_angle(7), DensePolicy::alternating(),
                             DensePolicy::spiral()}) {
    for (int kappa : {1, 2, 3}) {
      const auto set = make_dense(kappa, 80, policy);
      EXPECT_TRUE(is_dense(set.points(), kappa, 80)) << to_string(policy) << " kappa=" << kappa;
      const auto skewed = make_dense(kappa, 80, policy, skew);
      EXPECT_TRUE(is_dense(skewed.points(), kappa, 80, skew)) << to_string(policy) << " kappa=" << kappa;
    }
  }
}

TEST(MakeDense, AlternatingFlipsSides) {
  const auto set = make_dense(1, 10, DensePolicy::alternating());
  ASSERT_EQ(set.points().size(), 10u);
  for (std::size_t m = 1; m < set.points().size(); ++m) {
    const Point w = set.points()[m];
    const double r = std::hypot(w.j, w.k);
    EXPECT_GE(r, static_cast<double>(m));
    EXPECT_LT(r, static_cast<double>(m + 1));
    EXPECT_EQ(w.j > 0, m % 2 == 0) << "annulus " << m;
    EXPECT_NE(w.j, 0);
  }
}

TEST(MakeDense, RandomAngleDependsOnSeedOnly) {
  const auto a = make_dense(1, 40, DensePolicy::random_angle(3));
  const auto b = make_dense(1, 40, DensePolicy::random_angle(3));
  const auto c = make_dense(1, 40, DensePolicy::random_angle(4));
  EXPECT_EQ(a.points(), b.points());
  EXPECT_NE(a.points(), c.points());
  // A longer cutoff extends the same set.
  const auto longer = make_dense(1, 80, DensePolicy::random_angle(3));
  EXPECT_TRUE(std::equal(a.points().begin(), a.points().end(), longer.points().begin()));
}

TEST(MakeDense, EmptyAnnulusIsReported) {
  const LatticeBasis sparse(std::complex<double>(3.0, 0.0), std::complex<double>(0.0, 3.0));
  try {
    make_dense(1, 10, DensePolicy::ray(), sparse);
    FAIL() << "expected EmptyAnnulus";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyAnnulus);
  }
}

TEST(IsDense, FullAndEmpty) {
  EXPECT_TRUE(is_dense(Region::full(), 1, 30));
  EXPECT_FALSE(is_dense(Region::empty(), 1, 30));
}

TEST(IsDense, RayWithAHole) {
  auto pts = make_dense(1, 20, DensePolicy::ray()).points();
  pts.erase(pts.begin() + 5);
  EXPECT_FALSE(is_dense(pts, 1, 20));
  EXPECT_FALSE(is_dense(Region::points(pts), 1, 20));
}

TEST(Region, SegmentMembershipExhaustive) {
  for (int kappa : {1, 2, 3}) {
    const auto seg = Region::segment(2, 11, kappa);
    for (int j = -15; j <= 15; ++j) {
      for (int k = -2; k <= 2; ++k) {
        const bool expected = k == 0 && j % kappa == 0 && j >= 2 && j < 11;
        EXPECT_EQ(seg.contains({j, k}, {}), expected) << j << "," << k << " kappa=" << kappa;
      }
    }
  }
}

TEST(Region, KappaLines) {
  const LatticeBasis basis;
  const auto n = Region::kappa_line(LineKind::N, 2);
  const auto zpos = Region::kappa_line(LineKind::ZPos, 2);
  const auto zneg = Region::kappa_line(LineKind::ZNeg, 2);
  const auto nonpos = Region::kappa_line(LineKind::ZNonPos, 2);
  const auto shifted = Region::kappa_line(LineKind::Shifted, 2, -3);
  for (int j = -12; j <= 12; ++j) {
    const bool on = j % 2 == 0;
    EXPECT_EQ(n.contains({j, 0}, basis), on && j >= 0);
    EXPECT_EQ(zpos.contains({j, 0}, basis), on && j > 0);
    EXPECT_EQ(zneg.contains({j, 0}, basis), on && j < 0);
    EXPECT_EQ(nonpos.contains({j, 0}, basis), on && j <= 0);
    EXPECT_EQ(shifted.contains({j, 0}, basis), on && j >= -6);
    EXPECT_FALSE(n.contains({j, 1}, basis));
  }
}

TEST(Region, DiskAndStripBruteForce) {
  const LatticeBasis basis;
  const auto disk = Region::disk(37.5);
  const auto strip = Region::strip(12);
  for (int j = -100; j <= 100; ++j) {
    for (int k = -100; k <= 100; ++k) {
      ASSERT_EQ(disk.contains({j, k}, basis), std::hypot(j, k) < 37.5);
      ASSERT_EQ(strip.contains({j, k}, basis), std::abs(k) < 12);
    }
  }
}

TEST(Region, SliceIsAnnulusOfDenseSet) {
  auto set = std::make_shared<const DenseSet>(make_dense(1, 64, DensePolicy::alternating()));
  const auto slice = Region::slice(set, 8, 32);
  std::size_t count = 0;
  for (const auto& w : set->points()) {
    const double r = std::hypot(w.j, w.k);
    EXPECT_EQ(slice.contains(w, {}), r >= 8 && r < 32);
    count += slice.contains(w, {});
  }
  EXPECT_EQ(enumerate(slice, {}).size(), count);
}

TEST(Region, ComplementAndUnion) {
  const auto u = Region::union_of({Region::disk(2), Region::segment(5, 8, 1)});
  EXPECT_TRUE(u.contains({1, 1}, {}));
  EXPECT_TRUE(u.contains({6, 0}, {}));
  EXPECT_FALSE(u.contains({4, 0}, {}));
  EXPECT_TRUE(Region::complement(u).contains({4, 0}, {}));
}

TEST(Region, EnumerateIsRowMajor) {
  const auto pts = enumerate(Region::disk(3), {});
  EXPECT_EQ(pts.size(), 25u);
  EXPECT_TRUE(std::is_sorted(pts.begin(), pts.end(), row_major_less));
}

TEST(ParseRegion, Specs) {
  EXPECT_TRUE(parse_region("disk:5").contains({4, 0}, {}));
  EXPECT_FALSE(parse_region("disk:5").contains({5, 0}, {}));
  EXPECT_TRUE(parse_region("kappaN:2").contains({4, 0}, {}));
  EXPECT_TRUE(parse_region("segment:-3:4:1").contains({-3, 0}, {}));
  EXPECT_TRUE(parse_region("slice:ray:1:2:6").contains({3, 0}, {}));
  EXPECT_FALSE(parse_region("slice:ray:1:2:6").contains({6, 0}, {}));
  try {
    parse_region("hexagon:4");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
}
