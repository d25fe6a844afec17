#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <variant>
#include <vector>

#include "latwalk/lattice.hpp"

namespace latwalk {

enum class DensePolicyKind { Ray, RandomAngle, Alternating, Spiral };

struct DensePolicy {
  DensePolicyKind kind = DensePolicyKind::Ray;
  std::uint64_t seed = 0;       // RandomAngle
  double spiral_step = 0.5;     // Spiral: angle increment per annulus, radians

  static DensePolicy ray() { return {}; }
  static DensePolicy random_angle(std::uint64_t seed) { return {DensePolicyKind::RandomAngle, seed}; }
  static DensePolicy alternating() { return {DensePolicyKind::Alternating}; }
  static DensePolicy spiral(double step = 0.5) { return {DensePolicyKind::Spiral, 0, step}; }
};

std::string to_string(const DensePolicy& policy);
DensePolicy parse_policy(std::string_view name, std::uint64_t seed = 0);

/// A minimal (1/kappa)-dense set {w_j : j in kappa*N, j < cutoff} with
/// j <= |w_j| < j + kappa.
class DenseSet {
 public:
  DenseSet(int kappa, double cutoff, DensePolicy policy, LatticeBasis basis, std::vector<Point> points);

  int kappa() const { return kappa_; }
  double cutoff() const { return cutoff_; }
  const DensePolicy& policy() const { return policy_; }
  const LatticeBasis& basis() const { return basis_; }
  /// points()[m] is w_{m*kappa}.
  const std::vector<Point>& points() const { return points_; }

  bool contains(Point p) const {
    const double r = std::sqrt(basis_.norm2(p));
    const auto m = static_cast<std::int64_t>(std::floor(r / kappa_));
    for (std::int64_t c = m - 1; c <= m + 1; ++c) {
      if (c >= 0 && c < static_cast<std::int64_t>(points_.size()) && points_[c] == p) return true;
    }
    return false;
  }

 private:
  int kappa_;
  double cutoff_;
  DensePolicy policy_;
  LatticeBasis basis_;
  std::vector<Point> points_;
};

/// Builds a minimal dense set; within each annulus picks the point with the
/// smallest angular distance to the policy's target angle, ties broken by
/// lexicographic (j, k). Throws Error{EmptyAnnulus} naming the first j whose
/// annulus j <= |w| < j + kappa holds no lattice point.
DenseSet make_dense(int kappa, double cutoff, DensePolicy policy, const LatticeBasis& basis = {});

// ---------------------------------------------------------------------------
// Regions

enum class LineKind {
  N,       // kappa*N = {0, kappa, 2kappa, ...}
  Z,       // kappa*Z
  ZPos,    // kappa*Z^+
  ZNeg,    // kappa*Z^-
  ZNonPos, // kappa*Z \ Z^+
  Shifted, // kappa*(shift + N)
};

class Region;

namespace region {
struct Disk {
  double radius;  // C_n = {|z| < radius}
};
struct Strip {
  double half_width;  // L_n = {|Im z| < half_width}
};
/// Multiples of e1 (the real axis in the canonical frame).
struct KappaLine {
  LineKind kind;
  std::int32_t kappa;
  std::int32_t shift = 0;
};
/// [j1, j2)_kappa: multiples m*kappa*e1 with j1 <= m*kappa < j2.
struct Segment {
  std::int64_t j1, j2;
  std::int32_t kappa;
};
struct Explicit {
  std::shared_ptr<const std::unordered_set<Point, PointHash>> points;
};
/// A[j1, j2] = A ∩ (C_j2 \ C_j1).
struct AnnulusSlice {
  std::shared_ptr<const DenseSet> set;
  double j1, j2;
};
struct Complement {
  std::shared_ptr<const Region> inner;
};
struct Union {
  std::shared_ptr<const std::vector<Region>> parts;
};
}  // namespace region

/// Stopping set. Membership is O(1) for every variant except Union.
class Region {
 public:
  using Variant = std::variant<region::Disk, region::Strip, region::KappaLine, region::Segment, region::Explicit,
                               region::AnnulusSlice, region::Complement, region::Union>;

  static Region disk(double radius);
  static Region strip(double half_width);
  static Region kappa_line(LineKind kind, std::int32_t kappa, std::int32_t shift = 0);
  static Region segment(std::int64_t j1, std::int64_t j2, std::int32_t kappa = 1);
  static Region points(std::span<const Point> pts);
  static Region slice(std::shared_ptr<const DenseSet> set, double j1, double j2);
  static Region complement(Region inner);
  static Region union_of(std::vector<Region> parts);
  static Region empty() { return points({}); }
  static Region full() { return complement(empty()); }

  const Variant& variant() const { return v_; }

  bool contains(Point p, const LatticeBasis& basis) const;

  /// Radius R with region ⊆ closed disk of radius R, if the region is bounded.
  std::optional<double> bounding_radius(const LatticeBasis& basis) const;

  std::string describe() const;

 private:
  explicit Region(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

/// Points of `region` inside the open disk of radius `radius`, row-major order.
std::vector<Point> enumerate(const Region& region, const LatticeBasis& basis, double radius);
/// All points of a bounded region. Throws Error{InvalidArgument} if unbounded.
std::vector<Point> enumerate(const Region& region, const LatticeBasis& basis);

/// True iff every annulus {j <= |z| < j + kappa}, j in kappa*N, j < cutoff, meets the set.
bool is_dense(const Region& set, int kappa, double cutoff, const LatticeBasis& basis = {});
bool is_dense(std::span<const Point> set, int kappa, double cutoff, const LatticeBasis& basis = {});

/// Region spec strings used by the CLI:
///   disk:128  strip:32  kappaN:2  kappaZ:1  kappaZpos:1  kappaZneg:1
///   kappaZnonpos:1  kappaShift:<kappa>:<shift>  segment:<j1>:<j2>:<kappa>
///   dense:<policy>:<kappa>:<cutoff>[:seed]  slice:<policy>:<kappa>:<j1>:<j2>[:seed]
/// Policies: ray, random, alternating, spiral.
Region parse_region(std::string_view spec, const LatticeBasis& basis = {});

// ---------------------------------------------------------------------------

namespace detail {
inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}
}  // namespace detail

inline bool Region::contains(Point p, const LatticeBasis& basis) const {
  switch (v_.index()) {
    case 0: {
      const auto& d = std::get<region::Disk>(v_);
      return basis.norm2(p) < d.radius * d.radius;
    }
    case 1: {
      const auto& s = std::get<region::Strip>(v_);
      return std::abs(basis.im(p)) < s.half_width;
    }
    case 2: {
      const auto& l = std::get<region::KappaLine>(v_);
      if (p.k != 0 || p.j % l.kappa != 0) return false;
      switch (l.kind) {
        case LineKind::N: return p.j >= 0;
        case LineKind::Z: return true;
        case LineKind::ZPos: return p.j > 0;
        case LineKind::ZNeg: return p.j < 0;
        case LineKind::ZNonPos: return p.j <= 0;
        case LineKind::Shifted: return p.j / l.kappa >= l.shift;
      }
      return false;
    }
    case 3: {
      const auto& s = std::get<region::Segment>(v_);
      return p.k == 0 && p.j % s.kappa == 0 && p.j >= s.j1 && p.j < s.j2;
    }
    case 4: return std::get<region::Explicit>(v_).points->count(p) != 0;
    case 5: {
      const auto& a = std::get<region::AnnulusSlice>(v_);
      const double r2 = basis.norm2(p);
      return r2 >= a.j1 * a.j1 && r2 < a.j2 * a.j2 && a.set->contains(p);
    }
    case 6: return !std::get<region::Complement>(v_).inner->contains(p, basis);
    case 7:
      for (const auto& part : *std::get<region::Union>(v_).parts)
        if (part.contains(p, basis)) return true;
      return false;
  }
  return false;
}

}  // namespace latwalk
