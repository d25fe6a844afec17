#include "latwalk/regions.hpp"

#include <algorithm>
#include <charconv>
#include <numbers>
#include <sstream>

#include "latwalk/error.hpp"
#include "latwalk/random.hpp"

namespace latwalk {

// ---------------------------------------------------------------------------
// Dense sets

std::string to_string(const DensePolicy& policy) {
  switch (policy.kind) {
    case DensePolicyKind::Ray: return "ray";
    case DensePolicyKind::RandomAngle: return "random";
    case DensePolicyKind::Alternating: return "alternating";
    case DensePolicyKind::Spiral: return "spiral";
  }
  return "?";
}

DensePolicy parse_policy(std::string_view name, std::uint64_t seed) {
  if (name == "ray") return DensePolicy::ray();
  if (name == "random" || name == "random-angle") return DensePolicy::random_angle(seed);
  if (name == "alternating") return DensePolicy::alternating();
  if (name == "spiral") return DensePolicy::spiral();
  fail(ErrorCode::ParseError, "unknown dense-set policy '" + std::string(name) + "'");
}

DenseSet::DenseSet(int kappa, double cutoff, DensePolicy policy, LatticeBasis basis, std::vector<Point> points)
    : kappa_(kappa), cutoff_(cutoff), policy_(policy), basis_(basis), points_(std::move(points)) {}

namespace {

double target_angle(const DensePolicy& policy, std::int64_t m) {
  switch (policy.kind) {
    case DensePolicyKind::Ray: return 0.0;
    case DensePolicyKind::Alternating: return (m % 2 == 0) ? 0.0 : std::numbers::pi;
    case DensePolicyKind::Spiral: return std::remainder(policy.spiral_step * static_cast<double>(m), 2 * std::numbers::pi);
    case DensePolicyKind::RandomAngle: {
      PhiloxStream rng(policy.seed, static_cast<std::uint64_t>(m));
      return 2 * std::numbers::pi * rng.next_double() - std::numbers::pi;
    }
  }
  return 0.0;
}

double angle_gap(double a, double b) { return std::abs(std::remainder(a - b, 2 * std::numbers::pi)); }

}  // namespace

DenseSet make_dense(int kappa, double cutoff, DensePolicy policy, const LatticeBasis& basis) {
  if (kappa < 1) fail(ErrorCode::InvalidArgument, "kappa must be a positive integer");
  if (!(cutoff > 0.0)) fail(ErrorCode::InvalidArgument, "cutoff radius must be positive");
  const auto annuli = static_cast<std::int64_t>(std::ceil(cutoff / kappa));
  struct Best {
    Point p;
    double gap = 1e300;
    bool set = false;
  };
  std::vector<Best> best(static_cast<std::size_t>(annuli));
  std::vector<double> target(best.size());
  for (std::int64_t m = 0; m < annuli; ++m) target[m] = target_angle(policy, m);

  const double outer = static_cast<double>(annuli) * kappa;
  std::int32_t jmax, kmax;
  basis.coordinate_bounds(outer, jmax, kmax);
  for (std::int32_t k = -kmax; k <= kmax; ++k) {
    for (std::int32_t j = -jmax; j <= jmax; ++j) {
      const Point p{j, k};
      const double r = std::sqrt(basis.norm2(p));
      const auto m = static_cast<std::int64_t>(std::floor(r / kappa));
      if (m < 0 || m >= annuli) continue;
      const auto z = basis.embed(p);
      const double gap = (p == Point{}) ? 0.0 : angle_gap(std::arg(z), target[m]);
      auto& b = best[m];
      const bool better = !b.set || gap < b.gap - 1e-12 ||
                          (gap <= b.gap + 1e-12 && (p.j < b.p.j || (p.j == b.p.j && p.k < b.p.k)));
      if (better) b = {p, gap, true};
    }
  }
  std::vector<Point> points;
  points.reserve(best.size());
  for (std::int64_t m = 0; m < annuli; ++m) {
    if (!best[m].set) {
      std::ostringstream os;
      os << "no lattice point with " << m * kappa << " <= |w| < " << (m + 1) * kappa;
      fail(ErrorCode::EmptyAnnulus, os.str());
    }
    points.push_back(best[m].p);
  }
  return DenseSet(kappa, cutoff, policy, basis, std::move(points));
}

// ---------------------------------------------------------------------------
// Regions

Region Region::disk(double radius) { return Region(region::Disk{radius}); }
Region Region::strip(double half_width) { return Region(region::Strip{half_width}); }

Region Region::kappa_line(LineKind kind, std::int32_t kappa, std::int32_t shift) {
  if (kappa < 1) fail(ErrorCode::InvalidArgument, "kappa must be a positive integer");
  return Region(region::KappaLine{kind, kappa, shift});
}

Region Region::segment(std::int64_t j1, std::int64_t j2, std::int32_t kappa) {
  if (kappa < 1) fail(ErrorCode::InvalidArgument, "kappa must be a positive integer");
  return Region(region::Segment{j1, j2, kappa});
}

Region Region::points(std::span<const Point> pts) {
  auto set = std::make_shared<std::unordered_set<Point, PointHash>>(pts.begin(), pts.end());
  return Region(region::Explicit{std::move(set)});
}

Region Region::slice(std::shared_ptr<const DenseSet> set, double j1, double j2) {
  return Region(region::AnnulusSlice{std::move(set), j1, j2});
}

Region Region::complement(Region inner) {
  return Region(region::Complement{std::make_shared<const Region>(std::move(inner))});
}

Region Region::union_of(std::vector<Region> parts) {
  return Region(region::Union{std::make_shared<const std::vector<Region>>(std::move(parts))});
}

std::optional<double> Region::bounding_radius(const LatticeBasis& basis) const {
  const double e1 = std::abs(basis.e1());
  switch (v_.index()) {
    case 0: return std::get<region::Disk>(v_).radius;
    case 3: {
      const auto& s = std::get<region::Segment>(v_);
      return e1 * static_cast<double>(std::max(std::abs(s.j1), std::abs(s.j2)));
    }
    case 4: {
      double r2 = 0.0;
      for (const auto& p : *std::get<region::Explicit>(v_).points) r2 = std::max(r2, basis.norm2(p));
      return std::sqrt(r2);
    }
    case 5: return std::get<region::AnnulusSlice>(v_).j2;
    case 7: {
      double r = 0.0;
      for (const auto& part : *std::get<region::Union>(v_).parts) {
        auto pr = part.bounding_radius(basis);
        if (!pr) return std::nullopt;
        r = std::max(r, *pr);
      }
      return r;
    }
    default: return std::nullopt;
  }
}

std::string Region::describe() const {
  std::ostringstream os;
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, region::Disk>) {
          os << "disk:" << r.radius;
        } else if constexpr (std::is_same_v<T, region::Strip>) {
          os << "strip:" << r.half_width;
        } else if constexpr (std::is_same_v<T, region::KappaLine>) {
          static const char* names[] = {"kappaN", "kappaZ", "kappaZpos", "kappaZneg", "kappaZnonpos", "kappaShift"};
          os << names[static_cast<int>(r.kind)] << ':' << r.kappa;
          if (r.kind == LineKind::Shifted) os << ':' << r.shift;
        } else if constexpr (std::is_same_v<T, region::Segment>) {
          os << "segment:" << r.j1 << ':' << r.j2 << ':' << r.kappa;
        } else if constexpr (std::is_same_v<T, region::Explicit>) {
          os << "points[" << r.points->size() << "]";
        } else if constexpr (std::is_same_v<T, region::AnnulusSlice>) {
          os << "slice:" << to_string(r.set->policy()) << ':' << r.set->kappa() << ':' << r.j1 << ':' << r.j2;
        } else if constexpr (std::is_same_v<T, region::Complement>) {
          os << "not(" << r.inner->describe() << ")";
        } else {
          os << "union(";
          bool first = true;
          for (const auto& p : *r.parts) {
            os << (first ? "" : ",") << p.describe();
            first = false;
          }
          os << ")";
        }
      },
      v_);
  return os.str();
}

std::vector<Point> enumerate(const Region& region, const LatticeBasis& basis, double radius) {
  std::int32_t jmax, kmax;
  basis.coordinate_bounds(radius, jmax, kmax);
  std::vector<Point> out;
  const double r2 = radius * radius;
  for (std::int32_t k = -kmax; k <= kmax; ++k) {
    for (std::int32_t j = -jmax; j <= jmax; ++j) {
      const Point p{j, k};
      if (basis.norm2(p) < r2 && region.contains(p, basis)) out.push_back(p);
    }
  }
  return out;
}

std::vector<Point> enumerate(const Region& region, const LatticeBasis& basis) {
  auto r = region.bounding_radius(basis);
  if (!r) fail(ErrorCode::InvalidArgument, "region " + region.describe() + " is unbounded");
  // Bounding radii are closed bounds; enumerate over a slightly larger open disk.
  return enumerate(region, basis, *r * (1.0 + 1e-12) + 1e-9);
}

namespace {

bool annuli_hit(const std::vector<char>& hit) {
  return std::all_of(hit.begin(), hit.end(), [](char h) { return h != 0; });
}

}  // namespace

bool is_dense(const Region& set, int kappa, double cutoff, const LatticeBasis& basis) {
  if (kappa < 1) fail(ErrorCode::InvalidArgument, "kappa must be a positive integer");
  const auto annuli = static_cast<std::int64_t>(std::ceil(cutoff / kappa));
  std::vector<char> hit(static_cast<std::size_t>(std::max<std::int64_t>(annuli, 0)), 0);
  for (const auto& p : enumerate(set, basis, static_cast<double>(annuli) * kappa)) {
    const auto m = static_cast<std::int64_t>(std::floor(std::sqrt(basis.norm2(p)) / kappa));
    if (m < annuli) hit[m] = 1;
  }
  return annuli_hit(hit);
}

bool is_dense(std::span<const Point> set, int kappa, double cutoff, const LatticeBasis& basis) {
  if (kappa < 1) fail(ErrorCode::InvalidArgument, "kappa must be a positive integer");
  const auto annuli = static_cast<std::int64_t>(std::ceil(cutoff / kappa));
  std::vector<char> hit(static_cast<std::size_t>(std::max<std::int64_t>(annuli, 0)), 0);
  for (const auto& p : set) {
    const auto m = static_cast<std::int64_t>(std::floor(std::sqrt(basis.norm2(p)) / kappa));
    if (m >= 0 && m < annuli) hit[m] = 1;
  }
  return annuli_hit(hit);
}

// ---------------------------------------------------------------------------
// Spec strings

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T parse_number(std::string_view s, std::string_view spec) {
  T value{};
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end)
    fail(ErrorCode::ParseError, "bad number '" + std::string(s) + "' in region spec '" + std::string(spec) + "'");
  return value;
}

}  // namespace

Region parse_region(std::string_view spec, const LatticeBasis& basis) {
  const auto parts = split(spec, ':');
  const auto& head = parts[0];
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (parts.size() < lo || parts.size() > hi)
      fail(ErrorCode::ParseError, "wrong number of fields in region spec '" + std::string(spec) + "'");
  };
  if (head == "disk") {
    need(2, 2);
    return Region::disk(parse_number<double>(parts[1], spec));
  }
  if (head == "strip") {
    need(2, 2);
    return Region::strip(parse_number<double>(parts[1], spec));
  }
  static const std::pair<std::string_view, LineKind> lines[] = {
      {"kappaN", LineKind::N},       {"kappaZ", LineKind::Z},     {"kappaZpos", LineKind::ZPos},
      {"kappaZneg", LineKind::ZNeg}, {"kappaZnonpos", LineKind::ZNonPos}};
  for (const auto& [name, kind] : lines) {
    if (head == name) {
      need(2, 2);
      return Region::kappa_line(kind, parse_number<std::int32_t>(parts[1], spec));
    }
  }
  if (head == "kappaShift") {
    need(3, 3);
    return Region::kappa_line(LineKind::Shifted, parse_number<std::int32_t>(parts[1], spec),
                              parse_number<std::int32_t>(parts[2], spec));
  }
  if (head == "segment") {
    need(3, 4);
    const auto kappa = parts.size() == 4 ? parse_number<std::int32_t>(parts[3], spec) : 1;
    return Region::segment(parse_number<std::int64_t>(parts[1], spec), parse_number<std::int64_t>(parts[2], spec),
                           kappa);
  }
  if (head == "dense") {
    need(4, 5);
    const auto seed = parts.size() == 5 ? parse_number<std::uint64_t>(parts[4], spec) : 0;
    const auto kappa = parse_number<int>(parts[2], spec);
    const auto cutoff = parse_number<double>(parts[3], spec);
    auto set = std::make_shared<const DenseSet>(make_dense(kappa, cutoff, parse_policy(parts[1], seed), basis));
    return Region::slice(std::move(set), 0.0, cutoff);
  }
  if (head == "slice") {
    need(5, 6);
    const auto seed = parts.size() == 6 ? parse_number<std::uint64_t>(parts[5], spec) : 0;
    const auto kappa = parse_number<int>(parts[2], spec);
    const auto j1 = parse_number<double>(parts[3], spec), j2 = parse_number<double>(parts[4], spec);
    auto set = std::make_shared<const DenseSet>(make_dense(kappa, j2, parse_policy(parts[1], seed), basis));
    return Region::slice(std::move(set), j1, j2);
  }
  fail(ErrorCode::ParseError, "unknown region kind in '" + std::string(spec) + "'");
}

}  // namespace latwalk
