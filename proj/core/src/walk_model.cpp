#include "latwalk/walk_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "latwalk/error.hpp"

namespace latwalk {

namespace {

constexpr double kMassTolerance = 1e-12;
constexpr double kMeanTolerance = 1e-12;
constexpr double kCovarianceTolerance = 1e-10;

std::int64_t ext_gcd(std::int64_t a, std::int64_t b, std::int64_t& x, std::int64_t& y) {
  if (b == 0) {
    x = a >= 0 ? 1 : -1;
    y = 0;
    return a >= 0 ? a : -a;
  }
  std::int64_t x1 = 0, y1 = 0;
  const std::int64_t g = ext_gcd(b, a % b, x1, y1);
  x = y1;
  y = x1 - (a / b) * y1;
  return g;
}

std::int64_t floor_mod(std::int64_t a, std::int64_t m) {
  const std::int64_t r = a % m;
  return r < 0 ? r + m : r;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// StepDistribution

StepDistribution::StepDistribution(std::vector<Step> support, double moment_delta)
    : support_(std::move(support)), delta_(moment_delta) {
  if (!(moment_delta > 0.0)) fail(ErrorCode::InvalidArgument, "moment exponent delta must be positive");
  std::sort(support_.begin(), support_.end(),
            [](const Step& a, const Step& b) { return row_major_less(a.offset, b.offset); });
  // Merge repeated offsets so pmf() is a function.
  std::vector<Step> merged;
  merged.reserve(support_.size());
  for (const auto& s : support_) {
    if (!merged.empty() && merged.back().offset == s.offset) {
      merged.back().prob += s.prob;
    } else {
      merged.push_back(s);
    }
  }
  support_ = std::move(merged);
}

StepDistribution StepDistribution::heavy_tail(HeavyTailSpec spec, double moment_delta) {
  if (spec.rmax < 1) fail(ErrorCode::InvalidArgument, "heavy-tail rmax must be >= 1");
  if (!(spec.beta > 4.0 + moment_delta)) {
    std::ostringstream os;
    os << "heavy-tail exponent beta=" << spec.beta << " does not give a finite (3+" << moment_delta
       << ") moment; need beta > " << 4.0 + moment_delta;
    fail(ErrorCode::InvalidArgument, os.str());
  }
  std::vector<double> weight(static_cast<std::size_t>(spec.rmax));
  double total = 0.0;
  for (std::int32_t r = spec.rmax; r >= 1; --r) {  // small terms first
    weight[r - 1] = std::pow(static_cast<double>(r), -spec.beta);
    total += weight[r - 1];
  }
  std::vector<Step> steps;
  steps.reserve(4 * static_cast<std::size_t>(spec.rmax));
  for (std::int32_t r = 1; r <= spec.rmax; ++r) {
    const double p = 0.25 * weight[r - 1] / total;
    steps.push_back({{r, 0}, p});
    steps.push_back({{-r, 0}, p});
    steps.push_back({{0, r}, p});
    steps.push_back({{0, -r}, p});
  }
  StepDistribution dist(std::move(steps), moment_delta);
  dist.heavy_ = spec;
  return dist;
}

double StepDistribution::pmf(Point z) const {
  auto it = std::lower_bound(support_.begin(), support_.end(), z,
                             [](const Step& s, Point p) { return row_major_less(s.offset, p); });
  return (it != support_.end() && it->offset == z) ? it->prob : 0.0;
}

// ---------------------------------------------------------------------------
// Validation

std::vector<std::string> MomentReport::violations() const {
  std::vector<std::string> out;
  if (!mean_zero) out.emplace_back("mean is not zero (cond1)");
  if (!isotropic) out.emplace_back("covariance is not a multiple of the identity (cond2)");
  if (!moment_finite) out.emplace_back("(3+delta) moment not finite (cond3)");
  if (!generates_lattice) out.emplace_back("support does not generate the lattice");
  return out;
}

std::int64_t subgroup_index(const std::vector<Point>& vectors) {
  // Hermite normal form of the generated subgroup: span{(a, b), (0, d)}.
  std::int64_t a = 0, b = 0, d = 0;
  for (const auto& v : vectors) {
    std::int64_t x = v.j, y = v.k;
    if (x == 0 && a == 0) {
      d = std::gcd(d, y);
    } else if (a == 0) {
      a = x;
      b = y;
      if (a < 0) {
        a = -a;
        b = -b;
      }
    } else if (x == 0) {
      d = std::gcd(d, y);
    } else {
      std::int64_t s = 0, t = 0;
      const std::int64_t g = ext_gcd(a, x, s, t);
      const std::int64_t nb = s * b + t * y;
      const std::int64_t rem = (a / g) * y - (x / g) * b;
      a = g;
      b = nb;
      d = std::gcd(d, rem);
    }
    if (d != 0) b = floor_mod(b, d);
  }
  if (d < 0) d = -d;
  return a * d;
}

MomentReport validate(const StepDistribution& dist, const LatticeBasis& basis) {
  const auto& support = dist.support();
  if (support.size() < 2) fail(ErrorCode::DegenerateSupport, "support has fewer than two points");

  double total = 0.0;
  for (const auto& s : support) {
    if (!(s.prob >= 0.0)) {
      std::ostringstream os;
      os << "negative mass " << s.prob << " at (" << s.offset.j << "," << s.offset.k << ")";
      fail(ErrorCode::NonProbability, os.str());
    }
  }
  // Sum smallest masses first to keep the total exact to rounding.
  std::vector<double> masses;
  masses.reserve(support.size());
  for (const auto& s : support) masses.push_back(s.prob);
  std::sort(masses.begin(), masses.end());
  for (double m : masses) total += m;
  if (std::abs(total - 1.0) > kMassTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << "probabilities sum to " << total;
    fail(ErrorCode::NonProbability, os.str());
  }

  std::vector<Point> charged;
  for (const auto& s : support)
    if (s.prob > 0.0 && !(s.offset == Point{})) charged.push_back(s.offset);
  bool spans_plane = false;
  for (std::size_t i = 1; i < charged.size() && !spans_plane; ++i) {
    const std::int64_t cross = std::int64_t(charged[0].j) * charged[i].k -
                               std::int64_t(charged[0].k) * charged[i].j;
    spans_plane = cross != 0;
  }
  if (!spans_plane) fail(ErrorCode::DegenerateSupport, "support spans at most a line");

  MomentReport r;
  double mx = 0.0, my = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0, mom = 0.0;
  const double q = 3.0 + dist.moment_delta();
  for (const auto& s : support) {
    const double x = basis.re(s.offset), y = basis.im(s.offset);
    mx += s.prob * x;
    my += s.prob * y;
    sxx += s.prob * x * x;
    syy += s.prob * y * y;
    sxy += s.prob * x * y;
    mom += s.prob * std::pow(std::hypot(x, y), q);
  }
  r.mean = {mx, my};
  r.covariance = {{{sxx - mx * mx, sxy - mx * my}, {sxy - mx * my, syy - my * my}}};
  const double cxx = r.covariance[0][0], cyy = r.covariance[1][1], cxy = r.covariance[0][1];
  r.sigma2 = 0.5 * (cxx + cyy);
  r.mean_zero = std::abs(mx) <= kMeanTolerance && std::abs(my) <= kMeanTolerance;
  const double scale = std::max(1.0, cxx + cyy);
  r.isotropic = r.sigma2 > 0.0 && std::abs(cxx - cyy) <= kCovarianceTolerance * scale &&
                std::abs(cxy) <= kCovarianceTolerance * scale;
  r.third_plus_delta_moment = mom;
  if (dist.heavy()) {
    r.moment_analytically_finite = dist.heavy()->beta > 4.0 + dist.moment_delta();
    r.moment_finite = r.moment_analytically_finite;
  } else {
    r.moment_finite = std::isfinite(mom);
  }
  r.subgroup_index = subgroup_index(charged);
  r.generates_lattice = r.subgroup_index == 1;
  return r;
}

// ---------------------------------------------------------------------------
// WalkModel

WalkModel::WalkModel(LatticeBasis basis, StepDistribution dist, std::string name)
    : basis_(basis), dist_(std::move(dist)), name_(std::move(name)) {
  report_ = validate(dist_, basis_);
  std::ostringstream os;
  os.precision(17);
  os << "basis:" << basis_.e1().real() << ',' << basis_.e1().imag() << ',' << basis_.e2().real()
     << ',' << basis_.e2().imag() << ';';
  for (const auto& s : dist_.support()) {
    os << s.offset.j << ',' << s.offset.k << ',' << s.prob << ';';
    max_coord_ = std::max({max_coord_, std::abs(s.offset.j), std::abs(s.offset.k)});
    max_step_ = std::max(max_step_, std::sqrt(basis_.norm2(s.offset)));
  }
  hash_ = fnv1a_hex(os.str());
}

void WalkModel::require_admissible() const {
  if (report_.passes()) return;
  std::string msg = "model '" + name_ + "' violates:";
  for (const auto& v : report_.violations()) msg += " " + v + ";";
  const bool only_generation = report_.mean_zero && report_.isotropic && report_.moment_finite;
  fail(only_generation ? ErrorCode::GeneratesLattice : ErrorCode::InvalidArgument, msg);
}

WalkModel reverse(const WalkModel& model) {
  std::vector<Step> steps;
  steps.reserve(model.steps().size());
  for (const auto& s : model.steps()) steps.push_back({-s.offset, s.prob});
  StepDistribution dist(std::move(steps), model.distribution().moment_delta());
  std::string name = model.name();
  if (!name.empty() && name.back() == '*') {
    name.pop_back();
  } else {
    name += '*';
  }
  return WalkModel(model.basis(), std::move(dist), std::move(name));
}

Normalization normalize(const WalkModel& model) {
  const auto& c = model.moments().covariance;
  const double a = c[0][0], b = c[0][1], d = c[1][1];
  const double tr = a + d, det = a * d - b * b;
  const double disc = std::sqrt(std::max(0.0, 0.25 * (a - d) * (a - d) + b * b));
  const double lmin = 0.5 * tr - disc, lmax = 0.5 * tr + disc;
  if (!(lmin > 1e-14 * std::max(1.0, lmax)) || !(det > 0.0)) {
    fail(ErrorCode::SingularCovariance, "covariance is not positive definite");
  }
  if (model.moments().isotropic) {
    return {{{{1.0, 0.0}, {0.0, 1.0}}}, model};
  }
  // Eigenvectors of the symmetric 2x2 covariance.
  double v1x, v1y;
  if (std::abs(b) > 0.0) {
    v1x = lmin - d;
    v1y = b;
  } else if (a <= d) {
    v1x = 1.0;
    v1y = 0.0;
  } else {
    v1x = 0.0;
    v1y = 1.0;
  }
  const double nv = std::hypot(v1x, v1y);
  v1x /= nv;
  v1y /= nv;
  const double v2x = -v1y, v2y = v1x;
  // Lambda0 = sqrt(lmin) * C^{-1/2} = V diag(1, sqrt(lmin/lmax)) V^T
  const double s1 = 1.0, s2 = std::sqrt(lmin / lmax);
  Matrix2 m0{};
  m0[0][0] = s1 * v1x * v1x + s2 * v2x * v2x;
  m0[0][1] = s1 * v1x * v1y + s2 * v2x * v2y;
  m0[1][0] = m0[0][1];
  m0[1][1] = s1 * v1y * v1y + s2 * v2y * v2y;

  const auto e1 = model.basis().e1(), e2 = model.basis().e2();
  const double ix = m0[0][0] * e1.real() + m0[0][1] * e1.imag();
  const double iy = m0[1][0] * e1.real() + m0[1][1] * e1.imag();
  const double ang = -std::atan2(iy, ix);
  const double cr = std::cos(ang), sr = std::sin(ang);
  Matrix2 map{};
  map[0][0] = cr * m0[0][0] - sr * m0[1][0];
  map[0][1] = cr * m0[0][1] - sr * m0[1][1];
  map[1][0] = sr * m0[0][0] + cr * m0[1][0];
  map[1][1] = sr * m0[0][1] + cr * m0[1][1];

  auto apply = [&](std::complex<double> v) {
    return std::complex<double>(map[0][0] * v.real() + map[0][1] * v.imag(),
                                map[1][0] * v.real() + map[1][1] * v.imag());
  };
  std::complex<double> ne1 = apply(e1);
  ne1 = {ne1.real(), 0.0};  // exact zero after the rotation, up to rounding
  LatticeBasis image(ne1, apply(e2));
  WalkModel out(image, model.distribution(), model.name() + "~n");
  return {map, std::move(out)};
}

// ---------------------------------------------------------------------------
// Presets

namespace presets {

WalkModel srw() {
  return WalkModel({}, StepDistribution({{{1, 0}, 0.25}, {{-1, 0}, 0.25}, {{0, 1}, 0.25}, {{0, -1}, 0.25}}),
                   "srw");
}

WalkModel range2() {
  std::vector<Step> s;
  for (int r : {1, 2}) {
    s.push_back({{r, 0}, 0.125});
    s.push_back({{-r, 0}, 0.125});
    s.push_back({{0, r}, 0.125});
    s.push_back({{0, -r}, 0.125});
  }
  return WalkModel({}, StepDistribution(std::move(s)), "range2");
}

WalkModel skewed() {
  return WalkModel({}, StepDistribution({{{1, 0}, 0.5}, {{-1, 1}, 0.25}, {{-1, -1}, 0.25}}), "skewed");
}

WalkModel skewed_normalized() { return normalize(skewed()).model; }

WalkModel diagonal() {
  return WalkModel({}, StepDistribution({{{1, 1}, 0.25}, {{-1, -1}, 0.25}, {{1, -1}, 0.25}, {{-1, 1}, 0.25}}),
                   "diagonal");
}

WalkModel heavy_tail(double beta, std::int32_t rmax, double delta) {
  std::ostringstream name;
  name << "heavy(beta=" << beta << ",rmax=" << rmax << ")";
  return WalkModel({}, StepDistribution::heavy_tail({beta, rmax}, delta), name.str());
}

}  // namespace presets

}  // namespace latwalk
