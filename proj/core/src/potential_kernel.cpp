#include "latwalk/potential_kernel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "latwalk/error.hpp"
#include "latwalk/stats.hpp"

namespace latwalk {

std::string_view to_string(KernelMethod m) {
  switch (m) {
    case KernelMethod::Series: return "series";
    case KernelMethod::Fourier: return "fourier";
    case KernelMethod::Exact: return "exact";
  }
  return "?";
}

namespace {

constexpr double kPi = std::numbers::pi;
// Largest axis grid the quadrature will allocate (two complex N x N matrices).
constexpr std::size_t kMaxNodes = 6000;

struct GaussRule {
  std::vector<double> x, w;  // on [-1, 1]
};

template <unsigned N>
GaussRule gauss_rule() {
  using G = boost::math::quadrature::gauss<double, N>;
  GaussRule r;
  const auto& a = G::abscissa();
  const auto& w = G::weights();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) {
      r.x.push_back(0.0);
      r.w.push_back(w[i]);
      continue;
    }
    r.x.push_back(-a[i]);
    r.w.push_back(w[i]);
    r.x.push_back(a[i]);
    r.w.push_back(w[i]);
  }
  return r;
}

GaussRule gauss_rule(int order) {
  switch (order) {
    case 6: return gauss_rule<6>();
    case 8: return gauss_rule<8>();
    case 10: return gauss_rule<10>();
    case 12: return gauss_rule<12>();
    case 14: return gauss_rule<14>();
    case 16: return gauss_rule<16>();
    case 20: return gauss_rule<20>();
    case 24: return gauss_rule<24>();
    default: fail(ErrorCode::InvalidArgument, "unsupported Gauss-Legendre order " + std::to_string(order));
  }
}

void add_panel(const GaussRule& g, double lo, double hi, bool inner, std::vector<double>& nodes,
               std::vector<double>& weights, std::vector<std::uint8_t>& flags) {
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  for (std::size_t i = 0; i < g.x.size(); ++i) {
    nodes.push_back(mid + half * g.x[i]);
    weights.push_back(half * g.w[i]);
    flags.push_back(inner ? 1 : 0);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// FourierKernel

FourierKernel::FourierKernel(const WalkModel& model, std::int32_t max_coordinate, QuadratureSpec spec)
    : max_coord_(std::max<std::int32_t>(max_coordinate, 1)), spec_(spec) {
  if (!model.moments().generates_lattice)
    fail(ErrorCode::PeriodicWalk, "1 - phi vanishes off the origin: the support of '" + model.name() +
                                      "' generates an index-" + std::to_string(model.moments().subgroup_index) +
                                      " subgroup");
  for (const auto& s : model.steps())
    if (s.prob > 0.0) steps_.push_back(s);
  for (const auto& s : steps_) {
    const double j = s.offset.j, k = s.offset.k;
    q_[0][0] += s.prob * j * j;
    q_[0][1] += s.prob * j * k;
    q_[1][1] += s.prob * k * k;
  }
  q_[1][0] = q_[0][1];

  const double freq = static_cast<double>(max_coord_) + 2.0 * model.max_coordinate();
  const double raw = std::max(freq / spec_.periods_per_panel, static_cast<double>(spec_.min_panels));
  panels_ = 2 * static_cast<int>(std::ceil(raw / 2.0));
  const double width = 2.0 * kPi / panels_;
  const double h_target = std::min(width / 4.0, 1e-4 / (max_coord_ + 1.0));
  levels_ = static_cast<int>(std::ceil(std::log2(width / h_target)));
  inner_half_width_ = width / std::ldexp(1.0, levels_);

  main_ = build(spec_.order, spec_.graded_order);
  check_ = build(spec_.order - spec_.check_drop, spec_.graded_order - spec_.check_drop);
}

FourierKernel::Rule FourierKernel::build(int order, int graded_order) const {
  const GaussRule uniform = gauss_rule(order), graded = gauss_rule(graded_order);
  const double width = 2.0 * kPi / panels_;

  std::vector<double> nodes, w;
  std::vector<std::uint8_t> inner;
  for (int p = 0; p < panels_; ++p) {
    const double lo = -kPi + p * width;
    if (p == panels_ / 2 - 1) {
      // [-width, 0] and [0, width] are replaced by the graded panels and the inner cell.
      for (int l = 1; l <= levels_; ++l)
        add_panel(graded, -width / std::ldexp(1.0, l - 1), -width / std::ldexp(1.0, l), false, nodes, w, inner);
      add_panel(graded, -inner_half_width_, inner_half_width_, true, nodes, w, inner);
      for (int l = levels_; l >= 1; --l)
        add_panel(graded, width / std::ldexp(1.0, l), width / std::ldexp(1.0, l - 1), false, nodes, w, inner);
      ++p;
      continue;
    }
    add_panel(uniform, lo, lo + width, false, nodes, w, inner);
  }
  const std::size_t n = nodes.size();
  if (n > kMaxNodes)
    fail(ErrorCode::BudgetExceeded, "quadrature grid of " + std::to_string(n) + " nodes per axis exceeds the budget");

  // Half-angle tables per node and step: sin/cos(theta * coordinate / 2).
  const std::size_t m = steps_.size();
  std::vector<double> s1(n * m), c1(n * m), s2(n * m), c2(n * m);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t y = 0; y < m; ++y) {
      s1[a * m + y] = std::sin(0.5 * nodes[a] * steps_[y].offset.j);
      c1[a * m + y] = std::cos(0.5 * nodes[a] * steps_[y].offset.j);
      s2[a * m + y] = std::sin(0.5 * nodes[a] * steps_[y].offset.k);
      c2[a * m + y] = std::cos(0.5 * nodes[a] * steps_[y].offset.k);
    }

  Rule rule;
  rule.nodes = nodes;
  rule.inner = inner;
  rule.weights.assign(n * n, {0.0, 0.0});
  rule.total = {0.0, 0.0};
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (inner[a] && inner[b]) continue;
      // 1 - phi = sum p (2 sin^2(t/2) - i sin t), which stays accurate near theta = 0.
      double re = 0.0, im = 0.0;
      for (std::size_t y = 0; y < m; ++y) {
        const double sa = s1[a * m + y], ca = c1[a * m + y], sb = s2[b * m + y], cb = c2[b * m + y];
        const double sh = sa * cb + ca * sb;  // sin(t/2)
        const double ch = ca * cb - sa * sb;  // cos(t/2)
        re += steps_[y].prob * 2.0 * sh * sh;
        im -= steps_[y].prob * 2.0 * sh * ch;
      }
      const std::complex<double> val = w[a] * w[b] / std::complex<double>(re, im);
      // Column-major storage for the matrix-vector product in evaluate().
      rule.weights[b * n + a] = val;
      rule.total += val;
    }
  }
  return rule;
}

double FourierKernel::evaluate(const Rule& rule, Point z) const {
  const auto n = static_cast<Eigen::Index>(rule.nodes.size());
  Eigen::VectorXcd e1(n), e2(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    e1[a] = std::polar(1.0, -rule.nodes[a] * z.j);
    e2[a] = std::polar(1.0, -rule.nodes[a] * z.k);
  }
  const Eigen::Map<const Eigen::MatrixXcd> w(rule.weights.data(), n, n);
  const Eigen::VectorXcd v = w * e2;
  const std::complex<double> t = e1.transpose() * v;
  return (rule.total - t).real();
}

double FourierKernel::inner_cell(Point z) const {
  // h^2 * \int_{[-1,1]^2} (u.x)^2 / (u^T Q u) du in polar form: the radial
  // extent of the square at angle psi is 1 / max(|cos|, |sin|).
  static const GaussRule g = gauss_rule(20);
  double sum = 0.0;
  for (int sector = 0; sector < 8; ++sector) {
    const double lo = sector * kPi / 4.0, half = kPi / 8.0;
    for (std::size_t i = 0; i < g.x.size(); ++i) {
      const double psi = lo + half * (1.0 + g.x[i]);
      const double c = std::cos(psi), s = std::sin(psi);
      const double dx = c * z.j + s * z.k;
      const double quad = q_[0][0] * c * c + 2.0 * q_[0][1] * c * s + q_[1][1] * s * s;
      const double rmax = 1.0 / std::max(std::abs(c), std::abs(s));
      sum += half * g.w[i] * dx * dx / quad * rmax * rmax / 2.0;
    }
  }
  return inner_half_width_ * inner_half_width_ * sum;
}

KernelValue FourierKernel::operator()(Point z) const {
  if (z == Point{}) return {0.0, 0.0, KernelMethod::Exact};
  if (std::abs(z.j) > max_coord_ || std::abs(z.k) > max_coord_)
    fail(ErrorCode::InvalidArgument, "point outside the quadrature's coordinate range");
  const double norm = 1.0 / (4.0 * kPi * kPi);
  const double inner = inner_cell(z);
  const double v = (evaluate(main_, z) + inner) * norm;
  const double vc = (evaluate(check_, z) + inner) * norm;
  const double roundoff = 1e-15 * (std::abs(main_.total) * norm + std::abs(v)) * std::sqrt(main_.nodes.size());
  // The expansion drops terms of relative size h * |x|.
  const double expansion = std::abs(inner) * norm * inner_half_width_ * (std::abs(z.j) + std::abs(z.k) + 1.0);
  return {v, std::abs(v - vc) + roundoff + expansion, KernelMethod::Fourier};
}

KernelValue kernel_fourier(const WalkModel& model, Point z, QuadratureSpec spec) {
  if (z == Point{}) return {0.0, 0.0, KernelMethod::Exact};
  return FourierKernel(model, std::max(std::abs(z.j), std::abs(z.k)), spec)(z);
}

// ---------------------------------------------------------------------------
// PotentialKernel

PotentialKernel::PotentialKernel(WalkModel model, QuadratureSpec spec, SeriesOptions fallback)
    : model_(std::move(model)),
      spec_(spec),
      fallback_(fallback),
      periodic_(!model_.moments().generates_lattice) {}

std::size_t PotentialKernel::cache_size() const {
  std::shared_lock lock(mutex_);
  return cache_.size();
}

KernelValue PotentialKernel::value(Point z) {
  if (z == Point{}) return {0.0, 0.0, KernelMethod::Exact};
  {
    std::shared_lock lock(mutex_);
    if (auto it = cache_.find(z); it != cache_.end()) return it->second;
  }
  const Point one[1] = {z};
  prefetch(one);
  std::shared_lock lock(mutex_);
  return cache_.at(z);
}

void PotentialKernel::prefetch(std::span<const Point> points) {
  std::vector<Point> missing;
  std::int32_t reach = 0;
  std::shared_ptr<const FourierKernel> evaluator;
  {
    std::shared_lock lock(mutex_);
    for (const auto& p : points) {
      if (p == Point{} || cache_.count(p)) continue;
      missing.push_back(p);
      reach = std::max({reach, std::abs(p.j), std::abs(p.k)});
    }
    evaluator = evaluator_;
  }
  std::sort(missing.begin(), missing.end(), row_major_less);
  missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
  if (missing.empty()) return;

  std::vector<KernelValue> values;
  if (periodic_) {
    values = kernel_series(model_, missing, fallback_);
  } else {
    if (!evaluator || evaluator->max_coordinate() < reach) {
      // Round the range up so neighbouring queries reuse the grid.
      const std::int32_t range = std::max<std::int32_t>(16, (reach + 15) / 16 * 16);
      evaluator = std::make_shared<const FourierKernel>(model_, range, spec_);
    }
    values.reserve(missing.size());
    for (const auto& p : missing) values.push_back((*evaluator)(p));
  }

  std::unique_lock lock(mutex_);
  for (std::size_t i = 0; i < missing.size(); ++i) cache_.emplace(missing[i], values[i]);
  if (!periodic_ && (!evaluator_ || evaluator_->max_coordinate() < evaluator->max_coordinate()))
    evaluator_ = std::move(evaluator);
}

void PotentialKernel::load_cache(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open kernel cache '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  std::unique_lock lock(mutex_);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || line.rfind("model_hash", 0) == 0) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    if (cols.size() != 6) fail(ErrorCode::ParseError, path + ":" + std::to_string(line_no) + ": expected 6 columns");
    if (cols[0] != model_.hash()) continue;
    try {
      const Point p{std::stoi(cols[1]), std::stoi(cols[2])};
      KernelValue v{std::stod(cols[3]), std::stod(cols[4]), KernelMethod::Fourier};
      if (cols[5] == "series") v.method = KernelMethod::Series;
      else if (cols[5] == "exact") v.method = KernelMethod::Exact;
      cache_[p] = v;
    } catch (const std::logic_error&) {
      fail(ErrorCode::ParseError, path + ":" + std::to_string(line_no) + ": malformed number");
    }
  }
}

void PotentialKernel::save_cache(const std::string& path) const {
  std::vector<std::pair<Point, KernelValue>> rows;
  {
    std::shared_lock lock(mutex_);
    rows.assign(cache_.begin(), cache_.end());
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return row_major_less(a.first, b.first); });
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write kernel cache '" + path + "'");
  out << "model_hash,x,y,value,err,method\n";
  char buf[128];
  for (const auto& [p, v] : rows) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.6g,", p.j, p.k, v.value, v.error);
    out << model_.hash() << ',' << buf << to_string(v.method) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Asymptotic fit

std::vector<Point> ring_points(const LatticeBasis& basis, const RadiiWindow& window) {
  if (!(window.r_min > 0.0 && window.r_max > window.r_min) || window.n_points < 2)
    fail(ErrorCode::InvalidArgument, "radii window must satisfy 0 < r_min < r_max with at least two points");
  double m[2][2];
  basis.as_matrix(m);
  const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  const double ratio = std::log(window.r_max / window.r_min);
  std::vector<Point> out;
  for (std::size_t i = 0; i < window.n_points; ++i) {
    const double r = window.r_min * std::exp(ratio * static_cast<double>(i) / (window.n_points - 1));
    const double x = r * std::cos(golden * i), y = r * std::sin(golden * i);
    // Solve [e1 e2] (j, k)^T = (x, y)^T and round to the nearest coordinates.
    const double j = (m[1][1] * x - m[0][1] * y) / det;
    const double k = (-m[1][0] * x + m[0][0] * y) / det;
    const Point p{static_cast<std::int32_t>(std::lround(j)), static_cast<std::int32_t>(std::lround(k))};
    const double d = std::sqrt(basis.norm2(p));
    if (d < window.r_min || d > window.r_max) continue;
    if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
  }
  return out;
}

AsymptoticFit fit_asymptotics(PotentialKernel& kernel, const RadiiWindow& window) {
  const auto& basis = kernel.model().basis();
  const auto points = ring_points(basis, window);
  if (points.size() < 100)
    fail(ErrorCode::InsufficientSamples,
         "asymptotic fit needs at least 100 ring points, got " + std::to_string(points.size()));
  kernel.prefetch(points);

  AsymptoticFit fit;
  std::vector<double> logr, values;
  for (const auto& p : points) {
    const double r = std::sqrt(basis.norm2(p));
    fit.radii.push_back(r);
    logr.push_back(std::log(r));
    values.push_back(kernel(p));
  }
  const LinearFit line = least_squares(logr, values);
  fit.slope = line.slope;
  fit.kbar_fit = line.intercept;
  fit.sigma2_fit = basis.covolume() / (kPi * line.slope);
  for (std::size_t i = 0; i < points.size(); ++i)
    fit.residuals.push_back(values[i] - (line.slope * logr[i] + line.intercept));

  const std::size_t bins = std::max<std::size_t>(window.bins, 3);
  const double lo = std::log(window.r_min), width = std::log(window.r_max / window.r_min) / bins;
  std::vector<double> peak(bins, 0.0), log_sum(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto b = std::min(bins - 1, static_cast<std::size_t>((logr[i] - lo) / width));
    peak[b] = std::max(peak[b], std::abs(fit.residuals[i]));
    log_sum[b] += logr[i];
    ++count[b];
  }
  std::vector<double> bx, by;
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] == 0 || peak[b] <= 0.0) continue;
    bx.push_back(log_sum[b] / count[b]);
    by.push_back(std::log(peak[b]));
  }
  if (bx.size() < 3) fail(ErrorCode::InsufficientSamples, "residual exponent needs three populated radial bins");
  fit.residual_exponent = least_squares(bx, by).slope;

  kernel.fitted_sigma2 = fit.sigma2_fit;
  kernel.fitted_kbar = fit.kbar_fit;
  return fit;
}

}  // namespace latwalk
