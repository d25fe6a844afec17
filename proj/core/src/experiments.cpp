#include "latwalk/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>
#include <string_view>

#include <nlohmann/json.hpp>

#include "latwalk/error.hpp"
#include "latwalk/green.hpp"
#include "latwalk/potential_kernel.hpp"
#include "latwalk/stats.hpp"

namespace latwalk {

// ---------------------------------------------------------------------------
// Report

bool ExperimentReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const Check& ExperimentReport::check(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  fail(ErrorCode::InvalidArgument, "report '" + experiment + "' has no check '" + name + "'");
}

double ExperimentReport::metric(const std::string& name) const {
  for (const auto& [key, value] : metrics)
    if (key == name) return value;
  fail(ErrorCode::InvalidArgument, "report '" + experiment + "' has no metric '" + name + "'");
}

ScalingTable ExperimentReport::table(const std::string& label, const std::string& hash) const {
  ScalingTable t;
  t.label = label;
  t.model_hash = hash.empty() ? model_hash : hash;
  for (const auto& r : rows)
    if (r.label == label && (hash.empty() || r.model_hash == hash)) t.rows.push_back({r.param_n, r.param_k, r.p_hat, r.std_error});
  return t;
}

namespace {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::string results_csv(const ExperimentReport& report) {
  std::ostringstream os;
  os << "# tool=latwalk " << LATWALK_VERSION_STRING << " model_hash=" << report.model_hash
     << " seed=" << report.seed << "\n";
  os << "experiment_id,model_hash,param_n,param_k,label,p_hat,stderr,n_samples,seed,cap_hits\n";
  for (const auto& r : report.rows) {
    os << r.experiment_id << ',' << r.model_hash << ',' << r.param_n << ',' << r.param_k << ',' << r.label << ','
       << format_double(r.p_hat) << ',' << format_double(r.std_error) << ',' << r.n_samples << ',' << r.seed << ','
       << r.cap_hits << '\n';
  }
  return os.str();
}

std::string summary_json(const ExperimentReport& report, double duration_s) {
  nlohmann::ordered_json j;
  j["experiment"] = report.experiment;
  j["pass"] = report.pass();
  j["model_hash"] = report.model_hash;
  j["tool_version"] = LATWALK_VERSION_STRING;
  auto& metrics = j["metrics"] = nlohmann::ordered_json::object();
  for (const auto& [key, value] : report.metrics) metrics[key] = std::isfinite(value) ? nlohmann::ordered_json(value) : nlohmann::ordered_json(nullptr);
  auto& checks = j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : report.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  std::uint64_t samples = 0, caps = 0;
  for (const auto& r : report.rows) {
    samples += r.n_samples;
    caps += r.cap_hits;
  }
  const double cap_rate = samples ? static_cast<double>(caps) / static_cast<double>(samples) : 0.0;
  j["cap_rate"] = cap_rate;
  j["cap_rate_flagged"] = cap_rate > 1e-3;
  j["seed"] = report.seed;
  j["duration_s"] = duration_s;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Shared helpers

namespace {

std::uint64_t fnv(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

double spread(const std::vector<double>& v) {
  if (v.empty()) return 1.0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity();
}

void add_check(ExperimentReport& r, std::string name, bool pass, std::string detail) {
  r.checks.push_back({std::move(name), pass, std::move(detail)});
}

void add_metric(ExperimentReport& r, std::string name, double value) { r.metrics.emplace_back(std::move(name), value); }

std::vector<double> as_double(const std::vector<int>& v) { return {v.begin(), v.end()}; }

/// p[i+1] <= p[i] + 2 combined stderr along the rows of a table (or >= when increasing).
bool monotone(const ScalingTable& t, bool decreasing) {
  for (std::size_t i = 0; i + 1 < t.rows.size(); ++i) {
    const auto& a = t.rows[i];
    const auto& b = t.rows[i + 1];
    const double tol = 2.0 * std::hypot(a.std_error, b.std_error);
    if (decreasing ? b.estimate > a.estimate + tol : b.estimate < a.estimate - tol) return false;
  }
  return true;
}

/// Seeds and records Monte Carlo cells; each cell's seed depends on the
/// experiment, label, model and grid position only.
class Cells {
 public:
  Cells(ExperimentReport& report, const RunOptions& options) : report_(report), options_(options) {}

  McConfig config(const WalkModel& model, const std::string& label, std::int64_t n, std::int64_t k,
                  std::uint64_t samples) const {
    McConfig cfg;
    cfg.seed = derive_seed(options_.seed, {fnv(report_.experiment), fnv(label), fnv(model.hash()),
                                           static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(k)});
    cfg.n_samples = options_.samples_override.value_or(samples);
    cfg.chunk = options_.chunk;
    cfg.workers = options_.workers;
    cfg.hard_cap = options_.hard_cap;
    return cfg;
  }

  void record(const WalkModel& model, const std::string& label, std::int64_t n, std::int64_t k, double value,
              double std_error, std::uint64_t samples, std::uint64_t seed, std::uint64_t caps) {
    report_.rows.push_back({report_.experiment, model.hash(), n, k, label, value, std_error, samples, seed, caps});
  }

  /// P(trigger `success` ends the trajectory) from `start`.
  Estimate race(const WalkModel& model, Point start, StoppingRule rule, const std::string& success,
                const std::string& label, std::int64_t n, std::int64_t k, std::uint64_t samples) {
    const auto cfg = config(model, label, n, k, samples);
    const auto e = estimate_event(model, start, EventSpec::fired(std::move(rule), success), cfg);
    record(model, label, n, k, e.mean, e.std_error, e.n_samples, cfg.seed, e.cap_hits);
    return e;
  }

 private:
  ExperimentReport& report_;
  const RunOptions& options_;
};

ExperimentReport new_report(std::string name, const WalkModel& model, const RunOptions& options) {
  ExperimentReport r;
  r.experiment = std::move(name);
  r.model_hash = model.hash();
  r.seed = options.seed;
  return r;
}

/// Slope-band and ratio-spread checks for one table.
PowerFit check_power(ExperimentReport& r, const ScalingTable& t, const std::string& tag, double target, double lo,
                     double hi) {
  const auto fit = fit_power(t, target);
  add_metric(r, "slope " + tag, fit.slope);
  add_metric(r, "slope_stderr " + tag, fit.slope_stderr);
  add_metric(r, "spread " + tag, fit.spread);
  add_check(r, "slope " + tag, fit.slope >= lo && fit.slope <= hi,
            "slope " + fmt(fit.slope) + " +- " + fmt(fit.slope_stderr) + " in [" + fmt(lo) + ", " + fmt(hi) + "]");
  return fit;
}

/// The reflection z -> -conj(z) in the imaginary axis as a map on coordinates, if it preserves the lattice.
std::optional<std::function<Point(Point)>> imaginary_reflection(const LatticeBasis& basis) {
  const auto e1 = basis.e1(), e2 = basis.e2();
  const double det = e1.real() * e2.imag() - e1.imag() * e2.real();
  auto coords = [=](std::complex<double> c, double& x, double& y) {
    x = (c.real() * e2.imag() - c.imag() * e2.real()) / det;
    y = (e1.real() * c.imag() - e1.imag() * c.real()) / det;
  };
  std::int64_t m[2][2];
  const std::complex<double> images[2] = {-std::conj(e1), -std::conj(e2)};
  for (int c = 0; c < 2; ++c) {
    double x, y;
    coords(images[c], x, y);
    if (std::abs(x - std::round(x)) > 1e-9 || std::abs(y - std::round(y)) > 1e-9) return std::nullopt;
    m[0][c] = std::llround(x);
    m[1][c] = std::llround(y);
  }
  return [m](Point p) {
    return Point{static_cast<std::int32_t>(m[0][0] * p.j + m[0][1] * p.k),
                 static_cast<std::int32_t>(m[1][0] * p.j + m[1][1] * p.k)};
  };
}

bool symmetric_in_imaginary_axis(const WalkModel& model) {
  const auto reflect = imaginary_reflection(model.basis());
  if (!reflect) return false;
  for (const auto& s : model.steps())
    if (std::abs(model.pmf((*reflect)(s.offset)) - s.prob) > 1e-14) return false;
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// Exact experiments

ExperimentReport exact_identities(const WalkModel& model, const IdentityParams& params) {
  ExperimentReport r;
  r.experiment = "identities";
  r.model_hash = model.hash();
  const Region domain = Region::disk(params.radius);
  const Region segment = Region::segment(params.segment_lo, params.segment_hi, 1);
  const GreenTable table(model, domain);
  const auto& sites = table.sites();

  // Last-exit decomposition of the hitting probability of B'.
  const auto h = hit_probabilities(model, domain, segment);
  std::vector<double> escape(sites.size(), 0.0);
  for (std::size_t i = 0; i < sites.size(); ++i)
    if (segment.contains(sites.point(i), model.basis())) escape[i] = escape_positive_time(model, h, sites.point(i));
  double last_exit = 0.0;
  for (const auto& z : sites.points()) {
    const auto g = table.row(z);
    double sum = 0.0;
    for (std::size_t i = 0; i < sites.size(); ++i) sum += g[i] * escape[i];
    last_exit = std::max(last_exit, std::abs(h.at(z) - sum));
  }
  add_metric(r, "last_exit_max_residual", last_exit);
  add_check(r, "last_exit", last_exit <= params.identity_tolerance,
            "max residual " + fmt(last_exit) + " <= " + fmt(params.identity_tolerance));

  // P^z(T0_{0} < tau) = G(z,0) / G(0,0).
  const Point origin{0, 0};
  const auto h0 = hit_probabilities(model, domain, Region::points(std::span<const Point>(&origin, 1)));
  const auto col = table.column(origin);
  const double g00 = col[static_cast<std::size_t>(sites.index(origin))];
  double ratio = 0.0;
  for (std::size_t i = 0; i < sites.size(); ++i) ratio = std::max(ratio, std::abs(h0.h[i] - col[i] / g00));
  add_metric(r, "ratio_identity_max", ratio);
  add_check(r, "ratio_identity", ratio <= params.identity_tolerance,
            "max difference " + fmt(ratio) + " <= " + fmt(params.identity_tolerance));
  add_metric(r, "solver_max_residual", std::max({table.max_residual(), h.residual, h0.residual}));

  if (!params.kernel_checks) return r;

  PotentialKernel kernel(model);
  // Green's function from the potential kernel on a 3-spaced grid of pairs.
  std::vector<Point> grid;
  for (const auto& p : sites.points())
    if (p.j % 3 == 0 && p.k % 3 == 0) grid.push_back(p);
  double potential = 0.0, potential_err = 0.0;
  std::string failure;
  try {
    for (const auto& w : grid) {
      const auto g = table.row(w);
      for (const auto& z : grid) {
        const auto pc = green_via_potential(table, w, z, kernel, params.kernel_tolerance);
        potential = std::max(potential, std::abs(pc.value - g[static_cast<std::size_t>(sites.index(z))]));
        potential_err = std::max(potential_err, pc.error);
      }
    }
  } catch (const Error& e) {
    failure = e.what();
  }
  add_metric(r, "green_potential_max_diff", potential);
  add_metric(r, "green_potential_kernel_error", potential_err);
  add_check(r, "green_potential", failure.empty() && potential <= params.kernel_tolerance,
            failure.empty() ? "max difference " + fmt(potential) + " over " + std::to_string(grid.size() * grid.size()) +
                                  " pairs <= " + fmt(params.kernel_tolerance)
                            : failure);

  // Delta_{p*} a = delta_0.
  const WalkModel reversed = reverse(model);
  const double reach = params.harmonic_radius + model.max_step_length() + 1.0;
  const auto near = enumerate(Region::disk(reach), model.basis(), reach);
  kernel.prefetch(near);
  auto a = [&](Point p) -> std::optional<double> { return kernel.value(p).value; };
  double harmonic = 0.0;
  for (const auto& z : near) {
    const double r2 = model.basis().norm2(z);
    if (r2 < 1.0 || r2 > params.harmonic_radius * params.harmonic_radius) continue;
    harmonic = std::max(harmonic, std::abs(harmonic_residual(reversed, a, z)));
  }
  const double at_origin = std::abs(harmonic_residual(reversed, a, origin) - 1.0);
  add_metric(r, "harmonic_max", harmonic);
  add_metric(r, "harmonic_origin_deviation", at_origin);
  add_check(r, "harmonic", harmonic <= params.kernel_tolerance,
            "max |Delta a| " + fmt(harmonic) + " on 1 <= |z| <= " + fmt(params.harmonic_radius));
  add_check(r, "harmonic_origin", at_origin <= params.kernel_tolerance, "|Delta a(0) - 1| = " + fmt(at_origin));
  return r;
}

ExperimentReport exp_log_asymptotics(const WalkModel& model, const LogParams& params) {
  ExperimentReport r;
  r.experiment = "log_asymptotics";
  r.model_hash = model.hash();
  const auto& basis = model.basis();
  const double scale = std::numbers::pi * model.sigma2() / basis.covolume();
  std::vector<double> offsets, lows, highs;
  bool adjacent = true;
  const Point origin{0, 0};
  for (int n : params.n_grid) {
    const GreenTable table(model, Region::disk(n));
    const auto& sites = table.sites();
    const auto col = table.column(origin);
    const double g00 = col[static_cast<std::size_t>(sites.index(origin))];
    const double offset = scale * g00 - std::log(n);
    offsets.push_back(offset);
    r.rows.push_back({r.experiment, model.hash(), n, 0, "green_offset", offset, 0.0, 0, 0, 0});

    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t i = 0; i < sites.size(); ++i) {
      const double rad = std::sqrt(basis.norm2(sites.point(i)));
      if (rad < n / 10.0 || rad > 0.9 * n) continue;
      const double v = col[i] / g00 * std::log(n);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    lows.push_back(lo);
    highs.push_back(hi);
    r.rows.push_back({r.experiment, model.hash(), n, 0, "hit_origin_log_min", lo, 0.0, 0, 0, 0});
    r.rows.push_back({r.experiment, model.hash(), n, 0, "hit_origin_log_max", hi, 0.0, 0, 0, 0});

    // One step onto the origin: P^z(T_0 < tau_n) >= p(-z).
    for (const auto& s : model.steps()) {
      const Point z = -s.offset;
      const auto i = sites.index(z);
      if (i < 0) continue;
      if (col[static_cast<std::size_t>(i)] / g00 < s.prob - 1e-12) adjacent = false;
    }
  }
  const auto [omin, omax] = std::minmax_element(offsets.begin(), offsets.end());
  add_metric(r, "green_offset_min", *omin);
  add_metric(r, "green_offset_max", *omax);
  add_check(r, "green_bracket", *omax - *omin <= params.bracket_width,
            "pi s2 G_n(0,0) - log n in [" + fmt(*omin) + ", " + fmt(*omax) + "], width <= " + fmt(params.bracket_width));
  // Across the annulus the ratio tends to log 10 / log(10/9); the bound is on its uniformity in n.
  double annulus = 0.0;
  for (std::size_t i = 0; i < lows.size(); ++i) annulus = std::max(annulus, highs[i] / lows[i]);
  const double s = std::max(spread(lows), spread(highs));
  add_metric(r, "hit_origin_annulus_spread", annulus);
  add_metric(r, "hit_origin_log_spread", s);
  add_check(r, "hit_origin_spread", s <= params.spread_max,
            "spread over n of min and max of P^z(T_0 < tau_n) log n: " + fmt(s) + " <= " + fmt(params.spread_max));
  add_check(r, "adjacent_lower_bound", adjacent, "P^z(T_0 < tau_n) >= p(-z) for single-step neighbours");
  return r;
}

ExperimentReport exp_gottahit(const WalkModel& model, const GottahitParams& params, const RunOptions& options) {
  ExperimentReport r = new_report("gottahit", model, options);
  const auto& basis = model.basis();
  std::vector<double> all_inf;
  for (const auto& base_policy : params.policies) {
    DensePolicy policy = base_policy;
    if (policy.kind == DensePolicyKind::RandomAngle) policy.seed = derive_seed(options.seed, {policy.seed});
    const std::string name = to_string(policy);
    std::vector<double> inf_small, visits_small, visits_full;
    bool nested = true;
    for (int n : params.n_grid) {
      auto set = std::make_shared<const DenseSet>(make_dense(params.kappa, 2.0 * n, policy, basis));
      const Region domain = Region::disk(n);
      const auto small = hit_probabilities(model, domain, Region::slice(set, n / 4.0, n / 2.0));
      const auto large = hit_probabilities(model, domain, Region::slice(set, n / 4.0, n));
      double lo_small = 1.0, lo_large = 1.0;
      const double inner = 0.75 * n;
      for (std::size_t i = 0; i < small.sites.size(); ++i) {
        if (large.h[i] < small.h[i] - 1e-12) nested = false;
        if (basis.norm2(small.sites.point(i)) >= inner * inner) continue;
        lo_small = std::min(lo_small, small.h[i]);
        lo_large = std::min(lo_large, large.h[i]);
      }
      inf_small.push_back(lo_small);
      all_inf.push_back(lo_small);
      r.rows.push_back({r.experiment, model.hash(), n, 0, "inf_hit_A[n/4,n/2] " + name, lo_small, 0.0, 0, 0, 0});
      r.rows.push_back({r.experiment, model.hash(), n, 0, "inf_hit_A[n/4,n] " + name, lo_large, 0.0, 0, 0, 0});

      const GreenTable table(model, domain);
      std::vector<Point> mid, full;
      for (const auto& w : set->points()) {
        const double rad = std::sqrt(basis.norm2(w));
        if (rad < n) full.push_back(w);
        if (rad >= n / 4.0 && rad < n / 2.0) mid.push_back(w);
      }
      const double v_mid = expected_visits(table, mid, {0, 0}) / n;
      const double v_full = expected_visits(table, full, {0, 0}) / n;
      visits_small.push_back(v_mid);
      visits_full.push_back(v_full);
      r.rows.push_back({r.experiment, model.hash(), n, 0, "visits_A[n/4,n/2]/n " + name, v_mid, 0.0, 0, 0, 0});
      r.rows.push_back({r.experiment, model.hash(), n, 0, "visits_A[0,2n)/n " + name, v_full, 0.0, 0, 0, 0});
    }
    const double s = spread(inf_small);
    add_metric(r, "inf_spread " + name, s);
    add_check(r, "stable " + name, s <= params.spread_max, "inf_z spread " + fmt(s) + " over n <= " + fmt(params.spread_max));
    add_check(r, "nested " + name, nested, "A[n/4,n] hitting probability >= A[n/4,n/2] pointwise");
    const double sv = std::max(spread(visits_small), spread(visits_full));
    add_metric(r, "visits_spread " + name, sv);
    add_check(r, "visits " + name, sv <= params.spread_max, "visits/n spread " + fmt(sv) + " <= " + fmt(params.spread_max));
  }
  const double s = spread(all_inf);
  add_metric(r, "inf_min", *std::min_element(all_inf.begin(), all_inf.end()));
  add_check(r, "common_bracket", s <= params.spread_max,
            "inf_z over policies and n within ratio " + fmt(s) + " <= " + fmt(params.spread_max));
  return r;
}

// ---------------------------------------------------------------------------
// Monte Carlo experiments

ExperimentReport exp_halfline(const WalkModel& model, const HalflineParams& params, const RunOptions& options) {
  ExperimentReport r = new_report("halfline", model, options);
  Cells cells(r, options);
  const Point origin{0, 0};
  const std::pair<LineKind, std::string> events[] = {{LineKind::N, "N"}, {LineKind::ZPos, "Z+"}};
  for (const auto& [kind, suffix] : events) {
    const std::string label = "tau<=T_k" + suffix;
    for (int n : params.n_grid) {
      StoppingRule rule;
      rule.exit("tau", Region::disk(n)).enter("T", Region::kappa_line(kind, params.kappa));
      cells.race(model, origin, rule, "tau", label, n, 0, params.samples);
    }
    const auto t = r.table(label);
    check_power(r, t, label, -0.5, params.slope_lo, params.slope_hi);
    add_check(r, "monotone " + label, monotone(t, true), "decreasing in n within 2 stderr");

    if (params.compare_n > 0) {
      const int n = params.compare_n;
      auto base = std::find_if(t.rows.begin(), t.rows.end(), [n](const ScalingRow& row) { return row.n == n; });
      ScalingRow one;
      if (base != t.rows.end()) {
        one = *base;
      } else {
        StoppingRule rule;
        rule.exit("tau", Region::disk(n)).enter("T", Region::kappa_line(kind, params.kappa));
        const auto e = cells.race(model, origin, rule, "tau", label + " compare", n, 0, params.samples);
        one = {n, 0, e.mean, e.std_error};
      }
      StoppingRule rule;
      rule.exit("tau", Region::disk(n)).enter("T", Region::kappa_line(kind, 2 * params.kappa));
      const auto two = cells.race(model, origin, rule, "tau", "tau<=T_2k" + suffix, n, 0, params.samples);
      const double tol = 2.0 * std::hypot(one.std_error, two.std_error);
      add_check(r, "spacing " + label, two.mean >= one.estimate - tol,
                "p(2k) " + fmt(two.mean) + " >= p(k) " + fmt(one.estimate) + " - " + fmt(tol));
    }
  }
  return r;
}

ExperimentReport exp_line(const WalkModel& model, const LineParams& params, const RunOptions& options) {
  ExperimentReport r = new_report("line", model, options);
  Cells cells(r, options);
  const Point origin{0, 0};
  const std::string label = "tau<=T_[-n,n]";
  auto rule_for = [&](int n) {
    StoppingRule rule;
    rule.exit("tau", Region::disk(n)).enter("T", Region::segment(-n, n + 1, params.kappa));
    return rule;
  };
  for (int n : params.n_grid) cells.race(model, origin, rule_for(n), "tau", label, n, 0, params.samples);
  const auto fit = check_power(r, r.table(label), label, -1.0, params.slope_lo, params.slope_hi);
  add_check(r, "spread " + label, fit.spread <= params.spread_max,
            "p*n spread " + fmt(fit.spread) + " <= " + fmt(params.spread_max));

  if (params.exact_n > 0) {
    const int n = params.exact_n;
    const auto h = hit_probabilities(model, Region::disk(n), Region::segment(-n, n + 1, params.kappa));
    const double exact = escape_positive_time(model, h, origin);
    r.rows.push_back({r.experiment, model.hash(), n, 0, "exact", exact, 0.0, 0, 0, 0});
    const auto mc = cells.race(model, origin, rule_for(n), "tau", "exact_check_mc", n, 0, params.exact_samples);
    add_metric(r, "exact_value", exact);
    add_check(r, "exact", std::abs(mc.mean - exact) <= 3.0 * mc.std_error,
              "MC " + fmt(mc.mean) + " +- " + fmt(mc.std_error) + " vs exact " + fmt(exact));
  }
  return r;
}

ExperimentReport exp_strip(const std::vector<WalkModel>& models, const StripParams& params, const RunOptions& options) {
  if (models.empty()) fail(ErrorCode::InvalidArgument, "strip experiment needs at least one model");
  ExperimentReport r = new_report("strip", models.front(), options);
  Cells cells(r, options);
  const std::pair<LineKind, std::string> events[] = {{LineKind::N, "rho<=T_kN"}, {LineKind::ZNeg, "rho<=T_kZ-"}};
  for (const auto& model : models) {
    for (const auto& [kind, label] : events) {
      for (int n : params.n_grid) {
        StoppingRule rule;
        rule.exit("rho", Region::strip(n)).enter("T", Region::kappa_line(kind, params.kappa));
        cells.race(model, {0, 0}, rule, "rho", label, n, 0, params.samples);
      }
      check_power(r, r.table(label, model.hash()), label + " " + model.name(), -0.5, params.slope_lo, params.slope_hi);
    }
  }
  return r;
}

ExperimentReport exp_factorization(const std::vector<WalkModel>& models, const FactorizationParams& params,
                                   const RunOptions& options) {
  if (models.empty()) fail(ErrorCode::InvalidArgument, "factorization experiment needs at least one model");
  ExperimentReport r = new_report("factorization", models.front(), options);
  Cells cells(r, options);
  const Point origin{0, 0};
  double worst = 0.0;
  for (const auto& model : models) {
    const WalkModel reversed = reverse(model);
    const bool symmetric = symmetric_in_imaginary_axis(model);
    for (int n : params.n_list) {
      auto race = [&](const WalkModel& m, LineKind kind, const std::string& label) {
        StoppingRule rule;
        rule.exit("rho", Region::strip(n)).enter("T", Region::kappa_line(kind, params.kappa));
        return cells.race(m, origin, rule, "rho", label, n, 0, params.samples);
      };
      const auto e = race(model, LineKind::Z, "E");
      const auto minus = race(model, LineKind::ZNonPos, "E-");
      const auto tilde_star = race(reversed, LineKind::ZNeg, "E~-*");
      auto compare = [&](const Estimate& tilde, const std::string& tag) {
        const double product = tilde.mean * minus.mean;
        const double se = std::sqrt(e.std_error * e.std_error + std::pow(minus.mean * tilde.std_error, 2) +
                                    std::pow(tilde.mean * minus.std_error, 2));
        const double z = se > 0.0 ? std::abs(e.mean - product) / se : 0.0;
        worst = std::max(worst, z);
        add_check(r, tag + " " + model.name() + " n=" + std::to_string(n), z <= params.sigmas,
                  "|" + fmt(e.mean) + " - " + fmt(product) + "| = " + fmt(z) + " combined stderr");
      };
      compare(tilde_star, "factorization");
      if (symmetric) compare(race(model, LineKind::ZNeg, "E~-"), "symmetric_factorization");
    }
  }
  add_metric(r, "max_discrepancy_sigmas", worst);
  return r;
}

namespace {

struct EntryTally {
  std::uint64_t n = 0, hits = 0, truncated = 0;
};

/// P(the trajectory enters `line` first at the origin), truncating at exit from `domain`.
EntryTally entry_tally(const WalkModel& model, Point start, const Region& line, bool at_time_zero, const Region& domain,
                       const McConfig& cfg) {
  StoppingRule rule;
  rule.enter("T", line, at_time_zero).exit("trunc", domain);
  const StepSampler sampler(model);
  const auto& basis = model.basis();
  const auto chunks = run_chunks<EntryTally>(cfg, [&](std::uint64_t first, std::uint64_t count, EntryTally& acc) {
    for (std::uint64_t t = first; t < first + count; ++t) {
      PhiloxStream rng(cfg.seed, t);
      const auto o = run_trajectory(sampler, basis, start, rule, rng, cfg.hard_cap);
      ++acc.n;
      if (o.trigger == 0 && o.position == Point{0, 0}) ++acc.hits;
      if (o.trigger != 0) ++acc.truncated;
    }
  });
  EntryTally all;
  for (const auto& c : chunks) {
    all.n += c.n;
    all.hits += c.hits;
    all.truncated += c.truncated;
  }
  return all;
}

}  // namespace

ExperimentReport exp_entry_point(const WalkModel& model, const EntryParams& params, const RunOptions& options) {
  ExperimentReport r = new_report("entry_point", model, options);
  Cells cells(r, options);
  const Region line = Region::kappa_line(LineKind::N, params.kappa);
  auto run = [&](const std::string& label, int n, Point start, bool at_time_zero, double radius, std::uint64_t samples) {
    const auto cfg = cells.config(model, label, n, 0, samples);
    const auto t = entry_tally(model, start, line, at_time_zero, Region::disk(radius), cfg);
    const double p = static_cast<double>(t.hits) / static_cast<double>(t.n);
    const double se = t.n > 1 ? std::sqrt(p * (1.0 - p) / static_cast<double>(t.n - 1)) : 0.0;
    cells.record(model, label, n, 0, p, se, t.n, cfg.seed, t.truncated);
    return p;
  };

  std::vector<double> minus_ratio;
  for (int n : params.n_grid_minus) {
    const double p = run("S_T=0 from -n", n, {-n, 0}, false, params.trunc_factor * n, params.samples_minus);
    minus_ratio.push_back(p * std::sqrt(n));
  }
  const double s = spread(minus_ratio);
  add_metric(r, "minus_ratio_spread", s);
  add_check(r, "from_minus_n", s <= params.spread_max, "p*sqrt(n) spread " + fmt(s) + " <= " + fmt(params.spread_max));

  std::vector<double> plus_ratio;
  for (int n : params.n_grid_plus) {
    const double p = run("S_T=0 from +n", n, {n, 0}, false, params.trunc_factor * n, params.samples_plus);
    plus_ratio.push_back(p * std::pow(n, 1.5));
  }
  const double rho = spearman(as_double(params.n_grid_plus), plus_ratio);
  add_metric(r, "plus_ratio_spearman", rho);
  add_check(r, "from_plus_n", rho <= params.spearman_max,
            "Spearman(n, p*n^1.5) " + fmt(rho) + " <= " + fmt(params.spearman_max));

  const double trivial = run("S_T0=0 from 0", 0, {0, 0}, true, 1.0, 1000);
  add_check(r, "trivial_start", trivial == 1.0, "P(S_T0 = 0) from 0 = " + fmt(trivial));
  return r;
}

ExperimentReport exp_shifted(const WalkModel& model, const ShiftedParams& params, const RunOptions& options) {
  ExperimentReport r = new_report("shifted", model, options);
  Cells cells(r, options);
  const std::string plus = "tau<T_k(j+N)", minus = "tau<T_k(-j+N)";
  std::vector<double> ratio_d, ratio_e;
  bool increasing = true;
  for (int n : params.n_grid) {
    std::vector<Estimate> row;
    for (int j : params.j_list) {
      StoppingRule rule_d;
      rule_d.exit("tau", Region::disk(n)).enter("T", Region::kappa_line(LineKind::Shifted, params.kappa, j));
      const auto d = cells.race(model, {0, 0}, rule_d, "tau", plus, n, j, params.samples);
      StoppingRule rule_e;
      rule_e.exit("tau", Region::disk(n)).enter("T", Region::kappa_line(LineKind::Shifted, params.kappa, -j));
      const auto e = cells.race(model, {0, 0}, rule_e, "tau", minus, n, j, params.samples);
      ratio_d.push_back(d.mean / std::sqrt(static_cast<double>(j) / n));
      ratio_e.push_back(e.mean * std::sqrt(static_cast<double>(j) * n));
      if (!row.empty() && d.mean < row.back().mean - 2.0 * std::hypot(d.std_error, row.back().std_error))
        increasing = false;
      row.push_back(d);
    }
  }
  add_check(r, "increasing_in_j", increasing, "P(tau_n < T_k(j+N)) increasing in j within 2 stderr");
  const double sd = spread(ratio_d);
  add_metric(r, "ratio_spread_d", sd);
  add_check(r, "envelope_d", sd <= params.spread_max,
            "p/sqrt(j/n) spread " + fmt(sd) + " <= " + fmt(params.spread_max));
  const double bound = *std::max_element(ratio_e.begin(), ratio_e.end()) / ratio_e.front();
  add_metric(r, "ratio_growth_e", bound);
  add_check(r, "envelope_e", ratio_e.front() > 0.0 && bound <= params.spread_max,
            "max p*sqrt(jn) / first-cell value " + fmt(bound) + " <= " + fmt(params.spread_max));
  return r;
}

namespace {

struct OvershootAcc {
  std::uint64_t n = 0, caps = 0;
  double sum = 0.0, sum2 = 0.0, log_sum = 0.0, log_sum2 = 0.0, max = 0.0, log_min = 0.0;
};

}  // namespace

ExperimentReport exp_overshoot(const WalkModel& model, const OvershootParams& params, const RunOptions& options) {
  ExperimentReport r = new_report("overshoot", model, options);
  Cells cells(r, options);
  const StepSampler sampler(model);
  const auto& basis = model.basis();
  double max_overshoot = 0.0, min_log = std::numeric_limits<double>::infinity();
  const std::string label = "E|S_tau|-n", log_label = "E log|S_tau|-log n";
  for (int n : params.n_grid) {
    const auto cfg = cells.config(model, label, n, 0, params.samples);
    StoppingRule rule;
    rule.exit("tau", Region::disk(n));
    const auto chunks = run_chunks<OvershootAcc>(cfg, [&](std::uint64_t first, std::uint64_t count, OvershootAcc& acc) {
      acc.log_min = std::numeric_limits<double>::infinity();
      for (std::uint64_t t = first; t < first + count; ++t) {
        PhiloxStream rng(cfg.seed, t);
        const auto o = run_trajectory(sampler, basis, {0, 0}, rule, rng, cfg.hard_cap);
        if (o.capped()) ++acc.caps;
        const double radius = std::sqrt(basis.norm2(o.position));
        const double over = radius - n;
        const double log_over = std::log(radius) - std::log(n);
        ++acc.n;
        acc.sum += over;
        acc.sum2 += over * over;
        acc.log_sum += log_over;
        acc.log_sum2 += log_over * log_over;
        acc.max = std::max(acc.max, over);
        acc.log_min = std::min(acc.log_min, log_over);
      }
    });
    OvershootAcc all;
    all.log_min = std::numeric_limits<double>::infinity();
    for (const auto& c : chunks) {
      all.n += c.n;
      all.caps += c.caps;
      all.sum += c.sum;
      all.sum2 += c.sum2;
      all.log_sum += c.log_sum;
      all.log_sum2 += c.log_sum2;
      all.max = std::max(all.max, c.max);
      all.log_min = std::min(all.log_min, c.log_min);
    }
    const double count = static_cast<double>(all.n);
    auto moments = [count](double s, double s2) {
      const double mean = s / count;
      const double var = count > 1 ? std::max(0.0, (s2 - count * mean * mean) / (count - 1)) : 0.0;
      return std::pair{mean, std::sqrt(var / count)};
    };
    const auto [mean, se] = moments(all.sum, all.sum2);
    const auto [log_mean, log_se] = moments(all.log_sum, all.log_sum2);
    cells.record(model, label, n, 0, mean, se, all.n, cfg.seed, all.caps);
    cells.record(model, log_label, n, 0, log_mean, log_se, all.n, cfg.seed, all.caps);
    cells.record(model, "max |S_tau|-n", n, 0, all.max, 0.0, all.n, cfg.seed, all.caps);
    max_overshoot = std::max(max_overshoot, all.max);
    min_log = std::min(min_log, all.log_min);
  }
  add_metric(r, "max_overshoot", max_overshoot);
  add_check(r, "overshoot_bounded_by_step", max_overshoot <= model.max_step_length() + 1e-12,
            "max |S_tau| - n = " + fmt(max_overshoot) + " <= max step " + fmt(model.max_step_length()));

  const auto fit = fit_power(r.table(label), 2.0 / 3.0);
  add_metric(r, "overshoot_exponent", fit.slope);
  add_metric(r, "overshoot_exponent_stderr", fit.slope_stderr);
  add_check(r, "overshoot_exponent", fit.slope <= params.exponent_max,
            "exponent " + fmt(fit.slope) + " <= " + fmt(params.exponent_max));

  add_metric(r, "min_log_overshoot", min_log);
  add_check(r, "log_overshoot_nonnegative", min_log >= 0.0, "min log|S_tau| - log n = " + fmt(min_log));
  const auto log_fit = fit_power(r.table(log_label), -1.0 / 3.0);
  const double allowed = -1.0 / 3.0 + 2.0 * log_fit.slope_stderr;
  add_metric(r, "log_overshoot_exponent", log_fit.slope);
  add_check(r, "log_overshoot_envelope", log_fit.slope <= allowed,
            "exponent " + fmt(log_fit.slope) + " <= " + fmt(allowed));
  return r;
}

ExperimentReport exp_beurling(const WalkModel& model, const BeurlingParams& params, const RunOptions& options) {
  for (int k : params.k_grid)
    for (int n : params.n_grid)
      if (2 * k > n)
        fail(ErrorCode::InvalidArgument,
             "beurling grid needs k <= n/2, got k=" + std::to_string(k) + " n=" + std::to_string(n));
  ExperimentReport r = new_report("beurling", model, options);
  Cells cells(r, options);
  const auto& basis = model.basis();
  const Point origin{0, 0};
  const int n_max = *std::max_element(params.n_grid.begin(), params.n_grid.end());
  const auto n_values = as_double(params.n_grid);
  // r(k, n) per policy in (k, n) row-major order, and its maximum over policies.
  std::vector<double> worst(params.k_grid.size() * params.n_grid.size(), 0.0);
  auto trend_of = [&](const std::vector<double>& ratios) {
    double sum = 0.0;
    for (std::size_t i = 0; i < params.k_grid.size(); ++i) {
      const std::vector<double> r_k(ratios.begin() + i * n_values.size(), ratios.begin() + (i + 1) * n_values.size());
      sum += spearman(n_values, r_k);
    }
    return sum / static_cast<double>(params.k_grid.size());
  };
  for (const auto& base_policy : params.policies) {
    DensePolicy policy = base_policy;
    if (policy.kind == DensePolicyKind::RandomAngle) policy.seed = derive_seed(options.seed, {policy.seed});
    const std::string name = to_string(policy);
    const std::string label = "tau_2n<T_A[k,n] " + name;
    const auto set = std::make_shared<const DenseSet>(make_dense(params.kappa, n_max, policy, basis));
    std::vector<double> ratios;
    for (int k : params.k_grid) {
      for (int n : params.n_grid) {
        StoppingRule rule;
        rule.exit("tau", Region::disk(2.0 * n)).enter("T", Region::slice(set, k, n));
        const auto e = cells.race(model, origin, rule, "tau", label, n, k, params.samples);
        ratios.push_back(e.mean / std::sqrt(static_cast<double>(k) / n));
      }
    }
    for (std::size_t i = 0; i < ratios.size(); ++i) worst[i] = std::max(worst[i], ratios[i]);
    const double trend = trend_of(ratios);
    add_metric(r, "ratio_max " + name, *std::max_element(ratios.begin(), ratios.end()));
    add_metric(r, "ratio_spread " + name, spread(ratios));
    add_metric(r, "trend " + name, trend);
    add_check(r, "trend " + name, trend <= params.spearman_max,
              "mean Spearman(n, r) over k " + fmt(trend) + " <= " + fmt(params.spearman_max));

    if (params.exact_n > 0) {
      const int n = params.exact_n, k = params.exact_k;
      const Region target = Region::slice(set, k, n);
      const auto h = hit_probabilities(model, Region::disk(2.0 * n), target);
      const double exact = escape_positive_time(model, h, origin);
      r.rows.push_back({r.experiment, model.hash(), n, k, "exact " + name, exact, 0.0, 0, 0, 0});
      StoppingRule rule;
      rule.exit("tau", Region::disk(2.0 * n)).enter("T", target);
      const auto mc = cells.race(model, origin, rule, "tau", "exact_check_mc " + name, n, k, params.exact_samples);
      add_check(r, "exact " + name, std::abs(mc.mean - exact) <= 3.0 * mc.std_error,
                "MC " + fmt(mc.mean) + " +- " + fmt(mc.std_error) + " vs exact " + fmt(exact));
    }
  }
  // The bound is one-sided: the envelope is the worst case over policies.
  const double s = spread(worst);
  const double trend = trend_of(worst);
  add_metric(r, "worst_ratio", *std::max_element(worst.begin(), worst.end()));
  add_metric(r, "worst_ratio_spread", s);
  add_metric(r, "worst_trend", trend);
  add_check(r, "spread worst_case", s <= params.spread_max,
            "spread of max over policies of r " + fmt(s) + " <= " + fmt(params.spread_max));
  add_check(r, "trend worst_case", trend <= params.spearman_max,
            "mean Spearman(n, max over policies of r) over k " + fmt(trend) + " <= " + fmt(params.spearman_max));

  // Escape from the ray segment [k, n) started on the segment: ends dominate the middle.
  if (params.exact_n > 0) {
    const int n = params.exact_n, k = params.exact_k;
    const Region segment = Region::segment(k, n, params.kappa);
    const auto h = hit_probabilities(model, Region::disk(2.0 * n), segment);
    const int last = ((n - 1) / params.kappa) * params.kappa;
    const int first = ((k + params.kappa - 1) / params.kappa) * params.kappa;
    const int mid = static_cast<int>(std::lround((first + last) / (2.0 * params.kappa))) * params.kappa;
    const double e_first = escape_positive_time(model, h, {first, 0});
    const double e_mid = escape_positive_time(model, h, {mid, 0});
    const double e_last = escape_positive_time(model, h, {last, 0});
    add_check(r, "segment_escape_ordering", e_first >= e_mid && e_last >= e_mid,
              "escape from ends " + fmt(e_first) + ", " + fmt(e_last) + " >= middle " + fmt(e_mid));
  }
  return r;
}

}  // namespace latwalk
