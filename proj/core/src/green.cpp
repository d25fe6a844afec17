#include "latwalk/green.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "latwalk/error.hpp"

namespace latwalk {

SiteIndexer::SiteIndexer(std::vector<Point> sites) : sites_(std::move(sites)) {
  std::sort(sites_.begin(), sites_.end(), row_major_less);
  sites_.erase(std::unique(sites_.begin(), sites_.end()), sites_.end());
  lookup_.reserve(sites_.size());
  for (std::size_t i = 0; i < sites_.size(); ++i) lookup_.emplace(sites_[i], i);
}

namespace detail {

/// Factorization (or iterative solver) of I - P_U for the walk killed on leaving U.
class KillingSolver {
 public:
  using Sparse = Eigen::SparseMatrix<double>;

  KillingSolver(const WalkModel& model, const SiteIndexer& sites, const SolverOptions& options)
      : options_(options) {
    const auto n = static_cast<Eigen::Index>(sites.size());
    if (sites.size() > options.site_cap)
      fail(ErrorCode::DomainTooLarge, "domain has " + std::to_string(sites.size()) + " sites, cap is " +
                                          std::to_string(options.site_cap));
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(sites.size() * (model.steps().size() + 1));
    for (Eigen::Index i = 0; i < n; ++i) {
      entries.emplace_back(i, i, 1.0);
      const Point w = sites.point(static_cast<std::size_t>(i));
      for (const auto& s : model.steps()) {
        if (s.prob <= 0.0) continue;
        const auto j = sites.index(w + s.offset);
        if (j >= 0) entries.emplace_back(i, j, -s.prob);
      }
    }
    m_.resize(n, n);
    m_.setFromTriplets(entries.begin(), entries.end());
    m_.makeCompressed();
    if (n == 0) return;

    direct_ = sites.size() <= options.direct_limit;
    if (direct_) {
      lu_.analyzePattern(m_);
      lu_.factorize(m_);
      if (lu_.info() != Eigen::Success) fail(ErrorCode::SolverFailure, "sparse LU factorization failed: " + lu_.lastErrorMessage());
    } else {
      mt_ = m_.transpose();
      for (auto* it : {&iter_, &iter_t_}) {
        it->setTolerance(options.iterative_tolerance * 1e-2);
        it->setMaxIterations(options.max_iterations);
      }
      iter_.compute(m_);
      iter_t_.compute(mt_);
    }
  }

  std::vector<double> solve(std::span<const double> rhs, bool transposed) const {
    const auto n = m_.rows();
    if (static_cast<Eigen::Index>(rhs.size()) != n) fail(ErrorCode::InvalidArgument, "right-hand side size mismatch");
    if (n == 0) return {};
    const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), n);
    Eigen::VectorXd x;
    if (direct_) {
      x = transposed ? Eigen::VectorXd(lu_.transpose().solve(b)) : Eigen::VectorXd(lu_.solve(b));
    } else {
      x = transposed ? Eigen::VectorXd(iter_t_.solve(b)) : Eigen::VectorXd(iter_.solve(b));
    }
    const Eigen::VectorXd r = (transposed ? Eigen::VectorXd(m_.transpose() * x) : Eigen::VectorXd(m_ * x)) - b;
    const double scale = std::max(1.0, b.lpNorm<Eigen::Infinity>());
    const double res = r.lpNorm<Eigen::Infinity>() / scale;
    const double tol = direct_ ? options_.direct_tolerance : options_.iterative_tolerance;
    if (!std::isfinite(res) || res > tol) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s solve residual %.3e exceeds %.1e", direct_ ? "direct" : "iterative", res, tol);
      fail(ErrorCode::SolverFailure, buf);
    }
    {
      std::lock_guard lock(mutex_);
      max_residual_ = std::max(max_residual_, res);
    }
    return {x.data(), x.data() + n};
  }

  double max_residual() const {
    std::lock_guard lock(mutex_);
    return max_residual_;
  }

 private:
  SolverOptions options_;
  Sparse m_, mt_;
  bool direct_ = true;
  // transpose() is non-const in Eigen although solving does not mutate the factors.
  mutable Eigen::SparseLU<Sparse, Eigen::COLAMDOrdering<int>> lu_;
  Eigen::BiCGSTAB<Sparse, Eigen::DiagonalPreconditioner<double>> iter_, iter_t_;
  mutable std::mutex mutex_;
  mutable double max_residual_ = 0.0;
};

}  // namespace detail

namespace {

std::optional<std::int32_t> truncation_of(const WalkModel& model) {
  if (const auto& heavy = model.distribution().heavy()) return heavy->rmax;
  return std::nullopt;
}

std::vector<Point> bounded_sites(const Region& region, const WalkModel& model) {
  return enumerate(region, model.basis());
}

}  // namespace

// ---------------------------------------------------------------------------
// GreenTable

GreenTable::GreenTable(const WalkModel& model, const Region& domain, SolverOptions options)
    : GreenTable(model, bounded_sites(domain, model), options) {}

GreenTable::GreenTable(const WalkModel& model, std::vector<Point> domain, SolverOptions options)
    : model_(model), sites_(std::move(domain)), truncation_(truncation_of(model)) {
  solver_ = std::make_shared<detail::KillingSolver>(model_, sites_, options);
}

std::vector<double> GreenTable::solve(std::span<const double> rhs) const { return solver_->solve(rhs, false); }

std::vector<double> GreenTable::solve_transposed(std::span<const double> rhs) const {
  return solver_->solve(rhs, true);
}

std::vector<double> GreenTable::column(Point z) const {
  std::vector<double> e(sites_.size(), 0.0);
  const auto i = sites_.index(z);
  if (i < 0) return e;
  e[static_cast<std::size_t>(i)] = 1.0;
  return solve(e);
}

std::vector<double> GreenTable::row(Point w) const {
  std::vector<double> e(sites_.size(), 0.0);
  const auto i = sites_.index(w);
  if (i < 0) return e;
  e[static_cast<std::size_t>(i)] = 1.0;
  return solve_transposed(e);
}

double GreenTable::value(Point w, Point z) const {
  const auto i = sites_.index(w);
  if (i < 0 || !sites_.contains(z)) return 0.0;
  return column(z)[static_cast<std::size_t>(i)];
}

std::vector<std::vector<double>> GreenTable::dense() const {
  const std::size_t n = sites_.size();
  std::vector<std::vector<double>> g(n, std::vector<double>(n));
  for (std::size_t c = 0; c < n; ++c) {
    const auto col = column(sites_.point(c));
    for (std::size_t r = 0; r < n; ++r) g[r][c] = col[r];
  }
  return g;
}

double GreenTable::max_residual() const { return solver_->max_residual(); }

void GreenTable::export_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path + "'");
  out << "x_w,y_w,x_z,y_z,value\n";
  char buf[128];
  for (std::size_t c = 0; c < sites_.size(); ++c) {
    const Point z = sites_.point(c);
    const auto col = column(z);
    for (std::size_t r = 0; r < sites_.size(); ++r) {
      const Point w = sites_.point(r);
      std::snprintf(buf, sizeof buf, "%d,%d,%d,%d,%.17g\n", w.j, w.k, z.j, z.k, col[r]);
      out << buf;
    }
  }
}

// ---------------------------------------------------------------------------
// Dirichlet problems

HarmonicSolution hit_probabilities(const WalkModel& model, const Region& domain, const Region& targets,
                                   SolverOptions options) {
  HarmonicSolution sol;
  sol.sites = SiteIndexer(bounded_sites(domain, model));
  if (sol.sites.size() > options.site_cap)
    fail(ErrorCode::DomainTooLarge, "domain has " + std::to_string(sol.sites.size()) + " sites, cap is " +
                                        std::to_string(options.site_cap));
  const auto& basis = model.basis();
  std::vector<std::uint8_t> is_target(sol.sites.size());
  std::vector<Point> free;
  for (std::size_t i = 0; i < sol.sites.size(); ++i) {
    is_target[i] = targets.contains(sol.sites.point(i), basis) ? 1 : 0;
    if (!is_target[i]) free.push_back(sol.sites.point(i));
  }
  const SiteIndexer unknowns(free);
  std::vector<double> rhs(unknowns.size(), 0.0);
  for (std::size_t i = 0; i < unknowns.size(); ++i) {
    const Point w = unknowns.point(i);
    for (const auto& s : model.steps()) {
      const auto j = sol.sites.index(w + s.offset);
      if (j >= 0 && is_target[static_cast<std::size_t>(j)]) rhs[i] += s.prob;
    }
  }
  const detail::KillingSolver solver(model, unknowns, options);
  const auto u = solver.solve(rhs, false);
  sol.h.assign(sol.sites.size(), 1.0);
  for (std::size_t i = 0; i < unknowns.size(); ++i)
    sol.h[static_cast<std::size_t>(sol.sites.index(unknowns.point(i)))] = u[i];
  sol.residual = solver.max_residual();
  return sol;
}

double hit_before_exit(const WalkModel& model, const Region& domain, const Region& targets, Point start,
                       SolverOptions options) {
  const auto sol = hit_probabilities(model, domain, targets, options);
  if (!sol.sites.contains(start)) fail(ErrorCode::InvalidArgument, "start point lies outside the domain");
  return sol.at(start);
}

double escape_positive_time(const WalkModel& model, const HarmonicSolution& h, Point w) {
  double hit = 0.0;
  for (const auto& s : model.steps()) hit += s.prob * h.at(w + s.offset);
  return 1.0 - hit;
}

double last_exit_residual(const WalkModel& model, const Region& domain, const Region& targets, Point z,
                          SolverOptions options) {
  const auto h = hit_probabilities(model, domain, targets, options);
  if (!h.sites.contains(z)) fail(ErrorCode::InvalidArgument, "start point lies outside the domain");
  const GreenTable table(model, h.sites.points(), options);
  const auto g = table.row(z);
  double sum = 0.0;
  for (std::size_t i = 0; i < h.sites.size(); ++i) {
    const Point w = h.sites.point(i);
    if (!targets.contains(w, model.basis())) continue;
    sum += g[i] * escape_positive_time(model, h, w);
  }
  return std::abs(h.at(z) - sum);
}

double expected_visits(const GreenTable& table, std::span<const Point> subset, Point z) {
  const auto g = table.row(z);
  double sum = 0.0;
  for (const auto& w : subset) {
    const auto i = table.sites().index(w);
    if (i >= 0) sum += g[static_cast<std::size_t>(i)];
  }
  return sum;
}

double expected_visits(const WalkModel& model, const Region& domain, const Region& subset, Point z,
                       SolverOptions options) {
  const GreenTable table(model, domain, options);
  std::vector<Point> inside;
  for (const auto& p : table.sites().points())
    if (subset.contains(p, model.basis())) inside.push_back(p);
  return expected_visits(table, inside, z);
}

// ---------------------------------------------------------------------------

PotentialCheck green_via_potential(const GreenTable& table, Point w, Point z, PotentialKernel& kernel,
                                   double kernel_tolerance) {
  const WalkModel& model = table.model();
  // The reversed model's kernel is a* itself; the model's own kernel gives a*(x) = a(-x).
  bool negate;
  if (kernel.model().hash() == reverse(model).hash()) negate = false;
  else if (kernel.model().hash() == model.hash()) negate = true;
  else fail(ErrorCode::InvalidArgument, "kernel belongs to neither the model nor its reversal");
  auto key = [&](Point x) { return negate ? -x : x; };
  auto a_star = [&](Point x) { return kernel.value(key(x)); };

  const auto& sites = table.sites();
  if (!sites.contains(w)) return {0.0, 0.0};

  // Exit functional b(v) = sum over steps leaving B of p(y) a*(v + y - z).
  std::vector<Point> needed{key(w - z)};
  for (const auto& v : sites.points())
    for (const auto& s : model.steps())
      if (s.prob > 0.0 && !sites.contains(v + s.offset)) needed.push_back(key(v + s.offset - z));
  kernel.prefetch(needed);

  std::vector<double> b(sites.size(), 0.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const Point v = sites.point(i);
    for (const auto& s : model.steps()) {
      if (s.prob <= 0.0 || sites.contains(v + s.offset)) continue;
      const auto kv = a_star(v + s.offset - z);
      b[i] += s.prob * kv.value;
      worst = std::max(worst, kv.error);
    }
  }
  const auto g = table.row(w);
  double expectation = 0.0;
  for (std::size_t i = 0; i < sites.size(); ++i) expectation += g[i] * b[i];
  const auto own = a_star(w - z);
  PotentialCheck out{expectation - own.value, worst + own.error};
  if (out.error > kernel_tolerance) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "propagated kernel error %.3e exceeds %.1e", out.error, kernel_tolerance);
    fail(ErrorCode::KernelAccuracyInsufficient, buf);
  }
  return out;
}

double green_via_potential(const WalkModel& model, const Region& domain, Point w, Point z, PotentialKernel& kernel,
                           SolverOptions options) {
  const GreenTable table(model, domain, options);
  return green_via_potential(table, w, z, kernel).value;
}

double harmonic_residual(const WalkModel& model, const std::function<std::optional<double>(Point)>& f, Point w) {
  auto get = [&](Point p) {
    const auto v = f(p);
    if (!v) fail(ErrorCode::MissingValue, "f is undefined at (" + std::to_string(p.j) + ", " + std::to_string(p.k) + ")");
    return *v;
  };
  const double centre = get(w);
  double sum = 0.0;
  for (const auto& s : model.steps())
    if (s.prob > 0.0) sum += s.prob * (get(w + s.offset) - centre);
  return sum;
}

double harmonic_residual(const WalkModel& model, const std::unordered_map<Point, double, PointHash>& f, Point w) {
  return harmonic_residual(
      model,
      [&](Point p) -> std::optional<double> {
        auto it = f.find(p);
        if (it == f.end()) return std::nullopt;
        return it->second;
      },
      w);
}

}  // namespace latwalk
