#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "latwalk/lattice.hpp"
#include "latwalk/potential_kernel.hpp"
#include "latwalk/regions.hpp"
#include "latwalk/walk_model.hpp"

namespace latwalk {

/// Row-major enumeration of a finite lattice set.
class SiteIndexer {
 public:
  SiteIndexer() = default;
  explicit SiteIndexer(std::vector<Point> sites);

  std::size_t size() const { return sites_.size(); }
  const std::vector<Point>& points() const { return sites_; }
  Point point(std::size_t i) const { return sites_[i]; }
  /// -1 when p is not a site.
  std::int64_t index(Point p) const {
    auto it = lookup_.find(p);
    return it == lookup_.end() ? -1 : static_cast<std::int64_t>(it->second);
  }
  bool contains(Point p) const { return lookup_.count(p) != 0; }

 private:
  std::vector<Point> sites_;
  std::unordered_map<Point, std::size_t, PointHash> lookup_;
};

struct SolverOptions {
  std::size_t site_cap = 200000;
  /// Domains up to this many sites are factorized; larger ones use BiCGSTAB.
  std::size_t direct_limit = 60000;
  double direct_tolerance = 1e-10;
  double iterative_tolerance = 1e-8;
  int max_iterations = 50000;
};

namespace detail {
class KillingSolver;
}

/// G_B(w, z) = sum_j P^w(S_j = z, j < exit time of B), obtained from the
/// sparse system (I - P_B) G = I. Columns are direct solves, rows are
/// transposed solves against the same factorization.
class GreenTable {
 public:
  GreenTable(const WalkModel& model, const Region& domain, SolverOptions options = {});
  GreenTable(const WalkModel& model, std::vector<Point> domain, SolverOptions options = {});

  const WalkModel& model() const { return model_; }
  const SiteIndexer& sites() const { return sites_; }

  /// G_B(., z) indexed like sites(); all zeros if z is not in B.
  std::vector<double> column(Point z) const;
  /// G_B(w, .) indexed like sites(); all zeros if w is not in B.
  std::vector<double> row(Point w) const;
  double value(Point w, Point z) const;

  /// Full matrix, row w and column z in site order.
  std::vector<std::vector<double>> dense() const;

  /// Largest max-norm residual over the solves performed so far.
  double max_residual() const;
  /// Step-law truncation radius used when the model is a truncated heavy-tail family.
  std::optional<std::int32_t> truncation_radius() const { return truncation_; }

  /// Solves (I - P_B) u = rhs, rhs indexed like sites().
  std::vector<double> solve(std::span<const double> rhs) const;
  std::vector<double> solve_transposed(std::span<const double> rhs) const;

  /// CSV columns x_w,y_w,x_z,y_z,value over all pairs (w, z) in B x B.
  void export_csv(const std::string& path) const;

 private:
  WalkModel model_;
  SiteIndexer sites_;
  std::optional<std::int32_t> truncation_;
  std::shared_ptr<detail::KillingSolver> solver_;
};

/// h(w) = P^w(T0_{B'} < T0_{B^c}) for every w in B (h = 1 on B').
struct HarmonicSolution {
  SiteIndexer sites;
  std::vector<double> h;
  double residual = 0.0;

  /// h extended by 0 off B.
  double at(Point p) const {
    const auto i = sites.index(p);
    return i < 0 ? 0.0 : h[static_cast<std::size_t>(i)];
  }
};

/// Discrete Dirichlet problem on B \ B' with boundary values 1 on B' and 0 off B.
/// Targets outside B are ignored. Throws Error{DomainTooLarge}, Error{SolverFailure}.
HarmonicSolution hit_probabilities(const WalkModel& model, const Region& domain, const Region& targets,
                                   SolverOptions options = {});
double hit_before_exit(const WalkModel& model, const Region& domain, const Region& targets, Point start,
                       SolverOptions options = {});

/// P^w(T_{B'} > T_{B^c}) = 1 - sum_y p(y) h(w + y): escape with hitting counted only after time 0.
double escape_positive_time(const WalkModel& model, const HarmonicSolution& h, Point w);

/// |P^z(T0_{B'} < T0_{B^c}) - sum_{w in B'} G_B(z, w) P^w(T_{B'} > T_{B^c})|.
double last_exit_residual(const WalkModel& model, const Region& domain, const Region& targets, Point z,
                          SolverOptions options = {});

/// sum_{w in subset} G_B(z, w): expected visits to the subset before leaving B.
double expected_visits(const GreenTable& table, std::span<const Point> subset, Point z);
double expected_visits(const WalkModel& model, const Region& domain, const Region& subset, Point z,
                       SolverOptions options = {});

struct PotentialCheck {
  double value = 0.0;
  /// Propagated kernel error bound.
  double error = 0.0;
};

/// E^w[a*(S_T - z)] - a*(w - z), T the exit time of B, a*(x) = a(-x).
/// `kernel` may belong to the model or to its reversal. Throws
/// Error{KernelAccuracyInsufficient} when the propagated kernel error
/// exceeds `kernel_tolerance`.
PotentialCheck green_via_potential(const GreenTable& table, Point w, Point z, PotentialKernel& kernel,
                                   double kernel_tolerance = 1e-7);
double green_via_potential(const WalkModel& model, const Region& domain, Point w, Point z, PotentialKernel& kernel,
                           SolverOptions options = {});

/// Delta_p f(w) = sum_y p(y) [f(w + y) - f(w)]. Throws Error{MissingValue}
/// when f is undefined at w or at some w + y with p(y) > 0.
double harmonic_residual(const WalkModel& model, const std::function<std::optional<double>(Point)>& f, Point w);
double harmonic_residual(const WalkModel& model, const std::unordered_map<Point, double, PointHash>& f, Point w);

}  // namespace latwalk
