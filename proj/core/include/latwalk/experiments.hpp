#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "latwalk/monte_carlo.hpp"
#include "latwalk/regions.hpp"
#include "latwalk/scaling.hpp"
#include "latwalk/walk_model.hpp"

namespace latwalk {

/// Execution settings shared by every experiment.
struct RunOptions {
  std::uint64_t seed = 1;
  unsigned workers = 0;
  std::uint64_t chunk = 4096;
  /// Replaces every Monte Carlo sample count when set.
  std::optional<std::uint64_t> samples_override;
  std::uint64_t hard_cap = 1000000000;
};

/// One line of the results CSV.
struct ResultRow {
  std::string experiment_id;
  std::string model_hash;
  std::int64_t param_n = 0;
  std::int64_t param_k = 0;
  std::string label;
  double p_hat = 0.0;
  double std_error = 0.0;
  std::uint64_t n_samples = 0;
  std::uint64_t seed = 0;
  std::uint64_t cap_hits = 0;
};

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ExperimentReport {
  std::string experiment;
  std::string model_hash;  ///< primary model
  std::uint64_t seed = 0;
  std::vector<ResultRow> rows;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<Check> checks;

  bool pass() const;
  /// Throws Error{InvalidArgument} for an unknown name.
  const Check& check(const std::string& name) const;
  double metric(const std::string& name) const;
  /// Rows with this label (and model hash, if given) as a scaling table in n.
  ScalingTable table(const std::string& label, const std::string& model_hash = "") const;
};

/// Results CSV: a "# tool=..." provenance comment, the header
/// experiment_id,model_hash,param_n,param_k,label,p_hat,stderr,n_samples,seed,cap_hits
/// and one line per row.
std::string results_csv(const ExperimentReport& report);
/// {"experiment", "pass", "metrics", "checks", "seed", "duration_s"}.
std::string summary_json(const ExperimentReport& report, double duration_s);

// ---------------------------------------------------------------------------
// Exact experiments

struct IdentityParams {
  double radius = 12.0;
  std::int64_t segment_lo = 2, segment_hi = 8;
  /// Also run the potential-kernel checks (Green's function from a*, harmonicity of a).
  bool kernel_checks = true;
  double harmonic_radius = 10.0;
  double identity_tolerance = 1e-9;
  double kernel_tolerance = 1e-6;
};

/// Last-exit residual, ratio identity G(z,0)/G(0,0), Green's function from a*
/// and discrete harmonicity of a.
ExperimentReport exact_identities(const WalkModel& model, const IdentityParams& params = {});

struct LogParams {
  std::vector<int> n_grid{16, 32, 64, 128};
  double bracket_width = 1.5;
  double spread_max = 4.0;
};

/// pi sigma^2 G_n(0,0) - log n and P^z(T_0 < tau_n) log n on n/10 <= |z| <= 9n/10, by exact solves.
ExperimentReport exp_log_asymptotics(const WalkModel& model, const LogParams& params = {});

struct GottahitParams {
  int kappa = 1;
  std::vector<int> n_grid{16, 32, 64};
  std::vector<DensePolicy> policies{DensePolicy::ray(), DensePolicy::alternating()};
  double spread_max = 3.0;
};

/// inf over z in C_{3n/4} of P^z(T0_{A[n/4,n/2]} < tau_n) and of the A[n/4,n] version,
/// plus expected visits to A[n/4,n/2] and A[0,2n) scaled by n.
ExperimentReport exp_gottahit(const WalkModel& model, const GottahitParams& params = {},
                              const RunOptions& options = {});

// ---------------------------------------------------------------------------
// Monte Carlo experiments

struct HalflineParams {
  int kappa = 1;
  std::vector<int> n_grid{16, 32, 64, 128, 256, 512};
  std::uint64_t samples = 100000;
  double slope_lo = -0.57, slope_hi = -0.43;
  /// n at which the doubled spacing 2*kappa is compared; 0 disables.
  int compare_n = 64;
};

/// P(tau_n <= T_{kappa N}) and P(tau_n <= T_{kappa Z+}) from 0.
ExperimentReport exp_halfline(const WalkModel& model, const HalflineParams& params = {},
                              const RunOptions& options = {});

struct LineParams {
  int kappa = 1;
  std::vector<int> n_grid{16, 32, 64, 128, 256};
  std::uint64_t samples = 100000;
  double slope_lo = -1.1, slope_hi = -0.9;
  double spread_max = 3.0;
  int exact_n = 12;
  std::uint64_t exact_samples = 100000;
};

/// P(tau_n <= T_{[-n,n]_kappa}) from 0, with an exact cross-check at exact_n.
ExperimentReport exp_line(const WalkModel& model, const LineParams& params = {}, const RunOptions& options = {});

struct StripParams {
  int kappa = 1;
  std::vector<int> n_grid{16, 32, 64, 128, 256};
  std::uint64_t samples = 50000;
  double slope_lo = -0.6, slope_hi = -0.4;
};

/// P(rho_n <= T_{kappa N}) and P(rho_n <= T_{kappa Z-}) from 0, for each model.
ExperimentReport exp_strip(const std::vector<WalkModel>& models, const StripParams& params = {},
                           const RunOptions& options = {});

struct FactorizationParams {
  int kappa = 1;
  std::vector<int> n_list{4, 8, 16};
  std::uint64_t samples = 1000000;
  double sigmas = 3.0;
};

/// P(E_n) against P_*(E~_n^-) P(E_n^-); for models symmetric in the imaginary axis
/// also against P(E~_n^-) P(E_n^-).
ExperimentReport exp_factorization(const std::vector<WalkModel>& models, const FactorizationParams& params = {},
                                   const RunOptions& options = {});

struct EntryParams {
  int kappa = 1;
  std::vector<int> n_grid_minus{8, 16, 32, 64};
  std::vector<int> n_grid_plus{8, 16, 32};
  std::uint64_t samples_minus = 20000;
  std::uint64_t samples_plus = 400000;
  /// Trajectories leaving C_{trunc_factor * n} count as not entering at 0.
  double trunc_factor = 8.0;
  double spread_max = 3.0;
  double spearman_max = 0.5;
};

/// P^{-n}(S_{T_{kappa N}} = 0) and P^{n}(S_{T_{kappa N}} = 0).
ExperimentReport exp_entry_point(const WalkModel& model, const EntryParams& params = {},
                                 const RunOptions& options = {});

struct ShiftedParams {
  int kappa = 1;
  std::vector<int> j_list{1, 4, 16};
  std::vector<int> n_grid{64, 256};
  std::uint64_t samples = 20000;
  double spread_max = 3.0;
};

/// P(tau_n < T_{kappa(j+N)}) and P(tau_n < T_{kappa(-j+N)}) from 0.
ExperimentReport exp_shifted(const WalkModel& model, const ShiftedParams& params = {},
                             const RunOptions& options = {});

struct OvershootParams {
  std::vector<int> n_grid{32, 64, 128, 256, 512};
  std::uint64_t samples = 2000;
  double exponent_max = 0.75;
};

/// E[|S_{tau_n}|] - n and E[log |S_{tau_n}|] - log n from 0.
ExperimentReport exp_overshoot(const WalkModel& model, const OvershootParams& params = {},
                               const RunOptions& options = {});

struct BeurlingParams {
  int kappa = 1;
  std::vector<int> k_grid{1, 4, 16};
  std::vector<int> n_grid{64, 128, 256};
  std::vector<DensePolicy> policies{DensePolicy::ray(), DensePolicy::random_angle(0), DensePolicy::alternating()};
  std::uint64_t samples = 10000;
  double spread_max = 3.0;
  double spearman_max = 0.5;
  int exact_n = 12, exact_k = 2;
  std::uint64_t exact_samples = 100000;
};

/// P(tau_{2n} < T_{A[k,n]}) from 0 for each dense-set policy; r = p / sqrt(k/n).
/// Spread and trend of the worst case over policies are checked; each policy gets a trend check.
/// RandomAngle policies draw their angles from a seed derived from the run seed.
/// Throws Error{InvalidArgument} if some k > n/2.
ExperimentReport exp_beurling(const WalkModel& model, const BeurlingParams& params = {},
                              const RunOptions& options = {});

}  // namespace latwalk
