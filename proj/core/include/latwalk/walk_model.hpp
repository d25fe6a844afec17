#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "latwalk/lattice.hpp"

namespace latwalk {

struct Step {
  Point offset;
  double prob = 0.0;
};

/// Axis-aligned steps with P(length = r) proportional to r^-beta, 1 <= r <= rmax.
struct HeavyTailSpec {
  double beta = 7.5;
  std::int32_t rmax = 10000;
};

using Matrix2 = std::array<std::array<double, 2>, 2>;

/// Step law p on a lattice, kept as a finite support list. The heavy-tail
/// family is materialized up to its truncation radius so every moment is an
/// exact finite sum.
class StepDistribution {
 public:
  StepDistribution() = default;
  explicit StepDistribution(std::vector<Step> support, double moment_delta = 1.0);

  static StepDistribution heavy_tail(HeavyTailSpec spec, double moment_delta);

  const std::vector<Step>& support() const { return support_; }
  double moment_delta() const { return delta_; }
  const std::optional<HeavyTailSpec>& heavy() const { return heavy_; }

  /// p(z); zero off the support.
  double pmf(Point z) const;

 private:
  std::vector<Step> support_;
  double delta_ = 1.0;
  std::optional<HeavyTailSpec> heavy_;
};

/// Computed moments of a step law against the standing assumptions:
/// mean zero, covariance sigma^2 * I, finite (3+delta) moment, generation of L.
struct MomentReport {
  std::complex<double> mean;
  Matrix2 covariance{};
  double sigma2 = 0.0;
  /// E|X|^{3+delta}; for the heavy-tail family the truncated sum is reported
  /// and finiteness of the untruncated law is certified analytically.
  double third_plus_delta_moment = 0.0;
  bool moment_analytically_finite = false;
  bool generates_lattice = false;
  std::int64_t subgroup_index = 0;

  bool mean_zero = false;
  bool isotropic = false;
  bool moment_finite = false;

  bool passes() const { return mean_zero && isotropic && moment_finite && generates_lattice; }
  std::vector<std::string> violations() const;
};

/// Checks (cond1)-(cond3) and lattice generation.
/// Throws Error{NonProbability} for negative mass or total mass != 1 and
/// Error{DegenerateSupport} when the support spans only a line.
MomentReport validate(const StepDistribution& dist, const LatticeBasis& basis = {});

/// Index of the subgroup of Z^2 generated by `vectors` (0 if rank < 2).
std::int64_t subgroup_index(const std::vector<Point>& vectors);

/// An immutable random walk: lattice basis plus step law plus its moment report.
class WalkModel {
 public:
  WalkModel(LatticeBasis basis, StepDistribution dist, std::string name = "custom");

  const LatticeBasis& basis() const { return basis_; }
  const StepDistribution& distribution() const { return dist_; }
  const std::vector<Step>& steps() const { return dist_.support(); }
  const MomentReport& moments() const { return report_; }
  const std::string& name() const { return name_; }
  /// 16 hex digits identifying basis and step law.
  const std::string& hash() const { return hash_; }

  double sigma2() const { return report_.sigma2; }
  double pmf(Point z) const { return dist_.pmf(z); }
  /// Largest |coordinate| over the support.
  std::int32_t max_coordinate() const { return max_coord_; }
  /// Largest embedded step length.
  double max_step_length() const { return max_step_; }

  /// Throws Error{GeneratesLattice} or Error{InvalidArgument} naming every
  /// violated standing assumption.
  void require_admissible() const;

 private:
  LatticeBasis basis_;
  StepDistribution dist_;
  std::string name_;
  MomentReport report_;
  std::string hash_;
  std::int32_t max_coord_ = 0;
  double max_step_ = 0.0;
};

/// Time reversal: p*(z) = p(-z).
WalkModel reverse(const WalkModel& model);

struct Normalization {
  /// Real linear map applied to embedded coordinates.
  Matrix2 map{};
  WalkModel model;
};

/// Maps a walk with positive definite covariance C to one with covariance
/// sigma^2 * I. The map is R * sqrt(lambda_min(C)) * C^{-1/2}, with R the
/// rotation putting the image of e1 on the positive real axis; it is the
/// identity for already isotropic walks. Lattice coordinates are unchanged,
/// only the basis embedding moves. Throws Error{SingularCovariance}.
Normalization normalize(const WalkModel& model);

namespace presets {
/// Simple random walk on Z^2, p = 1/4 on {+-1, +-i}.
WalkModel srw();
/// Uniform on {+-1, +-2, +-i, +-2i}.
WalkModel range2();
/// p(1) = 1/2, p(-1+i) = p(-1-i) = 1/4: mean zero, covariance diag(1, 1/2).
WalkModel skewed();
/// `skewed()` after normalize(): the x-asymmetric isotropic test model.
WalkModel skewed_normalized();
/// Uniform on {1+i, -1-i, 1-i, -1+i}; covariance I but generates an index-2 sublattice.
WalkModel diagonal();
WalkModel heavy_tail(double beta = 7.5, std::int32_t rmax = 10000, double delta = 0.5);
}  // namespace presets

}  // namespace latwalk
