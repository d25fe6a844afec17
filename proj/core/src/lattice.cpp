#include "latwalk/lattice.hpp"

#include <cmath>
#include <sstream>

#include "latwalk/error.hpp"

namespace latwalk {

LatticeBasis::LatticeBasis() : LatticeBasis({1.0, 0.0}, {0.0, 1.0}) {}

LatticeBasis::LatticeBasis(std::complex<double> e1, std::complex<double> e2) : e1_(e1), e2_(e2) {
  det_ = e1.real() * e2.imag() - e1.imag() * e2.real();
  const double scale = std::abs(e1) * std::abs(e2);
  if (!(scale > 0.0) || std::abs(det_) <= 1e-12 * scale) {
    std::ostringstream os;
    os << "lattice basis vectors " << e1 << ", " << e2 << " are linearly dependent";
    fail(ErrorCode::InvalidArgument, os.str());
  }
  g11_ = std::norm(e1);
  g22_ = std::norm(e2);
  g12_ = e1.real() * e2.real() + e1.imag() * e2.imag();
  re1_ = e1.real();
  re2_ = e2.real();
  im1_ = e1.imag();
  im2_ = e2.imag();
}

void LatticeBasis::coordinate_bounds(double r, std::int32_t& jmax, std::int32_t& kmax) const {
  const double d = covolume();
  jmax = static_cast<std::int32_t>(std::ceil(r * std::abs(e2_) / d)) + 1;
  kmax = static_cast<std::int32_t>(std::ceil(r * std::abs(e1_) / d)) + 1;
}

void LatticeBasis::as_matrix(double m[2][2]) const {
  m[0][0] = re1_;
  m[1][0] = im1_;
  m[0][1] = re2_;
  m[1][1] = im2_;
}

}  // namespace latwalk
