#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>

namespace latwalk {

/// A lattice point in integer basis coordinates: z = j*e1 + k*e2.
struct Point {
  std::int32_t j = 0;
  std::int32_t k = 0;

  constexpr Point operator+(Point o) const { return {j + o.j, k + o.k}; }
  constexpr Point operator-(Point o) const { return {j - o.j, k - o.k}; }
  constexpr Point operator-() const { return {-j, -k}; }
  constexpr bool operator==(const Point&) const = default;
};

/// Row-major order: by k (row), then j.
constexpr bool row_major_less(Point a, Point b) {
  return a.k != b.k ? a.k < b.k : a.j < b.j;
}

struct PointHash {
  std::size_t operator()(Point p) const noexcept {
    auto key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.j)) << 32) |
               static_cast<std::uint32_t>(p.k);
    key ^= key >> 33;
    key *= 0xff51afd7ed558ccdULL;
    key ^= key >> 33;
    return static_cast<std::size_t>(key);
  }
};

/// Two linearly independent vectors in C spanning L = {j*e1 + k*e2}.
class LatticeBasis {
 public:
  /// The canonical square lattice Z^2 (e1 = 1, e2 = i).
  LatticeBasis();
  LatticeBasis(std::complex<double> e1, std::complex<double> e2);

  std::complex<double> e1() const { return e1_; }
  std::complex<double> e2() const { return e2_; }

  /// Signed area of the fundamental cell, Re(e1)Im(e2) - Im(e1)Re(e2).
  double determinant() const { return det_; }
  double covolume() const { return det_ < 0 ? -det_ : det_; }

  std::complex<double> embed(Point p) const { return double(p.j) * e1_ + double(p.k) * e2_; }

  /// |z|^2 through the Gram matrix; exact for Z^2 while |coords| < 2^26.
  double norm2(Point p) const {
    const double j = p.j, k = p.k;
    return g11_ * j * j + 2.0 * g12_ * j * k + g22_ * k * k;
  }
  double im(Point p) const { return im1_ * p.j + im2_ * p.k; }
  double re(Point p) const { return re1_ * p.j + re2_ * p.k; }

  /// Coordinate bounds (|j| <= jmax, |k| <= kmax) covering the disk |z| <= r.
  void coordinate_bounds(double r, std::int32_t& jmax, std::int32_t& kmax) const;

  /// Real 2x2 matrix with columns (Re e, Im e) of the two basis vectors.
  void as_matrix(double m[2][2]) const;

  bool operator==(const LatticeBasis& o) const { return e1_ == o.e1_ && e2_ == o.e2_; }

 private:
  std::complex<double> e1_, e2_;
  double det_, g11_, g12_, g22_, re1_, re2_, im1_, im2_;
};

}  // namespace latwalk
