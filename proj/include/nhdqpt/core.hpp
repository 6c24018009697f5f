#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace nhdqpt {

using cplx = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;
using Ket2 = Eigen::Vector2cd;
using Bra2 = Eigen::RowVector2cd;

inline constexpr double kPi = std::numbers::pi;

// Complex 3-vector h with H = h . sigma. Components are complex scalars.
struct ComplexVec3 {
  cplx x{};
  cplx y{};
  cplx z{};

  ComplexVec3 operator-() const { return {-x, -y, -z}; }
  ComplexVec3 operator*(cplx s) const { return {x * s, y * s, z * s}; }
  ComplexVec3 operator/(cplx s) const { return {x / s, y / s, z / s}; }

  bool is_finite() const;
  // Largest imaginary part, used for Hermiticity checks.
  double max_imag() const;
};

// Bilinear (non-conjugated) dot product a.b.
inline cplx bilinear_dot(const ComplexVec3& a, const ComplexVec3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

// Why a mode was dropped from a sweep.
enum class Exclusion {
  ExceptionalPoint,
  Pole,
  ZeroWeight,
  Gapless,
};

const char* to_string(Exclusion reason);

// Thrown by single-mode operations whose preconditions fail at one k.
// Grid sweeps catch this and count the point as excluded.
class ExcludedPoint : public std::domain_error {
 public:
  ExcludedPoint(Exclusion reason, const std::string& what)
      : std::domain_error(what), reason_(reason) {}
  Exclusion reason() const { return reason_; }

 private:
  Exclusion reason_;
};

}  // namespace nhdqpt
