#pragma once

#include <random>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "nhdqpt/loschmidt.hpp"

namespace testing {

using nhdqpt::ComplexVec3;
using nhdqpt::cplx;
using nhdqpt::Mat2;

inline std::mt19937_64& rng() {
  static std::mt19937_64 engine(20240611);
  return engine;
}

inline double uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng());
}

inline cplx random_complex(double scale = 1.0) {
  return {uniform(-scale, scale), uniform(-scale, scale)};
}

inline ComplexVec3 random_vec(double scale = 1.0) {
  return {random_complex(scale), random_complex(scale), random_complex(scale)};
}

// Keeps away from exceptional points so that conditioning stays bounded.
inline ComplexVec3 random_gapped_vec(double scale = 1.0, double min_gap = 0.2) {
  for (;;) {
    const ComplexVec3 h = random_vec(scale);
    if (std::abs(nhdqpt::band_energy(h)) > min_gap * scale) return h;
  }
}

inline ComplexVec3 random_hermitian_vec(double scale = 1.0) {
  return {uniform(-scale, scale), uniform(-scale, scale), uniform(-scale, scale)};
}

inline double max_abs(const Mat2& m) { return m.cwiseAbs().maxCoeff(); }

// exp(-i H t) by Pade scaling and squaring, independent of any eigendecomposition.
inline Mat2 expm_evolution(const ComplexVec3& h, double t) {
  const Mat2 a = cplx(0, -t) * nhdqpt::bloch_matrix(h);
  return a.exp();
}

}  // namespace testing
