#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "nhdqpt/core.hpp"

namespace nhdqpt {

// Real parameterization of the 2x2 matrix
//   [[G+iF, A+iB], [C+iD, -(G+iF)]]
// that equals h . sigma.
struct AbcdgfForm {
  double a = 0, b = 0, c = 0, d = 0, g = 0, f = 0;

  static AbcdgfForm from_vector(const ComplexVec3& h);
  ComplexVec3 to_vector() const;
};

Mat2 bloch_matrix(const ComplexVec3& h);
double max_norm(const ComplexVec3& h);

// 1e-9 times the matrix max-norm.
double ep_tolerance(const ComplexVec3& h);

// |h.h| <= 1e-9 scale^2. Rounding leaves an on-grid EP with |e| near
// 1e-8 scale, which the eigenvalue threshold alone does not catch. Pass the
// model's largest max-norm as `scale` to also catch a vanishing matrix.
bool discriminant_vanishes(const ComplexVec3& h, double scale);

// Principal square root, with the ambiguity on the negative real axis
// resolved toward a positive imaginary part.
cplx principal_sqrt(cplx z);

// sqrt(hx^2 + hy^2 + hz^2) on the principal branch, times `branch` (+1 or -1).
cplx band_energy(const ComplexVec3& h, int branch = +1);

struct BiorthoEigensystem {
  cplx e_plus;
  cplx e_minus;
  Ket2 right_plus;
  Ket2 right_minus;
  Bra2 left_plus;
  Bra2 left_minus;
  bool near_ep = false;
};

// Closed-form right/left eigenvectors of h . sigma. The column
// (A+iB, e-(G+iF)) is used unless its normalization collapses, in which case
// the equivalent column (e+(G+iF), C+iD) is taken (diagonal matrices).
BiorthoEigensystem eigensystem_2x2(const ComplexVec3& h, int branch = +1);

// Unit-norm right eigenvectors (the non-biorthogonal basis).
struct SelfNormBasis {
  Ket2 plus;
  Ket2 minus;
};
SelfNormBasis self_normalized(const BiorthoEigensystem& es);

enum class ModelFamily { Ssh, Custom, Tabulated };

struct SshParams {
  double t1 = 0;
  double t2 = 0;
  double gamma = 0;
};

// Momentum-space two-band Hamiltonian k -> h(k). Immutable after construction.
class TwoBandHamiltonian {
 public:
  using Coefficients = std::function<ComplexVec3(double)>;

  explicit TwoBandHamiltonian(Coefficients coefficients,
                              ModelFamily family = ModelFamily::Custom,
                              std::optional<SshParams> ssh = std::nullopt);

  ComplexVec3 operator()(double k) const { return coefficients_(k); }

  ModelFamily family() const { return family_; }
  const std::optional<SshParams>& ssh_params() const { return ssh_; }

 private:
  Coefficients coefficients_;
  ModelFamily family_;
  std::optional<SshParams> ssh_;
};

// h = (t1 + t2 cos k, t2 sin k + i gamma, 0)
TwoBandHamiltonian make_ssh(double t1, double t2, double gamma);

// Periodic piecewise-linear interpolation of samples over one period
// starting at ks.front(); ks must be strictly increasing and span < 2 pi.
TwoBandHamiltonian make_tabulated(std::vector<double> ks,
                                  std::vector<ComplexVec3> samples);

bool is_periodic(const TwoBandHamiltonian& model, double tol = 1e-12);

struct EffectiveBloch {
  TwoBandHamiltonian traceless;
  cplx onsite;
};

// Bloch form of H - i sum_n L_n^dag L_n for the SSH chain with
// L_n = sqrt(gamma) (c_nA + e^{i phi} c_nB). Throws std::invalid_argument
// for gamma < 0.
EffectiveBloch lindblad_effective_bloch(double t1, double t2, double gamma,
                                        double phi);

}  // namespace nhdqpt
