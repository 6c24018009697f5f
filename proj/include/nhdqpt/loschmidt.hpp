#pragma once

#include <vector>

#include "nhdqpt/nhband.hpp"
#include "nhdqpt/qstate.hpp"

namespace nhdqpt {

// One momentum mode of a quench H0(k) -> H1(k), with the square-root branch
// of each band energy fixed.
struct ModePair {
  ComplexVec3 h0;
  ComplexVec3 h1;
  cplx e0;
  cplx e1;
  ComplexVec3 unit0;  // h0 / e0
  ComplexVec3 unit1;  // h1 / e1
  BiorthoEigensystem basis0;
};

// Throws ExcludedPoint when either Hamiltonian sits at an exceptional point.
ModePair make_mode(const ComplexVec3& h0, const ComplexVec3& h1, int branch0 = +1,
                   int branch1 = +1);

// Branch sign (+1/-1) of band_energy(h) closest to `previous`.
int continue_branch(cplx previous, const ComplexVec3& h);

// cos(h1 t) + i sin(h1 t) n_k (h0^ . h1^)
cplx amplitude_bio(const ModePair& mode, cplx nk, double t);
cplx amplitude_bio(const ComplexVec3& h0, const ComplexVec3& h1, cplx nk, double t);
cplx amplitude_bio_pure(const ComplexVec3& h0, const ComplexVec3& h1, double t);
cplx amplitude_bio_inf_t(const ComplexVec3& h1, double t);

// p~+ <u~+|H1^|u~+> + p~- <u~-|H1^|u~-> with unit-norm right eigenvectors of H0.
cplx expectation_p0(const ModePair& mode, const ParticipationProbs& probs);
cplx expectation_p0(const ComplexVec3& h0, const ComplexVec3& h1, const ParticipationProbs& probs);

// cos(h1 t) - i sin(h1 t) <P>_0, the common factor (p+ + p-) dropped.
cplx amplitude_nonbio(const ModePair& mode, const ParticipationProbs& probs, double t);
cplx amplitude_nonbio(const ComplexVec3& h0, const ComplexVec3& h1,
                      const ParticipationProbs& probs, double t);

// Formulation dispatch with the same dropped-normalization convention.
cplx mode_amplitude(const ModePair& mode, const ParticipationProbs& probs, Formulation f,
                    double t);

// cos(h1 t) 1 - i sin(h1 t) H1/h1
Mat2 evolution_operator(const ModePair& mode, double t);

// exp(-i H1 t) from a dense eigendecomposition.
Mat2 oracle_evolution(const ComplexVec3& h1, double t);

// Brute-force Tr[rho_k(0) exp(-i H1 t)] / (p+ + p-) with rho_k built from a
// numerical eigendecomposition of H0. `branch0` only decides which numerical
// eigenvector carries the `plus` label.
cplx oracle_amplitude(const ComplexVec3& h0, const ComplexVec3& h1,
                      const ParticipationProbs& probs, Formulation f, double t,
                      int branch0 = +1);

// Uniform momentum grid including both endpoints.
struct KGrid {
  int count = 2001;
  double k_min = -kPi;
  double k_max = kPi;

  double step() const { return (k_max - k_min) / (count - 1); }
  double at(int i) const { return i == count - 1 ? k_max : k_min + i * step(); }
  bool full_period() const;
  void validate() const;
};

// t_j = j t_max / (count - 1)
struct TGrid {
  int count = 2000;
  double t_max = 16.0;

  double step() const { return t_max / (count - 1); }
  double at(int j) const { return j == count - 1 ? t_max : j * step(); }
  void validate() const;
};

struct QuenchScenario {
  TwoBandHamiltonian h0_model;
  TwoBandHamiltonian h1_model;
  InitialStateSpec state;
  KGrid k_grid;
  TGrid t_grid;

  void validate() const;
};

enum class Normalization { None, SelfNorm, BiorthoNorm };

struct AmplitudeSeries {
  std::vector<double> k;
  std::vector<double> t;
  // Row-major in k: index ik * t.size() + it. Excluded cells hold NaN echoes.
  std::vector<cplx> amplitude;
  std::vector<double> echo;
  std::vector<double> rate;
  std::vector<char> k_excluded;
  Normalization normalization = Normalization::None;
  int excluded_k = 0;
  int excluded_cells = 0;
  int clamped = 0;

  std::size_t index(std::size_t ik, std::size_t it) const { return ik * t.size() + it; }
};

// Per-mode amplitudes and echoes over the scenario grids, plus the rate
// function. Principal band labels are used at every k. Results do not
// depend on `threads`.
AmplitudeSeries echo_series(const QuenchScenario& scenario, Normalization normalization,
                            int threads = 0);

struct RateResult {
  std::vector<double> values;
  int clamped = 0;
};

// -(1/4pi) * trapezoid integral over k of ln(echo). Excluded cells are
// dropped and the remaining weights rescaled to the full range.
RateResult rate_function(const AmplitudeSeries& series);

}  // namespace nhdqpt
