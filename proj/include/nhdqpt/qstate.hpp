#pragma once

#include <functional>

#include "nhdqpt/core.hpp"

namespace nhdqpt {

enum class Formulation { Biorthogonal, NonBiorthogonal };

// Per-mode weights of the two bands. `minus` weights e_- = -h0, `plus`
// weights e_+ = +h0. Complex values are allowed.
struct ParticipationProbs {
  cplx plus;
  cplx minus;

  cplx total() const { return plus + minus; }
};

enum class StateKind { PureGround, PureExcited, Gibbs, InfiniteT, Custom };

struct InitialStateSpec {
  using CustomProbs = std::function<ParticipationProbs(double k)>;

  StateKind kind = StateKind::PureGround;
  double beta = 0.0;
  CustomProbs custom;
  Formulation formulation = Formulation::Biorthogonal;

  static InitialStateSpec pure_ground(Formulation f);
  static InitialStateSpec pure_excited(Formulation f);
  static InitialStateSpec gibbs(double beta, Formulation f = Formulation::Biorthogonal);
  static InitialStateSpec infinite_temperature(Formulation f = Formulation::Biorthogonal);
  static InitialStateSpec custom_probs(CustomProbs probs, Formulation f);

  // Throws std::invalid_argument when the spec is inconsistent.
  void validate() const;
};

// n_k = tanh(beta h0) with h0 = `energy` (the band energy on the chosen
// branch). Throws ExcludedPoint when |h0| is below the EP tolerance.
cplx gibbs_nk(const ComplexVec3& h0, double beta, int branch = +1);

// Band weights for the mode at momentum k. `branch` selects which root of
// h0^2 is labelled e_+.
ParticipationProbs participation(const InitialStateSpec& spec, double k, const ComplexVec3& h0,
                                 int branch = +1);

// (p- - p+) / (p+ + p-); equals n_k for Gibbs weights.
cplx effective_nk(const ParticipationProbs& probs);

}  // namespace nhdqpt
