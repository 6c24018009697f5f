#include "nhdqpt/qstate.hpp"

#include <cmath>
#include <utility>

#include "nhdqpt/nhband.hpp"

namespace nhdqpt {

InitialStateSpec InitialStateSpec::pure_ground(Formulation f) {
  return {StateKind::PureGround, 0.0, {}, f};
}

InitialStateSpec InitialStateSpec::pure_excited(Formulation f) {
  return {StateKind::PureExcited, 0.0, {}, f};
}

InitialStateSpec InitialStateSpec::gibbs(double beta, Formulation f) {
  return {StateKind::Gibbs, beta, {}, f};
}

InitialStateSpec InitialStateSpec::infinite_temperature(Formulation f) {
  return {StateKind::InfiniteT, 0.0, {}, f};
}

InitialStateSpec InitialStateSpec::custom_probs(CustomProbs probs, Formulation f) {
  return {StateKind::Custom, 0.0, std::move(probs), f};
}

void InitialStateSpec::validate() const {
  if (kind == StateKind::Gibbs && !(beta > 0.0 && std::isfinite(beta)))
    throw std::invalid_argument("state: Gibbs state requires finite beta > 0");
  if (kind == StateKind::Custom && !custom)
    throw std::invalid_argument("state: custom state requires a probability function");
}

cplx gibbs_nk(const ComplexVec3& h0, double beta, int branch) {
  if (!(beta > 0.0)) throw std::invalid_argument("gibbs_nk: beta must be > 0");
  const cplx e = band_energy(h0, branch);
  if (std::abs(e) <= ep_tolerance(h0) || discriminant_vanishes(h0, max_norm(h0)))
    throw ExcludedPoint(Exclusion::ExceptionalPoint, "gibbs_nk: h0 at an exceptional point");
  return std::tanh(beta * e);
}

ParticipationProbs participation(const InitialStateSpec& spec, double k, const ComplexVec3& h0,
                                 int branch) {
  switch (spec.kind) {
    case StateKind::PureGround:
      return {0.0, 1.0};
    case StateKind::PureExcited:
      return {1.0, 0.0};
    case StateKind::InfiniteT:
      return {0.5, 0.5};
    case StateKind::Gibbs: {
      const cplx nk = gibbs_nk(h0, spec.beta, branch);
      return {0.5 * (1.0 - nk), 0.5 * (1.0 + nk)};
    }
    case StateKind::Custom:
      if (!spec.custom) throw std::invalid_argument("participation: custom state without function");
      return spec.custom(k);
  }
  throw std::invalid_argument("participation: unknown state kind");
}

cplx effective_nk(const ParticipationProbs& probs) {
  const cplx total = probs.total();
  if (std::abs(total) == 0.0)
    throw ExcludedPoint(Exclusion::ZeroWeight, "participation weights sum to zero");
  return (probs.minus - probs.plus) / total;
}

}  // namespace nhdqpt
