#pragma once

#include <span>
#include <vector>

#include "nhdqpt/loschmidt.hpp"

namespace nhdqpt {

// Principal atanh, Im in (-pi/2, pi/2]. Throws ExcludedPoint(Pole) when the
// argument is within 1e-12 of +1 or -1.
cplx q_factor(cplx argument);
cplx q_factor(const ComplexVec3& h0, const ComplexVec3& h1, cplx nk);
cplx q_factor_nonbio(const ComplexVec3& h0, const ComplexVec3& h1, const ParticipationProbs& probs);

// n_k (h0^ . h1^) for the biorthogonal formulation, <P>_0 otherwise.
cplx state_coupling(const ModePair& mode, const ParticipationProbs& probs, Formulation f);

struct FisherZero {
  int n = 0;
  double k = 0;
  cplx z;
  Formulation formulation = Formulation::Biorthogonal;
};

// z_n = (i pi (n + 1/2) -/+ atanh(coupling)) / e1
// for n = 0..n_max. Minus for biorthogonal, plus for non-biorthogonal.
std::vector<FisherZero> fisher_zeros(cplx e1, cplx coupling, Formulation f, int n_max,
                                     double k = 0.0);
std::vector<FisherZero> fisher_zeros(const ComplexVec3& h0, const ComplexVec3& h1, cplx coupling,
                                     Formulation f, int n_max, double k = 0.0);

// cosh(e1 z) + sinh(e1 z) c (biorthogonal) or cosh(e1 z) - sinh(e1 z) c.
cplx continued_amplitude(cplx e1, cplx coupling, Formulation f, cplx z);

struct OrthogonalityVectors {
  double k = 0;
  double vs[2] = {0, 0};
  double vh[2] = {0, 0};
  double dot = 0;
  int n = 0;
  bool excluded = false;
};

// vS = (Qr, Qi - a) or (Qr, Qi + a), vH = (Re e1, Im e1), a = pi (n + 1/2),
// evaluated with principal band labels at every grid point.
std::vector<OrthogonalityVectors> orthogonality_flow(const QuenchScenario& scenario, int n,
                                                     int threads = 0);

struct CriticalTime {
  int n = 0;
  double t = 0;
};

struct CriticalPoint {
  double k = 0;  // in (-pi, pi]
  std::vector<CriticalTime> times;
  Formulation formulation = Formulation::Biorthogonal;
};

struct GrazingZero {
  int n = 0;
  double k = 0;
  double dot = 0;
};

struct CriticalityResult {
  std::vector<CriticalPoint> points;  // ordered by k, times by n
  std::vector<GrazingZero> grazing;
  int excluded_k = 0;
};

// Sign changes of dot(k) on branches n = 0..n_max, refined by bisection.
// Band labels are continued across each grid interval from its left end so
// that the square-root branch cut of the prequench energy does not hide a
// crossing.
CriticalityResult critical_points(const QuenchScenario& scenario, int n_max = 5,
                                  int threads = 0);

struct Cusp {
  double t = 0;
  double jump = 0;  // |second difference| / dt
  int index = 0;
};

// Local maxima of |second difference| above threshold * median. Needs at
// least five samples; NaN samples never produce cusps.
std::vector<Cusp> detect_cusps(std::span<const double> rate, const TGrid& grid,
                               double threshold = 20.0);

}  // namespace nhdqpt
