#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nhdqpt/loschmidt.hpp"

namespace nhdqpt {

using Vec2 = std::array<double, 2>;

// Samples of a real 2D vector field along k, in grid order.
struct PlanarFlow {
  std::vector<double> k;
  std::vector<Vec2> v;

  // First and last samples point the same way.
  bool closed(double tol = 1e-9) const;
};

// Raised for zero vectors, aliased angle increments and failed
// preconditions. `k()` is the offending momentum when there is one.
class WindingError : public std::runtime_error {
 public:
  WindingError(const std::string& what, std::optional<double> k = std::nullopt)
      : std::runtime_error(what), k_(k) {}
  std::optional<double> k() const { return k_; }

 private:
  std::optional<double> k_;
};

// Angles of the flow unwrapped from the principal value at the first sample.
std::vector<double> unwrapped_angles(const PlanarFlow& flow);

// Total unwrapped angle change / 2 pi.
double winding_of_flow(const PlanarFlow& flow);

// Counter-clockwise winding of (dx, dy) for a Hermitian chiral model, so that
// SSH with t1 < t2 gives +1.
double nu1_hermitian(const TwoBandHamiltonian& h1, const KGrid& grid);

// (nu2 - nu1) / 2 with nu1 the winding of (A, B) = (Re(hx - i hy), Im(hx - i hy))
// and nu2 that of (C, D) = (Re(hx + i hy), Im(hx + i hy)).
double nu0_nonhermitian(const TwoBandHamiltonian& h0, const KGrid& grid);

struct ChiralQuenchSample {
  double k = 0;
  double r = 0;     // ((C^2 + D^2) / (A^2 + B^2))^(1/4)
  double phi0 = 0;  // (phi2 - phi1) / 2 from unwrapped angles
  Vec2 pre{};       // r (cos phi0, sin phi0)
  Vec2 post{};      // normalized (dx, dy) of the postquench model
  double dot = 0;
};

struct ChiralQuenchFlow {
  std::vector<ChiralQuenchSample> samples;
};

// Requires hz = 0 in both models, no EP in h0 and a gapped Hermitian h1.
ChiralQuenchFlow chiral_quench_flow(const TwoBandHamiltonian& h0, const TwoBandHamiltonian& h1,
                                    const KGrid& grid);

struct ChiralWindings {
  double nu0 = 0;
  double nu1 = 0;
  double delta_nu = 0;  // nu1 - nu0
};

struct WindingReport {
  std::optional<double> w_s;
  std::optional<double> w_h;
  std::optional<double> delta_w;  // w_s - w_h
  std::optional<ChiralWindings> chiral;
  std::string orthogonality_error;  // set when w_s / w_h are absent
  std::string chiral_error;         // set when chiral is absent
  bool sufficient_dqpt = false;
};

// Whether the scenario is a chiral quench with a pure ground state in the
// non-biorthogonal formulation. Returns an empty string when it is.
std::string chiral_precondition_failure(const QuenchScenario& scenario);

// w_s, w_h from the orthogonality flow of `branch`; nu0, nu1 when the chiral
// preconditions hold.
WindingReport winding_report(const QuenchScenario& scenario, int branch = 0, int threads = 0);

}  // namespace nhdqpt
