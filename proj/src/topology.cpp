#include "nhdqpt/topology.hpp"

#include <cmath>
#include <sstream>

#include "nhdqpt/criticality.hpp"

namespace nhdqpt {

namespace {

constexpr double kZeroVector = 1e-12;
constexpr double kAliasing = kPi - 1e-6;
constexpr double kChiralTol = 1e-12;

std::string k_message(const std::string& what, double k) {
  std::ostringstream os;
  os.precision(17);
  os << what << " at k = " << k;
  return os.str();
}

std::vector<double> grid_points(const KGrid& grid) {
  grid.validate();
  std::vector<double> ks(static_cast<std::size_t>(grid.count));
  for (int i = 0; i < grid.count; ++i) ks[static_cast<std::size_t>(i)] = grid.at(i);
  return ks;
}

void require_chiral(const ComplexVec3& h, double k, const char* which) {
  if (std::abs(h.z) > kChiralTol) throw WindingError(k_message(std::string(which) + " has hz != 0", k), k);
}

// (A, B) and (C, D) for a chiral h.
Vec2 ab_of(const ComplexVec3& h) {
  const AbcdgfForm f = AbcdgfForm::from_vector(h);
  return {f.a, f.b};
}

Vec2 cd_of(const ComplexVec3& h) {
  const AbcdgfForm f = AbcdgfForm::from_vector(h);
  return {f.c, f.d};
}

Vec2 hermitian_d(const TwoBandHamiltonian& model, double k) {
  const ComplexVec3 h = model(k);
  require_chiral(h, k, "postquench model");
  if (h.max_imag() > kChiralTol) throw WindingError(k_message("postquench model is not Hermitian", k), k);
  const Vec2 d{h.x.real(), h.y.real()};
  if (std::hypot(d[0], d[1]) <= kZeroVector) throw WindingError(k_message("postquench gap closes", k), k);
  return d;
}

struct PrequenchFlows {
  PlanarFlow ab;
  PlanarFlow cd;
};

PrequenchFlows prequench_flows(const TwoBandHamiltonian& model, const std::vector<double>& ks) {
  PrequenchFlows flows;
  flows.ab.k = ks;
  flows.cd.k = ks;
  for (double k : ks) {
    const ComplexVec3 h = model(k);
    require_chiral(h, k, "prequench model");
    const Vec2 ab = ab_of(h);
    const Vec2 cd = cd_of(h);
    if (std::hypot(ab[0], ab[1]) <= kZeroVector || std::hypot(cd[0], cd[1]) <= kZeroVector)
      throw WindingError(k_message("prequench model has an exceptional point", k), k);
    flows.ab.v.push_back(ab);
    flows.cd.v.push_back(cd);
  }
  return flows;
}

}  // namespace

bool PlanarFlow::closed(double tol) const {
  if (v.size() < 2) return false;
  const Vec2& a = v.front();
  const Vec2& b = v.back();
  const double na = std::hypot(a[0], a[1]);
  const double nb = std::hypot(b[0], b[1]);
  if (na == 0.0 || nb == 0.0) return false;
  return std::hypot(a[0] / na - b[0] / nb, a[1] / na - b[1] / nb) <= tol;
}

std::vector<double> unwrapped_angles(const PlanarFlow& flow) {
  if (flow.v.size() != flow.k.size()) throw WindingError("flow: k and v sizes differ");
  if (flow.v.size() < 2) throw WindingError("flow: needs at least two samples");
  std::vector<double> angles(flow.v.size());
  for (std::size_t i = 0; i < flow.v.size(); ++i) {
    const Vec2& v = flow.v[i];
    if (std::hypot(v[0], v[1]) <= kZeroVector)
      throw WindingError(k_message("flow vanishes", flow.k[i]), flow.k[i]);
    const double phi = std::atan2(v[1], v[0]);
    if (i == 0) {
      angles[i] = phi;
      continue;
    }
    const Vec2& u = flow.v[i - 1];
    // Principal angle between consecutive samples.
    const double step = std::atan2(u[0] * v[1] - u[1] * v[0], u[0] * v[0] + u[1] * v[1]);
    if (std::abs(step) >= kAliasing)
      throw WindingError(k_message("angle step too large, refine the grid", flow.k[i]), flow.k[i]);
    angles[i] = angles[i - 1] + step;
  }
  return angles;
}

double winding_of_flow(const PlanarFlow& flow) {
  const std::vector<double> angles = unwrapped_angles(flow);
  return (angles.back() - angles.front()) / (2.0 * kPi);
}

double nu1_hermitian(const TwoBandHamiltonian& h1, const KGrid& grid) {
  PlanarFlow flow;
  flow.k = grid_points(grid);
  for (double k : flow.k) flow.v.push_back(hermitian_d(h1, k));
  return winding_of_flow(flow);
}

double nu0_nonhermitian(const TwoBandHamiltonian& h0, const KGrid& grid) {
  const PrequenchFlows flows = prequench_flows(h0, grid_points(grid));
  return 0.5 * (winding_of_flow(flows.cd) - winding_of_flow(flows.ab));
}

ChiralQuenchFlow chiral_quench_flow(const TwoBandHamiltonian& h0, const TwoBandHamiltonian& h1,
                                    const KGrid& grid) {
  const std::vector<double> ks = grid_points(grid);
  const PrequenchFlows flows = prequench_flows(h0, ks);
  const std::vector<double> phi1 = unwrapped_angles(flows.ab);
  const std::vector<double> phi2 = unwrapped_angles(flows.cd);

  ChiralQuenchFlow out;
  out.samples.resize(ks.size());
  for (std::size_t i = 0; i < ks.size(); ++i) {
    ChiralQuenchSample& s = out.samples[i];
    s.k = ks[i];
    const Vec2& ab = flows.ab.v[i];
    const Vec2& cd = flows.cd.v[i];
    s.r = std::pow((cd[0] * cd[0] + cd[1] * cd[1]) / (ab[0] * ab[0] + ab[1] * ab[1]), 0.25);
    s.phi0 = 0.5 * (phi2[i] - phi1[i]);
    s.pre = {s.r * std::cos(s.phi0), s.r * std::sin(s.phi0)};
    const Vec2 d = hermitian_d(h1, s.k);
    const double norm = std::hypot(d[0], d[1]);
    s.post = {d[0] / norm, d[1] / norm};
    s.dot = s.pre[0] * s.post[0] + s.pre[1] * s.post[1];
  }
  return out;
}

std::string chiral_precondition_failure(const QuenchScenario& scenario) {
  if (scenario.state.kind != StateKind::PureGround) return "initial state is not the pure ground state";
  if (scenario.state.formulation != Formulation::NonBiorthogonal)
    return "formulation is not non-biorthogonal";
  return {};
}

WindingReport winding_report(const QuenchScenario& scenario, int branch, int threads) {
  scenario.validate();
  WindingReport report;

  try {
    const auto flow = orthogonality_flow(scenario, branch, threads);
    PlanarFlow vs;
    PlanarFlow vh;
    for (const auto& o : flow) {
      if (o.excluded)
        throw WindingError(k_message("orthogonality flow excluded", o.k), o.k);
      vs.k.push_back(o.k);
      vh.k.push_back(o.k);
      vs.v.push_back({o.vs[0], o.vs[1]});
      vh.v.push_back({o.vh[0], o.vh[1]});
    }
    report.w_s = winding_of_flow(vs);
    report.w_h = winding_of_flow(vh);
    report.delta_w = *report.w_s - *report.w_h;
  } catch (const WindingError& e) {
    report.orthogonality_error = e.what();
  }

  report.chiral_error = chiral_precondition_failure(scenario);
  if (report.chiral_error.empty()) {
    try {
      ChiralWindings c;
      c.nu0 = nu0_nonhermitian(scenario.h0_model, scenario.k_grid);
      c.nu1 = nu1_hermitian(scenario.h1_model, scenario.k_grid);
      c.delta_nu = c.nu1 - c.nu0;
      report.chiral = c;
    } catch (const WindingError& e) {
      report.chiral_error = e.what();
    }
  }

  constexpr double kHalf = 0.5 - 1e-9;
  report.sufficient_dqpt = (report.chiral && std::abs(report.chiral->delta_nu) >= kHalf) ||
                           (report.delta_w && std::abs(*report.delta_w) >= kHalf);
  return report;
}

}  // namespace nhdqpt
