#include <doctest.h>

#include <cstring>

#include "nhdqpt/loschmidt.hpp"
#include "support.hpp"

using namespace nhdqpt;
using testing::max_abs;

namespace {

TwoBandHamiltonian constant_model(const ComplexVec3& h) {
  return TwoBandHamiltonian([h](double) { return h; });
}

ParticipationProbs random_probs(StateKind kind, const ComplexVec3& h0, double beta) {
  switch (kind) {
    case StateKind::PureGround: return {0.0, 1.0};
    case StateKind::Gibbs: return participation(InitialStateSpec::gibbs(beta), 0.0, h0);
    default: return {testing::random_complex(), testing::random_complex() + 1.5};
  }
}

double relative_error(cplx a, cplx b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

QuenchScenario ssh_quench(double t1, Formulation f = Formulation::NonBiorthogonal) {
  return {make_ssh(t1, 1.0, 1.5), make_ssh(t1, 1.0, 0.0), InitialStateSpec::pure_ground(f), {}, {}};
}

}  // namespace

TEST_CASE("participation weights per state kind") {
  const ComplexVec3 h{0.3, 0.4, 0.0};
  CHECK(participation(InitialStateSpec::pure_ground(Formulation::Biorthogonal), 0, h).minus == cplx(1));
  CHECK(participation(InitialStateSpec::pure_excited(Formulation::Biorthogonal), 0, h).plus == cplx(1));
  const auto inf = participation(InitialStateSpec::infinite_temperature(), 0, h);
  CHECK(inf.plus == cplx(0.5));
  CHECK(inf.minus == cplx(0.5));
  const auto g = participation(InitialStateSpec::gibbs(2.0), 0, h);
  const double n = std::tanh(2.0 * 0.5);
  CHECK(std::abs(g.plus - 0.5 * (1 - n)) < 1e-15);
  CHECK(std::abs(g.minus - 0.5 * (1 + n)) < 1e-15);
  CHECK(std::abs(effective_nk(g) - n) < 1e-15);
  CHECK_THROWS_AS(effective_nk({1.0, -1.0}), ExcludedPoint);
  CHECK_THROWS_AS(gibbs_nk(h, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(gibbs_nk(ComplexVec3{1.0, cplx(0, 1), 0}, 1.0), ExcludedPoint);
  CHECK_THROWS_AS(InitialStateSpec::gibbs(-1.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(InitialStateSpec::custom_probs({}, Formulation::Biorthogonal).validate(),
                  std::invalid_argument);
}

TEST_CASE("Gibbs density matrix equals the normalized matrix exponential") {
  int checked = 0;
  double worst = 0;
  while (checked < 200) {
    const ComplexVec3 h0 = testing::random_gapped_vec();
    const double beta = testing::uniform(0.1, 5.0);
    const cplx e = band_energy(h0);
    if (std::abs(std::cosh(beta * e)) < 0.1) continue;  // trace nearly vanishes
    const Mat2 expm = (cplx(-beta) * bloch_matrix(h0)).exp();
    const Mat2 expected = expm / expm.trace();
    const cplx n = gibbs_nk(h0, beta);
    const Mat2 rho = 0.5 * (Mat2::Identity() - n * bloch_matrix(h0 / e));
    worst = std::max(worst, max_abs(rho - expected));
    ++checked;
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("analytic evolution operator matches the matrix exponential") {
  for (int trial = 0; trial < 200; ++trial) {
    const ComplexVec3 h0 = testing::random_gapped_vec();
    const ComplexVec3 h1 = testing::random_gapped_vec();
    const double t = testing::uniform(0.0, 5.0);
    const Mat2 expected = testing::expm_evolution(h1, t);
    const double scale = std::max(1.0, max_abs(expected));
    CHECK(max_abs(evolution_operator(make_mode(h0, h1), t) - expected) < 1e-10 * scale);
    CHECK(max_abs(oracle_evolution(h1, t) - expected) < 1e-9 * scale);
  }
}

TEST_CASE("analytic amplitudes match the trace oracle") {
  const StateKind kinds[] = {StateKind::PureGround, StateKind::Gibbs, StateKind::Custom};
  double worst = 0;
  int count = 0;
  for (int trial = 0; trial < 1200; ++trial) {
    const ComplexVec3 h0 = testing::random_gapped_vec();
    const ComplexVec3 h1 = testing::random_gapped_vec();
    const StateKind kind = kinds[trial % 3];
    const double beta = testing::uniform(0.1, 3.0);
    if (kind == StateKind::Gibbs && std::abs(std::cosh(beta * band_energy(h0))) < 0.1) continue;
    const ParticipationProbs p = random_probs(kind, h0, beta);
    const double t = testing::uniform(0.0, 5.0);
    const ModePair mode = make_mode(h0, h1);
    for (Formulation f : {Formulation::Biorthogonal, Formulation::NonBiorthogonal}) {
      const cplx analytic = mode_amplitude(mode, p, f, t);
      const cplx oracle = oracle_amplitude(h0, h1, p, f, t);
      worst = std::max(worst, relative_error(analytic, oracle));
      ++count;
    }
  }
  CHECK(count >= 2000);
  CHECK(worst < 1e-9);
}

TEST_CASE("amplitudes are invariant under band relabelling") {
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const ComplexVec3 h0 = testing::random_gapped_vec();
    const ComplexVec3 h1 = testing::random_gapped_vec();
    const double t = testing::uniform(0.0, 5.0);
    const double beta = testing::uniform(0.1, 3.0);
    const ModePair a = make_mode(h0, h1, +1, +1);
    const ModePair b = make_mode(h0, h1, -1, -1);
    // Relabelling swaps which band each weight belongs to.
    const ParticipationProbs pa{testing::random_complex(), testing::random_complex() + 1.5};
    const ParticipationProbs pb{pa.minus, pa.plus};
    for (Formulation f : {Formulation::Biorthogonal, Formulation::NonBiorthogonal})
      worst = std::max(worst, relative_error(mode_amplitude(b, pb, f, t), mode_amplitude(a, pa, f, t)));
    const cplx ga = amplitude_bio(a, gibbs_nk(h0, beta, +1), t);
    const cplx gb = amplitude_bio(b, gibbs_nk(h0, beta, -1), t);
    worst = std::max(worst, relative_error(gb, ga));
  }
  CHECK(worst < 1e-14);
}

TEST_CASE("temperature limits") {
  for (int trial = 0; trial < 200; ++trial) {
    const ComplexVec3 h0 = testing::random_hermitian_vec();
    if (std::abs(band_energy(h0)) < 0.5) continue;
    const ComplexVec3 h1 = testing::random_gapped_vec();
    const double t = testing::uniform(0.0, 5.0);
    const ModePair m = make_mode(h0, h1);
    const cplx cold = amplitude_bio(m, gibbs_nk(h0, 50.0), t);
    CHECK(relative_error(cold, amplitude_bio_pure(h0, h1, t)) < 1e-8);
    const ParticipationProbs p = participation(InitialStateSpec::gibbs(50.0), 0, h0);
    CHECK(relative_error(amplitude_nonbio(m, p, t), amplitude_nonbio(m, {0.0, 1.0}, t)) < 1e-8);
  }
  // Bounded spectra: the residual is below beta itself.
  for (int trial = 0; trial < 200; ++trial) {
    const ComplexVec3 h0 = testing::random_hermitian_vec(0.5);
    const ComplexVec3 h1 = testing::random_hermitian_vec(0.5);
    const double t = testing::uniform(0.0, 5.0);
    const cplx hot = amplitude_bio(h0, h1, gibbs_nk(h0, 1e-6), t);
    CHECK(std::abs(hot - std::cos(band_energy(h1) * t)) < 1e-6);
  }
  // Generic input: the residual is first order in beta.
  for (int trial = 0; trial < 200; ++trial) {
    const ComplexVec3 h0 = testing::random_gapped_vec();
    const ComplexVec3 h1 = testing::random_gapped_vec();
    const double t = testing::uniform(0.0, 5.0);
    const ModePair m = make_mode(h0, h1);
    const cplx c = std::cos(m.e1 * t), s = std::sin(m.e1 * t);
    const double bound = 1e-6 * std::abs(m.e0) * std::abs(bilinear_dot(m.unit0, m.unit1)) * std::abs(s);
    CHECK(std::abs(amplitude_bio(m, gibbs_nk(h0, 1e-6), t) - c) <= 1.001 * bound + 1e-15 * std::abs(c));
    CHECK(relative_error(amplitude_bio_inf_t(h1, t), std::cos(band_energy(h1) * t)) < 1e-15);
  }
}

TEST_CASE("Hermitian quenches: both formulations agree") {
  for (int trial = 0; trial < 300; ++trial) {
    const ComplexVec3 h0 = testing::random_hermitian_vec();
    const ComplexVec3 h1 = testing::random_hermitian_vec();
    if (std::abs(band_energy(h0)) < 0.1 || std::abs(band_energy(h1)) < 0.1) continue;
    const double t = testing::uniform(0.0, 5.0);
    const ModePair m = make_mode(h0, h1);
    for (const ParticipationProbs& p :
         {ParticipationProbs{0.0, 1.0}, participation(InitialStateSpec::gibbs(1.3), 0, h0)}) {
      CHECK(std::abs(mode_amplitude(m, p, Formulation::Biorthogonal, t) -
                     mode_amplitude(m, p, Formulation::NonBiorthogonal, t)) < 1e-10);
    }
  }
}

TEST_CASE("chiral quench with Hermitian postquench gives a real <P>_0") {
  for (double k : {-2.0, -0.3, 0.9, 2.7}) {
    const cplx p = expectation_p0(make_ssh(0.6, 1, 1.5)(k), make_ssh(0.6, 1, 0)(k), {0.0, 1.0});
    CHECK(std::abs(p.imag()) < 1e-14);
  }
}

TEST_CASE("grid validation") {
  KGrid k;
  CHECK(k.at(0) == -kPi);
  CHECK(k.at(k.count - 1) == kPi);
  CHECK(k.full_period());
  k.count = 2;
  CHECK_THROWS_AS(k.validate(), std::invalid_argument);
  TGrid t;
  CHECK(t.at(0) == 0.0);
  CHECK(t.at(t.count - 1) == 16.0);
  t.t_max = 0;
  try {
    t.validate();
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()) == "tGrid: tMax must be > 0");
  }
}

TEST_CASE("identical Hermitian quench has a flat zero rate function") {
  const auto m = make_ssh(0.6, 1.0, 0.0);
  for (Normalization norm : {Normalization::None, Normalization::SelfNorm, Normalization::BiorthoNorm}) {
    for (Formulation f : {Formulation::Biorthogonal, Formulation::NonBiorthogonal}) {
      QuenchScenario s{m, m, InitialStateSpec::pure_ground(f), {401, -kPi, kPi}, {200, 10.0}};
      const AmplitudeSeries series = echo_series(s, norm);
      for (double v : series.rate) CHECK(std::abs(v) < 1e-12);
    }
  }
}

TEST_CASE("self-normalized echo starts at one") {
  QuenchScenario s = ssh_quench(0.6);
  s.k_grid.count = 301;
  s.t_grid = {50, 5.0};
  const AmplitudeSeries series = echo_series(s, Normalization::SelfNorm);
  for (std::size_t ik = 0; ik < series.k.size(); ++ik) {
    CHECK(std::abs(series.echo[series.index(ik, 0)] - 1.0) < 1e-12);
    for (std::size_t it = 0; it < series.t.size(); ++it)
      CHECK(series.echo[series.index(ik, it)] <= 1.0 + 1e-12);
  }
  CHECK(std::abs(series.rate[0]) < 1e-12);
}

TEST_CASE("biorthogonal normalization equals the expansion-coefficient ratio") {
  for (int trial = 0; trial < 50; ++trial) {
    const ComplexVec3 h0 = testing::random_gapped_vec();
    const ComplexVec3 h1 = testing::random_gapped_vec();
    QuenchScenario s{constant_model(h0), constant_model(h1),
                     InitialStateSpec::pure_ground(Formulation::Biorthogonal), {3, -1.0, 1.0}, {20, 3.0}};
    const AmplitudeSeries series = echo_series(s, Normalization::BiorthoNorm);
    const BiorthoEigensystem es = eigensystem_2x2(h0);
    for (std::size_t it = 0; it < series.t.size(); ++it) {
      const Mat2 u = testing::expm_evolution(h1, series.t[it]);
      const cplx c_nn = (es.left_minus * u * es.right_minus).value();
      const cplx c_pn = (es.left_plus * u * es.right_minus).value();
      const double expected = std::norm(c_nn) / (std::norm(c_nn) + std::norm(c_pn));
      CHECK(std::abs(series.echo[series.index(1, it)] - expected) < 1e-9);
    }
    CHECK(std::abs(series.echo[series.index(1, 0)] - 1.0) < 1e-12);
  }
}

TEST_CASE("echo series is independent of the thread count") {
  QuenchScenario s = ssh_quench(2.2);
  s.k_grid.count = 501;
  s.t_grid = {300, 8.0};
  const AmplitudeSeries a = echo_series(s, Normalization::SelfNorm, 1);
  const AmplitudeSeries b = echo_series(s, Normalization::SelfNorm, 4);
  REQUIRE(a.rate.size() == b.rate.size());
  CHECK(std::memcmp(a.rate.data(), b.rate.data(), a.rate.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(a.echo.data(), b.echo.data(), a.echo.size() * sizeof(double)) == 0);
}

TEST_CASE("rate function drops excluded cells and clamps zero echoes") {
  AmplitudeSeries s;
  s.k = {0.0, 1.0, 2.0, 3.0};
  s.t = {0.0, 1.0};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  // it = 0: uniform echo e^{-1}; it = 1: one excluded cell and one zero echo.
  s.echo = {std::exp(-1.0), 1.0, std::exp(-1.0), nan, std::exp(-1.0), 0.0, std::exp(-1.0), 1.0};
  const RateResult r = rate_function(s);
  CHECK(std::abs(r.values[0] - 3.0 / (4 * kPi)) < 1e-15);
  CHECK(r.clamped == 1);
  // Remaining weights 0.5 (k=0), 1 (k=2), 0.5 (k=3) rescaled by 3 / 2.
  const double expected = -(1.0 * std::log(1e-300)) * 1.5 / (4 * kPi);
  CHECK(std::abs(r.values[1] - expected) < 1e-12 * std::abs(expected));
}

TEST_CASE("exceptional points are excluded from sweeps") {
  // (A, B) = 0 at k = pi for t1 - t2 + gamma = 0.
  QuenchScenario s{make_ssh(0.5, 1.0, 0.5), make_ssh(0.5, 1.0, 0.0),
                   InitialStateSpec::pure_ground(Formulation::NonBiorthogonal), {101, -kPi, kPi}, {10, 1.0}};
  const AmplitudeSeries series = echo_series(s, Normalization::SelfNorm);
  CHECK(series.excluded_k == 2);
  CHECK(series.k_excluded.front() == 1);
  CHECK(series.k_excluded.back() == 1);
  for (double v : series.rate) CHECK(std::isfinite(v));
}
