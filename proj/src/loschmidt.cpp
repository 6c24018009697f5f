#include "nhdqpt/loschmidt.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "nhdqpt/parallel.hpp"

namespace nhdqpt {

ModePair make_mode(const ComplexVec3& h0, const ComplexVec3& h1, int branch0, int branch1) {
  ModePair m;
  m.h0 = h0;
  m.h1 = h1;
  m.basis0 = eigensystem_2x2(h0, branch0);
  m.e0 = m.basis0.e_plus;
  if (m.basis0.near_ep || discriminant_vanishes(h0, max_norm(h0)))
    throw ExcludedPoint(Exclusion::ExceptionalPoint, "prequench Hamiltonian at an exceptional point");
  m.e1 = band_energy(h1, branch1);
  if (discriminant_vanishes(h1, max_norm(h1))) {
    const Exclusion why = h1.max_imag() == 0.0 ? Exclusion::Gapless : Exclusion::ExceptionalPoint;
    throw ExcludedPoint(why, "postquench Hamiltonian has a vanishing band energy");
  }
  m.unit0 = h0 / m.e0;
  m.unit1 = h1 / m.e1;
  return m;
}

int continue_branch(cplx previous, const ComplexVec3& h) {
  const cplx e = band_energy(h, +1);
  return std::abs(e - previous) <= std::abs(e + previous) ? +1 : -1;
}

cplx amplitude_bio(const ModePair& mode, cplx nk, double t) {
  const cplx i(0, 1);
  const cplx phase = mode.e1 * t;
  return std::cos(phase) + i * std::sin(phase) * nk * bilinear_dot(mode.unit0, mode.unit1);
}

cplx amplitude_bio(const ComplexVec3& h0, const ComplexVec3& h1, cplx nk, double t) {
  return amplitude_bio(make_mode(h0, h1), nk, t);
}

cplx amplitude_bio_pure(const ComplexVec3& h0, const ComplexVec3& h1, double t) {
  return amplitude_bio(make_mode(h0, h1), cplx(1.0), t);
}

cplx amplitude_bio_inf_t(const ComplexVec3& h1, double t) {
  const cplx e1 = band_energy(h1);
  if (discriminant_vanishes(h1, max_norm(h1)))
    throw ExcludedPoint(Exclusion::ExceptionalPoint, "postquench Hamiltonian has a vanishing band energy");
  return std::cos(e1 * t);
}

namespace {

cplx self_norm_expectation(const Ket2& u, const Mat2& op) {
  return u.dot(op * u);  // Eigen's dot conjugates the first argument
}

}  // namespace

cplx expectation_p0(const ModePair& mode, const ParticipationProbs& probs) {
  const cplx total = probs.total();
  if (std::abs(total) == 0.0)
    throw ExcludedPoint(Exclusion::ZeroWeight, "participation weights sum to zero");
  const SelfNormBasis basis = self_normalized(mode.basis0);
  const Mat2 unit_h1 = bloch_matrix(mode.unit1);
  cplx value = 0.0;
  if (probs.plus != cplx(0.0)) value += probs.plus / total * self_norm_expectation(basis.plus, unit_h1);
  if (probs.minus != cplx(0.0)) value += probs.minus / total * self_norm_expectation(basis.minus, unit_h1);
  return value;
}

cplx expectation_p0(const ComplexVec3& h0, const ComplexVec3& h1, const ParticipationProbs& probs) {
  return expectation_p0(make_mode(h0, h1), probs);
}

cplx amplitude_nonbio(const ModePair& mode, const ParticipationProbs& probs, double t) {
  const cplx i(0, 1);
  const cplx phase = mode.e1 * t;
  return std::cos(phase) - i * std::sin(phase) * expectation_p0(mode, probs);
}

cplx amplitude_nonbio(const ComplexVec3& h0, const ComplexVec3& h1,
                      const ParticipationProbs& probs, double t) {
  return amplitude_nonbio(make_mode(h0, h1), probs, t);
}

cplx mode_amplitude(const ModePair& mode, const ParticipationProbs& probs, Formulation f,
                    double t) {
  if (f == Formulation::Biorthogonal) return amplitude_bio(mode, effective_nk(probs), t);
  return amplitude_nonbio(mode, probs, t);
}

Mat2 evolution_operator(const ModePair& mode, double t) {
  const cplx i(0, 1);
  const cplx phase = mode.e1 * t;
  return std::cos(phase) * Mat2::Identity() - i * std::sin(phase) * bloch_matrix(mode.unit1);
}

Mat2 oracle_evolution(const ComplexVec3& h1, double t) {
  const Mat2 h = bloch_matrix(h1);
  // Scale to unit size before diagonalizing.
  const double scale = std::max(h.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  Eigen::ComplexEigenSolver<Mat2> solver(h / scale);
  const Mat2 v = solver.eigenvectors();
  const cplx i(0, 1);
  Eigen::Vector2cd phases;
  for (int n = 0; n < 2; ++n) phases(n) = std::exp(-i * solver.eigenvalues()(n) * scale * t);
  return v * phases.asDiagonal() * v.inverse();
}

cplx oracle_amplitude(const ComplexVec3& h0, const ComplexVec3& h1,
                      const ParticipationProbs& probs, Formulation f, double t, int branch0) {
  const cplx total = probs.total();
  if (std::abs(total) == 0.0)
    throw ExcludedPoint(Exclusion::ZeroWeight, "participation weights sum to zero");

  const Mat2 h = bloch_matrix(h0);
  Eigen::ComplexEigenSolver<Mat2> solver(h);
  const Mat2 right = solver.eigenvectors();
  const Mat2 left = right.inverse();  // rows are biorthonormal left vectors

  const cplx e_plus = band_energy(h0, branch0);
  const cplx l0 = solver.eigenvalues()(0);
  const int plus_index = std::abs(l0 - e_plus) <= std::abs(l0 + e_plus) ? 0 : 1;
  const int minus_index = 1 - plus_index;

  Mat2 rho = Mat2::Zero();
  auto add = [&](cplx weight, int n) {
    if (f == Formulation::Biorthogonal) {
      rho += weight * right.col(n) * left.row(n);
    } else {
      const Ket2 u = right.col(n).normalized();
      rho += weight * u * u.adjoint();
    }
  };
  add(probs.plus, plus_index);
  add(probs.minus, minus_index);

  return (rho * oracle_evolution(h1, t)).trace() / total;
}

bool KGrid::full_period() const {
  return std::abs((k_max - k_min) - 2.0 * kPi) <= 1e-12;
}

void KGrid::validate() const {
  if (count < 3) throw std::invalid_argument("kGrid: count must be >= 3");
  if (!(k_max > k_min) || !std::isfinite(k_min) || !std::isfinite(k_max))
    throw std::invalid_argument("kGrid: k_max must exceed k_min");
  if (k_max - k_min > 2.0 * kPi + 1e-12)
    throw std::invalid_argument("kGrid: range must not exceed one Brillouin zone");
}

void TGrid::validate() const {
  if (count < 2) throw std::invalid_argument("tGrid: count must be >= 2");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw std::invalid_argument("tGrid: tMax must be > 0");
}

void QuenchScenario::validate() const {
  k_grid.validate();
  t_grid.validate();
  state.validate();
}

namespace {

struct ModeKernel {
  ModePair mode;
  ParticipationProbs probs;
  cplx weight_plus;   // p~+
  cplx weight_minus;  // p~-
  Ket2 ket_plus, ket_minus;
  Bra2 bra_plus, bra_minus;
};

ModeKernel build_kernel(const QuenchScenario& s, double k) {
  const ComplexVec3 h0 = s.h0_model(k);
  const ComplexVec3 h1 = s.h1_model(k);
  if (!h0.is_finite() || !h1.is_finite())
    throw ExcludedPoint(Exclusion::ExceptionalPoint, "non-finite Hamiltonian coefficients");
  ModeKernel kern{make_mode(h0, h1), participation(s.state, k, h0), {}, {}, {}, {}, {}, {}};
  const cplx total = kern.probs.total();
  if (std::abs(total) == 0.0)
    throw ExcludedPoint(Exclusion::ZeroWeight, "participation weights sum to zero");
  kern.weight_plus = kern.probs.plus / total;
  kern.weight_minus = kern.probs.minus / total;
  if (s.state.formulation == Formulation::Biorthogonal) {
    kern.ket_plus = kern.mode.basis0.right_plus;
    kern.ket_minus = kern.mode.basis0.right_minus;
    kern.bra_plus = kern.mode.basis0.left_plus;
    kern.bra_minus = kern.mode.basis0.left_minus;
  } else {
    const SelfNormBasis b = self_normalized(kern.mode.basis0);
    kern.ket_plus = b.plus;
    kern.ket_minus = b.minus;
    kern.bra_plus = b.plus.adjoint();
    kern.bra_minus = b.minus.adjoint();
  }
  return kern;
}

double normalization_denominator(const ModeKernel& kern, const Mat2& u, Normalization norm) {
  if (norm == Normalization::None) return 1.0;
  double denom = 0.0;
  auto accumulate = [&](cplx weight, const Ket2& ket, const Bra2& bra) {
    if (weight == cplx(0.0)) return;
    const Ket2 evolved = u * ket;
    double term;
    if (norm == Normalization::SelfNorm) {
      term = bra.squaredNorm() * evolved.squaredNorm();
    } else {
      // Expansion of the evolved state in the prequench biorthogonal basis.
      term = std::norm((kern.mode.basis0.left_plus * evolved).value()) +
             std::norm((kern.mode.basis0.left_minus * evolved).value());
    }
    denom += std::norm(weight) * term;
  };
  accumulate(kern.weight_plus, kern.ket_plus, kern.bra_plus);
  accumulate(kern.weight_minus, kern.ket_minus, kern.bra_minus);
  return denom;
}

}  // namespace

AmplitudeSeries echo_series(const QuenchScenario& scenario, Normalization normalization,
                            int threads) {
  scenario.validate();
  AmplitudeSeries out;
  out.normalization = normalization;
  const auto nk = static_cast<std::size_t>(scenario.k_grid.count);
  const auto nt = static_cast<std::size_t>(scenario.t_grid.count);
  out.k.resize(nk);
  out.t.resize(nt);
  for (std::size_t i = 0; i < nk; ++i) out.k[i] = scenario.k_grid.at(static_cast<int>(i));
  for (std::size_t j = 0; j < nt; ++j) out.t[j] = scenario.t_grid.at(static_cast<int>(j));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.amplitude.assign(nk * nt, cplx(nan, nan));
  out.echo.assign(nk * nt, nan);
  out.k_excluded.assign(nk, 0);
  std::vector<int> bad_cells(nk, 0);

  parallel_for(nk, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t ik = begin; ik < end; ++ik) {
      ModeKernel kern;
      try {
        kern = build_kernel(scenario, out.k[ik]);
      } catch (const ExcludedPoint&) {
        out.k_excluded[ik] = 1;
        continue;
      }
      for (std::size_t it = 0; it < nt; ++it) {
        const double t = out.t[it];
        const cplx amp = mode_amplitude(kern.mode, kern.probs, scenario.state.formulation, t);
        const double denom =
            normalization_denominator(kern, evolution_operator(kern.mode, t), normalization);
        const std::size_t idx = out.index(ik, it);
        out.amplitude[idx] = amp;
        if (!(denom > 0.0) || !std::isfinite(denom)) {
          ++bad_cells[ik];
          continue;
        }
        out.echo[idx] = std::norm(amp) / denom;
      }
    }
  });

  for (std::size_t ik = 0; ik < nk; ++ik) {
    out.excluded_k += out.k_excluded[ik];
    out.excluded_cells += bad_cells[ik];
  }
  RateResult rate = rate_function(out);
  out.rate = std::move(rate.values);
  out.clamped = rate.clamped;
  return out;
}

RateResult rate_function(const AmplitudeSeries& series) {
  constexpr double kFloor = 1e-300;
  const std::size_t nk = series.k.size();
  const std::size_t nt = series.t.size();
  RateResult out;
  out.values.assign(nt, std::numeric_limits<double>::quiet_NaN());
  if (nk < 2) return out;

  std::vector<double> weights(nk);
  for (std::size_t i = 0; i < nk; ++i) {
    const double left = i > 0 ? series.k[i] - series.k[i - 1] : 0.0;
    const double right = i + 1 < nk ? series.k[i + 1] - series.k[i] : 0.0;
    weights[i] = 0.5 * (left + right);
  }
  const double full_range = series.k.back() - series.k.front();

  for (std::size_t it = 0; it < nt; ++it) {
    double sum = 0.0;
    double used = 0.0;
    for (std::size_t ik = 0; ik < nk; ++ik) {
      double e = series.echo[series.index(ik, it)];
      if (std::isnan(e)) continue;
      if (!(e > kFloor)) {
        e = kFloor;
        ++out.clamped;
      }
      sum += weights[ik] * std::log(e);
      used += weights[ik];
    }
    if (used > 0.0) out.values[it] = -(sum * (full_range / used)) / (4.0 * kPi);
  }
  return out;
}

}  // namespace nhdqpt
