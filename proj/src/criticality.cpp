#include "nhdqpt/criticality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "nhdqpt/parallel.hpp"

namespace nhdqpt {

cplx q_factor(cplx argument) {
  if (std::abs(argument - 1.0) < 1e-12 || std::abs(argument + 1.0) < 1e-12)
    throw ExcludedPoint(Exclusion::Pole, "atanh argument at +-1");
  cplx w = std::atanh(argument);
  if (w.imag() <= -kPi / 2) w += cplx(0, kPi);
  return w;
}

cplx q_factor(const ComplexVec3& h0, const ComplexVec3& h1, cplx nk) {
  const ModePair m = make_mode(h0, h1);
  return q_factor(nk * bilinear_dot(m.unit0, m.unit1));
}

cplx q_factor_nonbio(const ComplexVec3& h0, const ComplexVec3& h1, const ParticipationProbs& probs) {
  return q_factor(expectation_p0(make_mode(h0, h1), probs));
}

cplx state_coupling(const ModePair& mode, const ParticipationProbs& probs, Formulation f) {
  if (f == Formulation::Biorthogonal) return effective_nk(probs) * bilinear_dot(mode.unit0, mode.unit1);
  return expectation_p0(mode, probs);
}

std::vector<FisherZero> fisher_zeros(cplx e1, cplx coupling, Formulation f, int n_max, double k) {
  if (n_max < 0) throw std::invalid_argument("fisher_zeros: n_max must be >= 0");
  if (std::abs(e1) == 0.0)
    throw ExcludedPoint(Exclusion::ExceptionalPoint, "fisher_zeros: vanishing postquench energy");
  const cplx q = q_factor(coupling);
  const cplx shift = f == Formulation::Biorthogonal ? -q : q;
  std::vector<FisherZero> out;
  out.reserve(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) {
    const cplx z = (cplx(0, kPi * (n + 0.5)) + shift) / e1;
    out.push_back({n, k, z, f});
  }
  return out;
}

std::vector<FisherZero> fisher_zeros(const ComplexVec3& h0, const ComplexVec3& h1, cplx coupling,
                                     Formulation f, int n_max, double k) {
  return fisher_zeros(make_mode(h0, h1).e1, coupling, f, n_max, k);
}

cplx continued_amplitude(cplx e1, cplx coupling, Formulation f, cplx z) {
  const cplx w = e1 * z;
  const cplx c = f == Formulation::Biorthogonal ? coupling : -coupling;
  return std::cosh(w) + std::sinh(w) * c;
}

namespace {

struct DotSample {
  double dot;
  cplx z;
  cplx e0;
  cplx e1;
};

// dot for branch n at momentum k with explicit band labels.
DotSample sample_dot(const QuenchScenario& s, double k, int n, int b0, int b1) {
  const ComplexVec3 h0 = s.h0_model(k);
  const ComplexVec3 h1 = s.h1_model(k);
  if (!h0.is_finite() || !h1.is_finite())
    throw ExcludedPoint(Exclusion::ExceptionalPoint, "non-finite Hamiltonian coefficients");
  const ModePair mode = make_mode(h0, h1, b0, b1);
  const Formulation f = s.state.formulation;
  const cplx q = q_factor(state_coupling(mode, participation(s.state, k, h0, b0), f));
  const double a = kPi * (n + 0.5);
  const double vh[2] = {mode.e1.real(), mode.e1.imag()};
  const double vs[2] = {q.real(), f == Formulation::Biorthogonal ? q.imag() - a : q.imag() + a};
  const cplx shift = f == Formulation::Biorthogonal ? -q : q;
  return {vs[0] * vh[0] + vs[1] * vh[1], (cplx(0, a) + shift) / mode.e1, mode.e0, mode.e1};
}

std::optional<DotSample> try_sample(const QuenchScenario& s, double k, int n, int b0, int b1) {
  try {
    return sample_dot(s, k, n, b0, b1);
  } catch (const ExcludedPoint&) {
    return std::nullopt;
  }
}

int sign_of(double x) { return (x > 0) - (x < 0); }

double wrap_k(double k) {
  double w = std::remainder(k, 2.0 * kPi);
  // Roots bisected to just past -pi belong to the zone edge at +pi.
  if (w <= -kPi + 1e-9) w += 2.0 * kPi;
  return w;
}

struct Root {
  int n;
  double k;
  double t;
};

constexpr double kZeroDot = 1e-12;
constexpr double kAcceptDot = 1e-8;
constexpr double kBisectTol = 1e-10;

}  // namespace

std::vector<OrthogonalityVectors> orthogonality_flow(const QuenchScenario& scenario, int n,
                                                     int threads) {
  scenario.validate();
  if (n < 0) throw std::invalid_argument("orthogonality_flow: n must be >= 0");
  const auto count = static_cast<std::size_t>(scenario.k_grid.count);
  std::vector<OrthogonalityVectors> out(count);
  const Formulation f = scenario.state.formulation;
  const double a = kPi * (n + 0.5);
  parallel_for(count, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      OrthogonalityVectors& v = out[i];
      v.k = scenario.k_grid.at(static_cast<int>(i));
      v.n = n;
      try {
        const ComplexVec3 h0 = scenario.h0_model(v.k);
        const ModePair mode = make_mode(h0, scenario.h1_model(v.k));
        const cplx q = q_factor(state_coupling(mode, participation(scenario.state, v.k, h0), f));
        v.vs[0] = q.real();
        v.vs[1] = f == Formulation::Biorthogonal ? q.imag() - a : q.imag() + a;
        v.vh[0] = mode.e1.real();
        v.vh[1] = mode.e1.imag();
        v.dot = v.vs[0] * v.vh[0] + v.vs[1] * v.vh[1];
      } catch (const ExcludedPoint&) {
        v.excluded = true;
        v.dot = std::numeric_limits<double>::quiet_NaN();
      }
    }
  });
  return out;
}

CriticalityResult critical_points(const QuenchScenario& scenario, int n_max, int threads) {
  scenario.validate();
  if (n_max < 0) throw std::invalid_argument("critical_points: n_max must be >= 0");
  const KGrid& grid = scenario.k_grid;
  const int count = grid.count;
  const bool periodic = grid.full_period();

  CriticalityResult result;
  std::vector<Root> roots;

  for (int n = 0; n <= n_max; ++n) {
    std::vector<std::optional<DotSample>> base(static_cast<std::size_t>(count));
    parallel_for(base.size(), threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i)
        base[i] = try_sample(scenario, grid.at(static_cast<int>(i)), n, +1, +1);
    });
    if (n == 0)
      result.excluded_k = static_cast<int>(std::count(base.begin(), base.end(), std::nullopt));

    // Continues the labels of `from` to momentum k.
    auto continued = [&](const DotSample& from, double k) -> std::optional<DotSample> {
      const int b0 = continue_branch(from.e0, scenario.h0_model(k));
      const int b1 = continue_branch(from.e1, scenario.h1_model(k));
      return try_sample(scenario, k, n, b0, b1);
    };

    // Interior sign changes.
    std::vector<std::optional<Root>> found(static_cast<std::size_t>(count));
    parallel_for(base.size() - 1, threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        if (!base[i] || !base[i + 1]) continue;
        const DotSample& left = *base[i];
        double lo = grid.at(static_cast<int>(i));
        double hi = grid.at(static_cast<int>(i) + 1);
        const auto right = continued(left, hi);
        if (!right) continue;
        const int s_lo = sign_of(left.dot);
        if (std::abs(left.dot) <= kZeroDot || std::abs(right->dot) <= kZeroDot) continue;
        if (s_lo == sign_of(right->dot)) continue;
        bool broken = false;
        while (hi - lo > kBisectTol) {
          const double mid = 0.5 * (lo + hi);
          const auto m = continued(left, mid);
          if (!m) {
            broken = true;
            break;
          }
          if (sign_of(m->dot) == s_lo) lo = mid; else hi = mid;
        }
        if (broken) continue;
        const double kc = 0.5 * (lo + hi);
        const auto at = continued(left, kc);
        if (!at || std::abs(at->dot) >= kAcceptDot) continue;  // discontinuity
        found[i] = Root{n, wrap_k(kc), at->z.imag()};
      }
    });
    for (const auto& r : found)
      if (r && r->t > 0) roots.push_back(*r);

    // Zeros landing on grid points.
    for (int i = 0; i < count; ++i) {
      if (!base[i] || std::abs(base[i]->dot) > kZeroDot) continue;
      int il = i - 1;
      int ir = i + 1;
      if (periodic) {
        if (i == 0) il = count - 2;
        if (i == count - 1) ir = 1;
      }
      const double k = grid.at(i);
      bool crossing = false;
      if (il >= 0 && ir < count && base[il]) {
        const auto through = continued(*base[il], k);
        // The right neighbour inherits labels carried through this point.
        std::optional<DotSample> right;
        if (through) {
          double kr = grid.at(ir);
          if (periodic && i == count - 1) kr += grid.k_max - grid.k_min;
          right = continued(*through, kr);
        }
        crossing = right && std::abs(base[il]->dot) > kZeroDot && std::abs(right->dot) > kZeroDot &&
                   sign_of(base[il]->dot) != sign_of(right->dot);
      }
      if (crossing) {
        if (base[i]->z.imag() > 0) roots.push_back({n, wrap_k(k), base[i]->z.imag()});
      } else {
        result.grazing.push_back({n, wrap_k(k), base[i]->dot});
      }
    }
  }

  std::sort(roots.begin(), roots.end(), [](const Root& a, const Root& b) {
    return a.n != b.n ? a.n < b.n : a.k < b.k;
  });
  // Group by momentum, merging coincident roots from different branches.
  for (const Root& r : roots) {
    auto it = std::find_if(result.points.begin(), result.points.end(), [&](const CriticalPoint& p) {
      const double d = std::abs(p.k - r.k);
      return std::min(d, 2.0 * kPi - d) < 1e-8;
    });
    if (it == result.points.end()) {
      result.points.push_back({r.k, {}, scenario.state.formulation});
      it = std::prev(result.points.end());
    }
    const bool duplicate = std::any_of(it->times.begin(), it->times.end(),
                                       [&](const CriticalTime& ct) { return ct.n == r.n; });
    if (!duplicate) it->times.push_back({r.n, r.t});
  }
  std::sort(result.points.begin(), result.points.end(),
            [](const CriticalPoint& a, const CriticalPoint& b) { return a.k < b.k; });
  for (auto& p : result.points)
    std::sort(p.times.begin(), p.times.end(),
              [](const CriticalTime& a, const CriticalTime& b) { return a.n < b.n; });
  // Same zero seen at both ends of a periodic grid.
  std::sort(result.grazing.begin(), result.grazing.end(), [](const GrazingZero& a, const GrazingZero& b) {
    return a.n != b.n ? a.n < b.n : a.k < b.k;
  });
  result.grazing.erase(std::unique(result.grazing.begin(), result.grazing.end(),
                                   [](const GrazingZero& a, const GrazingZero& b) {
                                     return a.n == b.n && std::abs(a.k - b.k) < 1e-8;
                                   }),
                       result.grazing.end());
  return result;
}

std::vector<Cusp> detect_cusps(std::span<const double> rate, const TGrid& grid, double threshold) {
  std::vector<Cusp> out;
  const std::size_t m = rate.size();
  if (m < 5) return out;
  const double dt = grid.count >= 2 ? grid.step() : 1.0;

  std::vector<double> d(m, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> finite;
  double scale = 0.0;
  for (double v : rate)
    if (std::isfinite(v)) scale = std::max(scale, std::abs(v));
  for (std::size_t j = 1; j + 1 < m; ++j) {
    d[j] = std::abs(rate[j + 1] - 2.0 * rate[j] + rate[j - 1]);
    if (std::isfinite(d[j])) finite.push_back(d[j]);
  }
  if (finite.empty()) return out;
  const auto mid = finite.begin() + static_cast<std::ptrdiff_t>(finite.size() / 2);
  std::nth_element(finite.begin(), mid, finite.end());
  const double cut = std::max(threshold * *mid, 1e-12 * (1.0 + scale));

  for (std::size_t j = 1; j + 1 < m; ++j) {
    if (!std::isfinite(d[j]) || d[j] <= cut) continue;
    const double left = std::isfinite(d[j - 1]) ? d[j - 1] : 0.0;
    const double right = std::isfinite(d[j + 1]) ? d[j + 1] : 0.0;
    if (d[j] >= left && d[j] > right)
      out.push_back({grid.at(static_cast<int>(j)), d[j] / dt, static_cast<int>(j)});
  }
  return out;
}

}  // namespace nhdqpt
