#include "nhdqpt/nhband.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace nhdqpt {

bool ComplexVec3::is_finite() const {
  for (const cplx& c : {x, y, z}) {
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
  }
  return true;
}

double ComplexVec3::max_imag() const {
  return std::max({std::abs(x.imag()), std::abs(y.imag()), std::abs(z.imag())});
}

const char* to_string(Exclusion reason) {
  switch (reason) {
    case Exclusion::ExceptionalPoint: return "exceptional point";
    case Exclusion::Pole: return "atanh pole";
    case Exclusion::ZeroWeight: return "zero total weight";
    case Exclusion::Gapless: return "gap closing";
  }
  return "unknown";
}

AbcdgfForm AbcdgfForm::from_vector(const ComplexVec3& h) {
  AbcdgfForm m;
  m.a = h.x.real() + h.y.imag();
  m.b = h.x.imag() - h.y.real();
  m.c = h.x.real() - h.y.imag();
  m.d = h.x.imag() + h.y.real();
  m.g = h.z.real();
  m.f = h.z.imag();
  return m;
}

ComplexVec3 AbcdgfForm::to_vector() const {
  return {cplx(0.5 * (a + c), 0.5 * (b + d)), cplx(0.5 * (d - b), 0.5 * (a - c)),
          cplx(g, f)};
}

Mat2 bloch_matrix(const ComplexVec3& h) {
  const cplx i(0, 1);
  Mat2 m;
  m << h.z, h.x - i * h.y, h.x + i * h.y, -h.z;
  return m;
}

double max_norm(const ComplexVec3& h) {
  const cplx i(0, 1);
  return std::max({std::abs(h.z), std::abs(h.x - i * h.y), std::abs(h.x + i * h.y)});
}

double ep_tolerance(const ComplexVec3& h) { return 1e-9 * max_norm(h); }

bool discriminant_vanishes(const ComplexVec3& h, double scale) {
  return scale == 0.0 || std::abs(bilinear_dot(h, h)) <= 1e-9 * scale * scale;
}

cplx principal_sqrt(cplx z) {
  cplx r = std::sqrt(z);
  if (r.real() == 0.0 && r.imag() < 0.0) r = -r;
  return r;
}

cplx band_energy(const ComplexVec3& h, int branch) {
  const cplx e = principal_sqrt(bilinear_dot(h, h));
  return branch >= 0 ? e : -e;
}

namespace {

struct BandVectors {
  Ket2 right;
  Bra2 left;
  double denominator_modulus;
};

BandVectors band_vectors(cplx energy, cplx ab, cplx cd, cplx g) {
  const cplx minus_g = energy - g;
  const cplx plus_g = energy + g;
  Ket2 right;
  Bra2 left;
  cplx denom;
  // A tiny (e - g) means the matrix is nearly diagonal with this band on the
  // upper component; the other column of the adjugate stays well conditioned.
  if (std::abs(minus_g) >= 1e-3 * std::abs(plus_g)) {
    right << ab, minus_g;
    left << cd, minus_g;
    denom = 2.0 * energy * minus_g;
  } else {
    right << plus_g, cd;
    left << plus_g, ab;
    denom = 2.0 * energy * plus_g;
  }
  const cplx norm = principal_sqrt(denom);
  if (norm != cplx(0.0)) {
    right /= norm;
    left /= norm;
  }
  return {right, left, std::abs(denom)};
}

}  // namespace

BiorthoEigensystem eigensystem_2x2(const ComplexVec3& h, int branch) {
  const cplx i(0, 1);
  const cplx ab = h.x - i * h.y;
  const cplx cd = h.x + i * h.y;
  const cplx g = h.z;

  BiorthoEigensystem es;
  es.e_plus = branch >= 0 ? principal_sqrt(ab * cd + g * g)
                          : -principal_sqrt(ab * cd + g * g);
  es.e_minus = -es.e_plus;

  const BandVectors plus = band_vectors(es.e_plus, ab, cd, g);
  const BandVectors minus = band_vectors(es.e_minus, ab, cd, g);
  es.right_plus = plus.right;
  es.left_plus = plus.left;
  es.right_minus = minus.right;
  es.left_minus = minus.left;

  const double tol = ep_tolerance(h);
  es.near_ep = std::abs(es.e_plus) < tol || plus.denominator_modulus < tol * tol ||
               minus.denominator_modulus < tol * tol || tol == 0.0;
  return es;
}

SelfNormBasis self_normalized(const BiorthoEigensystem& es) {
  return {es.right_plus / es.right_plus.norm(), es.right_minus / es.right_minus.norm()};
}

TwoBandHamiltonian::TwoBandHamiltonian(Coefficients coefficients, ModelFamily family,
                                       std::optional<SshParams> ssh)
    : coefficients_(std::move(coefficients)), family_(family), ssh_(ssh) {
  if (!coefficients_) throw std::invalid_argument("TwoBandHamiltonian: empty coefficient function");
}

TwoBandHamiltonian make_ssh(double t1, double t2, double gamma) {
  auto f = [t1, t2, gamma](double k) {
    return ComplexVec3{cplx(t1 + t2 * std::cos(k), 0.0), cplx(t2 * std::sin(k), gamma),
                       cplx(0.0, 0.0)};
  };
  return TwoBandHamiltonian(f, ModelFamily::Ssh, SshParams{t1, t2, gamma});
}

TwoBandHamiltonian make_tabulated(std::vector<double> ks, std::vector<ComplexVec3> samples) {
  if (ks.size() < 2 || ks.size() != samples.size())
    throw std::invalid_argument("make_tabulated: need >= 2 matching samples");
  if (!std::is_sorted(ks.begin(), ks.end()) ||
      std::adjacent_find(ks.begin(), ks.end()) != ks.end())
    throw std::invalid_argument("make_tabulated: momenta must be strictly increasing");
  if (ks.back() - ks.front() >= 2.0 * kPi)
    throw std::invalid_argument("make_tabulated: samples must span less than one period");

  auto f = [ks = std::move(ks), samples = std::move(samples)](double k) {
    const double k0 = ks.front();
    double q = std::fmod(k - k0, 2.0 * kPi);
    if (q < 0) q += 2.0 * kPi;
    q += k0;
    const auto it = std::upper_bound(ks.begin(), ks.end(), q);
    const std::size_t hi = it == ks.end() ? 0 : static_cast<std::size_t>(it - ks.begin());
    const std::size_t lo = (hi == 0 ? ks.size() : hi) - 1;
    double k_lo = ks[lo];
    double k_hi = hi == 0 ? ks.front() + 2.0 * kPi : ks[hi];
    const double w = (q - k_lo) / (k_hi - k_lo);
    const ComplexVec3& a = samples[lo];
    const ComplexVec3& b = samples[hi];
    return ComplexVec3{a.x + w * (b.x - a.x), a.y + w * (b.y - a.y), a.z + w * (b.z - a.z)};
  };
  return TwoBandHamiltonian(f, ModelFamily::Tabulated);
}

bool is_periodic(const TwoBandHamiltonian& model, double tol) {
  const ComplexVec3 a = model(-kPi);
  const ComplexVec3 b = model(kPi);
  return std::abs(a.x - b.x) <= tol && std::abs(a.y - b.y) <= tol && std::abs(a.z - b.z) <= tol;
}

EffectiveBloch lindblad_effective_bloch(double t1, double t2, double gamma, double phi) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("lindblad_effective_bloch: gamma must be >= 0");
  const cplx i(0, 1);
  // -i L^dag L contributes -i gamma e^{+i phi} to the A<-B hopping and
  // -i gamma e^{-i phi} to B<-A, plus -i gamma on both sublattices.
  const cplx upper_shift = -i * gamma * std::exp(i * phi);
  const cplx lower_shift = -i * gamma * std::exp(-i * phi);
  auto f = [=](double k) {
    const cplx upper = t1 + upper_shift + t2 * std::exp(-i * k);
    const cplx lower = t1 + lower_shift + t2 * std::exp(i * k);
    return ComplexVec3{0.5 * (upper + lower), (lower - upper) / (2.0 * i), cplx(0.0)};
  };
  return {TwoBandHamiltonian(f, ModelFamily::Custom), -i * gamma};
}

}  // namespace nhdqpt
