#include "stochvec/verify.hpp"

#include "stochvec/errors.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

namespace stochvec {

namespace {

GridField first_component(const AnalyticField& f, const GridSpec& spec) {
  const GridField v = sample(f, spec);
  GridField s = GridField::scalar(spec);
  s.set_component(0, v.component(0));
  return s;
}

}  // namespace

double bracket_coefficient_error(const OperatorCoefficients& coeffs, const AnalyticField& B, const Vec& x) {
  const Vec a = apply_L_by_coefficients(coeffs, B, x);
  const Vec b = apply_L_by_brackets(coeffs.basis(), B, x);
  return (a - b).norm() / std::max(1.0, b.norm());
}

double adjoint_duality_error(const OperatorCoefficients& coeffs, const GridSpec& spec) {
  const int d = spec.dim;
  Vec cb = zero_vec(d), cp = zero_vec(d), dir = Vec::Ones(d);
  cb[0] = 0.2;
  cb[1] = -0.3;
  cp[0] = -0.1;
  cp[1] = 0.3;
  dir[0] = 0.3;
  const GaussianCurlField B(cb, 0.55, 1.0, d == 3 ? Vec(Vec::Unit(3, 2)) : Vec());
  const GaussianField phi(cp, 0.5, dir);
  double lhs = 0, rhs = 0, scale = 0;
  for (std::size_t k = 0; k < spec.nodes(); ++k) {
    const Vec x = spec.node(k);
    const Vec lb = apply_L_by_coefficients(coeffs, B, x), f = phi.eval(x);
    const Vec ls = apply_L_adjoint(coeffs, phi, x), b = B.eval(x);
    lhs += lb.dot(f);
    rhs += b.dot(ls);
    scale += std::abs(lb.dot(f));
  }
  if (!(scale > 0)) throw DegenerateSample("adjoint probe has zero pairing");
  return std::abs(lhs - rhs) / scale;
}

double interpolation_max_ratio(const GridSpec& spec, int count, double p, std::uint64_t seed) {
  if (spec.dim != 2) throw DimensionMismatch("interpolation probe is two-dimensional");
  const GridField singular = first_component(SingularVortexField(0.5, 1.0, 2.0), spec);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> axis(0, 1);
  double worst = 0;
  for (int r = 0; r < count; ++r) {
    const std::uint64_t s = seed + 1000 * static_cast<std::uint64_t>(r);
    const GridField f = first_component(*make_random_fourier(2, 3, s + 1, false), spec);
    const GridField h = first_component(*make_random_fourier(2, 3, s + 2, false), spec);
    const GridField g = r % 4 == 0 ? singular : first_component(*make_random_fourier(2, 3, s + 3, false), spec);
    worst = std::max(worst, std::abs(interpolation_ratio(f, g, h, p, axis(rng))));
  }
  return worst;
}

std::vector<GridField> coercivity_samples(const GridSpec& spec, int count, std::uint64_t seed) {
  std::vector<GridField> out;
  for (int s = 0; s < count; ++s) out.push_back(sample(*make_random_fourier(spec.dim, 4, seed + s, true), spec));
  return out;
}

OperatorReport verify_operator(const NoiseBasis& basis, const GridSpec& spec, std::uint64_t seed) {
  const int d = spec.dim;
  const OperatorCoefficients coeffs(basis);
  OperatorReport r;
  r.nu_est = check_ellipticity(basis, lattice_samples(d, spec.L, d == 2 ? 32 : 12)).nu_est;
  r.C_est = coercivity_check(sample_coefficients(coeffs, spec), r.nu_est, coercivity_samples(spec, 6, seed)).C_est;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-spec.L, spec.L);
  for (int t = 0; t < 100; ++t) {
    const FieldPtr B = make_random_fourier(d, 2, seed + 17 * t, t % 2 == 0);
    Vec x(d);
    for (int i = 0; i < d; ++i) x[i] = u(rng);
    r.bracket_vs_coeff_max_err = std::max(r.bracket_vs_coeff_max_err, bracket_coefficient_error(coeffs, *B, x));
  }
  r.adjoint_duality_err = adjoint_duality_error(coeffs, spec);
  if (d == 2) r.interp_max_ratio = interpolation_max_ratio(spec, 20, 3.0, seed);
  return r;
}

}  // namespace stochvec
