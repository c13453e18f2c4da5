#pragma once

#include "stochvec/grid.hpp"
#include "stochvec/lie_operator.hpp"
#include "stochvec/noise.hpp"

#include <cstdint>

namespace stochvec {

/// |L B(x) by coefficients - L B(x) by nested brackets| / max(1, |L B(x)|).
double bracket_coefficient_error(const OperatorCoefficients& coeffs, const AnalyticField& B, const Vec& x);

/// |<L B, phi> - <B, L* phi>| / Sum |L B . phi| by box quadrature of the pointwise
/// operators, for a divergence-free Gaussian bump B and a Gaussian phi.
double adjoint_duality_error(const OperatorCoefficients& coeffs, const GridSpec& spec);

/// Largest |interpolation_ratio| over `count` scalar triples (f, g, h) drawn
/// from random band-limited fields; every fourth g is the first component of
/// the singular vortex x_perp |x|^-1/2. Deterministic in `seed`.
double interpolation_max_ratio(const GridSpec& spec, int count, double p, std::uint64_t seed);

/// Divergence-free random fields sampled on the grid for coercivity probes.
std::vector<GridField> coercivity_samples(const GridSpec& spec, int count, std::uint64_t seed);

struct OperatorReport {
  double nu_est = 0.0;
  double C_est = 0.0;
  double bracket_vs_coeff_max_err = 0.0;
  double adjoint_duality_err = 0.0;
  double interp_max_ratio = 0.0;
};

OperatorReport verify_operator(const NoiseBasis& basis, const GridSpec& spec, std::uint64_t seed);

}  // namespace stochvec
