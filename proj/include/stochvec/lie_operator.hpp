#pragma once

#include "stochvec/analytic_field.hpp"
#include "stochvec/grid.hpp"
#include "stochvec/noise.hpp"

#include <array>
#include <vector>

namespace stochvec {

/// [A, B](x) = (A.grad)B - (B.grad)A evaluated at one point.
Vec bracket_at(const AnalyticField& A, const AnalyticField& B, const Vec& x, double t = 0.0);

/// The bracket of two analytic fields as a field with value and jacobian.
/// Exposes first derivatives only.
class LieBracketField final : public AnalyticField {
 public:
  LieBracketField(FieldPtr A, FieldPtr B);
  std::string name() const override { return "bracket"; }
  int derivative_order() const override { return 1; }
  Vec eval(const Vec& x, double t = 0.0) const override;
  Mat jacobian(const Vec& x, double t = 0.0) const override;
  Hessian hessian(const Vec& x, double t = 0.0) const override;

 private:
  FieldPtr A_, B_;
};

FieldPtr lie_bracket(FieldPtr A, FieldPtr B);

/// (1/2) Sum_k [sigma_k, [sigma_k, B]](x) by direct nesting.
Vec apply_L_by_brackets(const NoiseBasis& basis, const AnalyticField& B, const Vec& x);

/// Coefficients of L at one point: a(i, j); b[i](alpha, beta); c(alpha, beta).
struct PointCoefficients {
  Mat a;
  std::array<Mat, kMaxDim> b;
  Mat c;
};

/// Spatial derivatives of a and b at one point:
/// da[m](i, j) = d_m a_ij, dda[m][n](i, j) = d_m d_n a_ij, db[m][i](alpha, beta) = d_m b_i^{alpha beta}.
struct PointCoefficientDerivatives {
  std::array<Mat, kMaxDim> da;
  std::array<std::array<Mat, kMaxDim>, kMaxDim> dda;
  std::array<std::array<Mat, kMaxDim>, kMaxDim> db;
};

/// L B = Sum a_ij d_i d_j B + Sum b_i d_i B + c B with coefficients built from Q:
///   a_ij = Q^{ij}(x,x) / 2
///   b_i^{ab} = (1/2) Sum_g d2_g Q^{gi} delta_ab - d2_b Q^{ia}
///   c^{ab} = (1/2) Sum_g d1_b d2_g Q^{ga} - (1/2) Sum_g d2_g d2_b Q^{ga}
class OperatorCoefficients {
 public:
  explicit OperatorCoefficients(NoiseBasis basis);

  const NoiseBasis& basis() const { return basis_; }
  int dim() const { return basis_.dim(); }
  PointCoefficients at(const Vec& x) const;
  PointCoefficientDerivatives derivatives_at(const Vec& x) const;

 private:
  NoiseBasis basis_;
};

OperatorCoefficients assemble_coefficients(const NoiseBasis& basis);

Vec apply_L_by_coefficients(const PointCoefficients& coeffs, const Jet& B);
Vec apply_L_by_coefficients(const OperatorCoefficients& coeffs, const AnalyticField& B, const Vec& x);

/// Formal adjoint with respect to the L^2 pairing of vector fields:
/// (L* phi)^b = Sum d_i d_j (a_ij phi^b) - Sum_{i,a} d_i (b_i^{ab} phi^a) + Sum_a c^{ab} phi^a.
Vec apply_L_adjoint(const OperatorCoefficients& coeffs, const AnalyticField& phi, const Vec& x);

// --- grid realizations -----------------------------------------------------

/// Coefficients sampled at the nodes of a grid.
/// a[node*d*d + i*d + j], b[node*d*d*d + (i*d + alpha)*d + beta], c[node*d*d + alpha*d + beta].
struct GridCoefficients {
  GridSpec spec;
  std::vector<double> a, b, c;
  /// max over nodes of the largest eigenvalue of a
  double max_a = 0.0;
  /// max over nodes of |d_i a_ij| summed over i (per j), used by the bilinear form
  std::vector<double> div_a;  // div_a[node*d + j] = Sum_i d_i a_ij
};

GridCoefficients sample_coefficients(const OperatorCoefficients& coeffs, const GridSpec& spec);

/// L B on a grid: central differences, compact stencil for d_i^2.
GridField apply_L(const GridCoefficients& coeffs, const GridField& B);

struct CoercivityResult {
  /// smallest C >= 0 with -<LB,B> >= (nu/2)||DB||^2 - C||B||^2 over the sample
  double C_est = 0.0;
  /// min over samples of (-<LB,B> - (nu/2)||DB||^2) / ||B||^2
  double margin = 0.0;
};

CoercivityResult coercivity_check(const GridCoefficients& coeffs, double nu, const std::vector<GridField>& fields);

/// Int f g d_axis h / (||g||_p ||f||_{W^{1,2}} ||h||_{W^{1,2}}) for scalar grid fields.
double interpolation_ratio(const GridField& f, const GridField& g, const GridField& h, double p, int axis = 0);

}  // namespace stochvec
