#pragma once

#include "stochvec/analytic_field.hpp"
#include "stochvec/grid.hpp"

namespace stochvec {

/// Periodic cubic B-spline interpolant of every component of a grid field.
/// Reproduces node values exactly; C^2 between nodes.
class PeriodicSpline {
 public:
  explicit PeriodicSpline(const GridField& f);

  const GridSpec& spec() const { return coeffs_.spec(); }
  int ncomp() const { return coeffs_.ncomp(); }

  /// value[ncomp]; jac[ncomp * d] (row-major (comp, axis)) if non-null;
  /// hess[ncomp * d * d] if non-null.
  void evaluate(const double* x, double* value, double* jac = nullptr, double* hess = nullptr) const;

 private:
  GridField coeffs_;
};

/// A grid field seen as an AnalyticField through its spline interpolant.
class InterpolatedField final : public AnalyticField {
 public:
  explicit InterpolatedField(const GridField& f, std::string name = "interpolated");
  std::string name() const override { return name_; }
  Vec eval(const Vec& x, double = 0.0) const override;
  Mat jacobian(const Vec& x, double = 0.0) const override;
  Hessian hessian(const Vec& x, double = 0.0) const override;
  void eval_batch(std::span<const double> points, double t, std::span<double> values,
                  std::span<double> jacobians) const override;

 private:
  PeriodicSpline spline_;
  std::string name_;
};

}  // namespace stochvec
