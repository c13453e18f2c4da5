#pragma once

#include "stochvec/types.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace stochvec {

/// A vector field R^d -> R^d with closed-form value, jacobian and hessian.
///
/// Jacobian convention: entry (alpha, i) = d_i f^alpha. Fields may depend on
/// time; time-independent fields ignore `t`.
class AnalyticField {
 public:
  explicit AnalyticField(int dim);
  virtual ~AnalyticField() = default;

  int dim() const noexcept { return dim_; }
  virtual std::string name() const = 0;

  /// Highest derivative order the field exposes (0, 1 or 2).
  virtual int derivative_order() const { return 2; }

  virtual Vec eval(const Vec& x, double t = 0.0) const = 0;
  virtual Mat jacobian(const Vec& x, double t = 0.0) const = 0;
  virtual Hessian hessian(const Vec& x, double t = 0.0) const = 0;

  Jet jet(const Vec& x, double t = 0.0) const;

  /// Evaluates `count = points.size() / dim` packed points. `values` receives
  /// count*dim entries; `jacobians`, when non-empty, count*dim*dim entries in
  /// row-major (alpha, i) order per point.
  virtual void eval_batch(std::span<const double> points, double t, std::span<double> values,
                          std::span<double> jacobians) const;

 private:
  int dim_;
};

using FieldPtr = std::shared_ptr<const AnalyticField>;

class ZeroField final : public AnalyticField {
 public:
  explicit ZeroField(int dim) : AnalyticField(dim) {}
  std::string name() const override { return "zero"; }
  Vec eval(const Vec&, double = 0.0) const override { return zero_vec(dim()); }
  Mat jacobian(const Vec&, double = 0.0) const override { return zero_mat(dim()); }
  Hessian hessian(const Vec&, double = 0.0) const override { return Hessian::zero(dim()); }
  void eval_batch(std::span<const double> points, double t, std::span<double> values,
                  std::span<double> jacobians) const override;
};

class ConstantField final : public AnalyticField {
 public:
  explicit ConstantField(Vec value);
  std::string name() const override { return "constant"; }
  Vec eval(const Vec&, double = 0.0) const override { return value_; }
  Mat jacobian(const Vec&, double = 0.0) const override { return zero_mat(dim()); }
  Hessian hessian(const Vec&, double = 0.0) const override { return Hessian::zero(dim()); }
  void eval_batch(std::span<const double> points, double t, std::span<double> values,
                  std::span<double> jacobians) const override;
  const Vec& value() const { return value_; }

 private:
  Vec value_;
};

/// f(x) = A x + b.
class LinearField final : public AnalyticField {
 public:
  LinearField(Mat matrix, Vec offset);
  std::string name() const override { return "linear"; }
  Vec eval(const Vec& x, double = 0.0) const override { return matrix_ * x + offset_; }
  Mat jacobian(const Vec&, double = 0.0) const override { return matrix_; }
  Hessian hessian(const Vec&, double = 0.0) const override { return Hessian::zero(dim()); }

 private:
  Mat matrix_;
  Vec offset_;
};

/// One term a * sin(k.x + phase). Divergence free iff a.k = 0.
struct FourierMode {
  Vec amplitude;
  Vec wavevector;
  double phase = 0.0;
};

/// Finite sum of sinusoidal modes. Covers shear modes, Taylor-Green type cells
/// and random band-limited fields.
class FourierField final : public AnalyticField {
 public:
  FourierField(int dim, std::vector<FourierMode> modes, std::string name = "fourier");
  std::string name() const override { return name_; }
  Vec eval(const Vec& x, double = 0.0) const override;
  Mat jacobian(const Vec& x, double = 0.0) const override;
  Hessian hessian(const Vec& x, double = 0.0) const override;
  void eval_batch(std::span<const double> points, double t, std::span<double> values,
                  std::span<double> jacobians) const override;
  const std::vector<FourierMode>& modes() const { return modes_; }

 private:
  std::vector<FourierMode> modes_;
  std::string name_;
};

/// f(x) = direction * exp(-|x - c|^2 / (2 w^2)). Not divergence free in general.
class GaussianField final : public AnalyticField {
 public:
  GaussianField(Vec center, double width, Vec direction);
  std::string name() const override { return "gaussian"; }
  Vec eval(const Vec& x, double = 0.0) const override;
  Mat jacobian(const Vec& x, double = 0.0) const override;
  Hessian hessian(const Vec& x, double = 0.0) const override;

 private:
  Vec center_;
  double width_;
  Vec direction_;
};

/// Divergence-free bump built from psi = amp * exp(-|x - c|^2 / (2 w^2)).
/// d = 2: f = (d_2 psi, -d_1 psi). d = 3: f = grad psi x axis.
class GaussianCurlField final : public AnalyticField {
 public:
  GaussianCurlField(Vec center, double width, double amplitude, Vec axis = Vec());
  std::string name() const override { return "gaussian-curl"; }
  Vec eval(const Vec& x, double = 0.0) const override;
  Mat jacobian(const Vec& x, double = 0.0) const override;
  Hessian hessian(const Vec& x, double = 0.0) const override;

  const Vec& center() const { return center_; }
  double width() const { return width_; }
  double amplitude() const { return amplitude_; }

 private:
  // Maps gradient-like tensors of psi to the field via the fixed linear map R: f = R grad psi.
  Mat rotation_;
  Vec center_;
  double width_;
  double amplitude_;
};

/// Rough rotational drift v(x) = x_perp |x|^(-alpha) chi(|x|), d = 2, with a
/// quintic smooth cutoff chi = 1 for r <= r_in and 0 for r >= r_out.
/// Divergence free for every radial profile. Singular at the origin, where
/// the value is defined as 0.
class SingularVortexField final : public AnalyticField {
 public:
  SingularVortexField(double alpha, double r_in, double r_out);
  std::string name() const override { return "singular-vortex"; }
  Vec eval(const Vec& x, double = 0.0) const override;
  Mat jacobian(const Vec& x, double = 0.0) const override;
  Hessian hessian(const Vec& x, double = 0.0) const override;

  double alpha() const { return alpha_; }

 private:
  // Radial profile g(r) = r^-alpha chi(r) and its first two derivatives.
  std::array<double, 3> profile(double r) const;

  double alpha_;
  double r_in_;
  double r_out_;
};

/// Linear combination sum_i c_i f_i of fields of equal dimension.
class SumField final : public AnalyticField {
 public:
  explicit SumField(std::vector<std::pair<double, FieldPtr>> terms);
  std::string name() const override { return "sum"; }
  int derivative_order() const override;
  Vec eval(const Vec& x, double t = 0.0) const override;
  Mat jacobian(const Vec& x, double t = 0.0) const override;
  Hessian hessian(const Vec& x, double t = 0.0) const override;
  void eval_batch(std::span<const double> points, double t, std::span<double> values,
                  std::span<double> jacobians) const override;

 private:
  std::vector<std::pair<double, FieldPtr>> terms_;
};

/// Shear mode amp * direction * sin(k.x + phase).
FieldPtr make_shear(double amplitude, const Vec& wavevector, const Vec& direction, double phase = 0.0);

/// The 2-d cell (-sin x2, sin x1) scaled by `amplitude`.
FieldPtr make_taylor_green(double amplitude = 1.0);

/// Random band-limited field: every integer wavevector with 1 <= |k|_inf <= kmax
/// gets a normally distributed amplitude scaled by `scale / |k|^decay`. With
/// `divergence_free` the amplitudes are projected orthogonal to k.
FieldPtr make_random_fourier(int dim, int kmax, std::uint64_t seed, bool divergence_free,
                             double scale = 1.0, double decay = 1.0);

/// Divergence of an analytic field at x (trace of the jacobian).
double divergence(const AnalyticField& f, const Vec& x, double t = 0.0);

}  // namespace stochvec
