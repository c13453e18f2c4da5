#pragma once

#include "stochvec/analytic_field.hpp"
#include "stochvec/grid.hpp"
#include "stochvec/lie_operator.hpp"
#include "stochvec/noise.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace stochvec {

/// Particle positions and (optionally) Jacobians, one block per particle.
/// jacobians[p*d*d + alpha*d + i] = d x^alpha / d x0^i.
struct FlowSample {
  int dim = 2;
  std::size_t path_index = 0;
  int step = 0;
  std::vector<double> positions;
  std::vector<double> jacobians;

  std::size_t count() const { return positions.size() / dim; }
  Vec position(std::size_t p) const;
  Mat jacobian(std::size_t p) const;
  /// max over particles of |det J - 1|
  double max_det_deviation() const;
};

/// Stratonovich characteristics dX = v(t, X) dt + Sum_k sigma_k(X) o dW^k on
/// the periodic box [-L, L)^d, integrated by Heun's predictor-corrector.
class Characteristics {
 public:
  /// `drift` may be null for v = 0.
  Characteristics(FieldPtr drift, NoiseBasis basis, double L);

  int dim() const { return basis_.dim(); }
  double L() const { return L_; }
  const NoiseBasis& basis() const { return basis_; }
  const FieldPtr& drift() const { return drift_; }

  FlowSample start(std::span<const double> x0, bool with_jacobian) const;

  /// Advances from step `s.step` to step `to` along the path. The jacobian
  /// update is the exact derivative of the Heun map.
  void integrate_forward(FlowSample& s, const BrownianPath& path, int to) const;

  /// Inverse flow Psi_t for t = steps * dt: the time-reversed equation driven
  /// by the same increments in reverse order with negated signs.
  /// Jacobians, if present, are D Psi_t.
  void integrate_inverse(FlowSample& s, const BrownianPath& path, int steps) const;

 private:
  void heun_step(FlowSample& s, double t0, double t1, double drift_scale, std::span<const double> dW) const;
  void increment(std::span<const double> points, double t, double drift_scale, std::span<const double> dW,
                 std::vector<double>& F, std::vector<double>* M) const;

  FieldPtr drift_;
  NoiseBasis basis_;
  double L_;
};

enum class JacobianMode {
  /// J = D Phi_t(y) by forward re-integration from y = Psi_t(x)
  ForwardReintegration,
  /// J = (D Psi_t(x))^-1 from the inverse pass
  InverseFlow,
};

struct FlowOptions {
  double tol_inv = 1e-2;
  /// field rejected if more than this fraction of checked nodes fail
  double max_fail_fraction = 1e-3;
  JacobianMode jacobian = JacobianMode::ForwardReintegration;
  /// round-trip check on every check_stride-th node (0 disables; only
  /// meaningful with InverseFlow, ForwardReintegration checks every node)
  std::size_t check_stride = 1;
  int jobs = 0;
};

struct SpdeSample {
  GridField B;
  double t = 0.0;
  std::size_t path_index = 0;
  double worst_residual = 0.0;
  std::size_t checked_nodes = 0;
  std::size_t failed_nodes = 0;
  double max_det_deviation = 0.0;
  /// max over nodes of the largest singular value of J
  double max_jacobian_norm = 0.0;
};

/// Periodic distance between two points of the box.
double periodic_distance(std::span<const double> a, std::span<const double> b, double L);

/// B(t, x) = J B0(y), y = Psi_t(x), t = steps * dt, at every node of `spec`.
SpdeSample solve_spde_sample(const AnalyticField& B0, const Characteristics& flow, const BrownianPath& path, int steps,
                             const GridSpec& spec, const FlowOptions& options = {});

/// A_w phi = (w.grad) phi + (Dw)^T phi, so that <[w, B], phi> = -<B, A_w phi>
/// for divergence-free w. Exposes first derivatives.
class TransportAdjointField final : public AnalyticField {
 public:
  TransportAdjointField(FieldPtr w, FieldPtr phi);
  std::string name() const override { return "transport-adjoint"; }
  int derivative_order() const override { return 1; }
  Vec eval(const Vec& x, double t = 0.0) const override;
  Mat jacobian(const Vec& x, double t = 0.0) const override;
  Hessian hessian(const Vec& x, double t = 0.0) const override;

 private:
  FieldPtr w_, phi_;
};

/// Residual of the weak Ito identity
///   <B(t),phi> - <B0,phi> - Int <B, L*phi + A_v phi> ds - Sum_k Int <B, A_k phi> dW^k
/// along one path. `snapshots[j]` is B at t_j = j * dt, j = 0..N. Drift
/// integrals use the trapezoid rule; the stochastic integrals use the left
/// point plus the second-order iterated-integral correction with the same
/// increments. Returns one residual per time point (first entry 0).
std::vector<double> weak_form_residual(const std::vector<GridField>& snapshots, const BrownianPath& path,
                                       const FieldPtr& phi, const FieldPtr& drift, const OperatorCoefficients& coeffs);

}  // namespace stochvec
