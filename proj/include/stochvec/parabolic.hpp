#pragma once

#include "stochvec/control.hpp"
#include "stochvec/grid.hpp"
#include "stochvec/lie_operator.hpp"
#include "stochvec/noise.hpp"

#include <span>
#include <vector>

namespace stochvec {

/// Which transport field the expected-value equation uses:
/// Plus: dV/dt + [v + h, V] = L V, Minus: dV/dt + [v - h, V] = L V.
enum class HSign { Plus, Minus };

/// Values w[node*d + alpha] and jacobians Dw[node*d*d + alpha*d + i] of a
/// transport field sampled at the nodes.
struct TransportField {
  std::vector<double> w;
  std::vector<double> Dw;
  double max_speed() const;
};

/// Samples the noise modes once and assembles v(t) + s * Sum_k f_k sigma_k
/// for any control values f. A null v is the zero field.
class TransportAssembler {
 public:
  TransportAssembler(const GridSpec& spec, FieldPtr v, const NoiseBasis& basis);
  TransportField assemble(std::span<const double> f, double s, double t = 0.0) const;
  const GridSpec& spec() const { return spec_; }

 private:
  GridSpec spec_;
  FieldPtr v_;
  std::vector<double> points_;
  std::vector<TransportField> modes_;
};

/// [w, V] on the grid: (w.grad) V with central differences minus V.grad w
/// with the sampled jacobian of w.
GridField transport_bracket(const TransportField& w, const GridField& V);

struct DiagnosticRow {
  double t = 0.0;
  double l2_sq = 0.0;
  double h1_semi_sq = 0.0;
};

struct ParabolicState {
  GridField U;
  double t = 0.0;
  double dt_pde = 0.0;
  int halvings = 0;
  std::vector<DiagnosticRow> history;
  /// U at the first accepted time at or after each requested checkpoint
  std::vector<double> snapshot_times;
  std::vector<GridField> snapshots;
};

struct ParabolicOptions {
  HSign h_sign = HSign::Plus;
  double cfl = 0.9;
  int max_halvings = 8;
  /// record a diagnostic row after every accepted step
  bool record_history = true;
};

/// Explicit SSP-RK2 solver for dV/dt = L V - [v +- h, V] with f piecewise
/// constant on a grid of spacing dt_grid. Each grid interval is split into
/// equal substeps below the CFL bound min(dx^2 / (2 d max|a|), dx / max|w|) * cfl.
class VSolver {
 public:
  VSolver(const GridSpec& spec, const OperatorCoefficients& coeffs, FieldPtr v, ControlFunction f, double dt_grid,
          ParabolicOptions options = {});

  const GridCoefficients& coefficients() const { return gc_; }
  TransportField transport(int interval) const;
  GridField rhs(const GridField& V, const TransportField& w) const;
  /// One RK2 step of size dt within grid interval `interval`.
  void step(ParabolicState& s, double dt, int interval) const;
  double stable_dt(int interval) const;
  ParabolicState solve(const GridField& V0, double T, const std::vector<double>& checkpoints = {}) const;

 private:
  GridSpec spec_;
  GridCoefficients gc_;
  TransportAssembler transport_;
  ControlFunction f_;
  int K_;
  double dt_grid_;
  ParabolicOptions options_;
};

/// Coefficients of the second-moment system at one point (arrays sized for d <= 3).
struct MomentCoefficients {
  int dim = 2;
  double Q[3][3] = {};
  /// theta^m = -1/2 Sum_k sigma_k . grad sigma_k^m
  double theta[3] = {};
  /// theta_i^alpha (component m) = -Sum_k sigma_k^m d_i sigma_k^alpha, stored [i][alpha][m]
  double theta_i[3][3][3] = {};
  /// eta_i^alpha = 1/2 Sum_k (sigma_k.grad) d_i sigma_k^alpha + 1/2 Sum_k Sum_j d_i sigma_k^j d_j sigma_k^alpha, [i][alpha]
  double eta_i[3][3] = {};
  /// kappa_i^alpha = Sum_k (sigma_k.grad) d_i sigma_k^alpha, [i][alpha]
  double kappa[3][3] = {};
  /// eta_{ij}^{alpha beta} = Sum_k d_j sigma_k^beta d_i sigma_k^alpha, [i][j][alpha][beta]
  double eta_ij[3][3][3][3] = {};
};

MomentCoefficients moment_coefficients(const NoiseBasis& basis, const Vec& x);

/// Number of independent components of a symmetric d x d tensor.
inline int sym_count(int d) { return d * (d + 1) / 2; }
/// Storage slot of u_{ab}: (11,12,22) for d = 2, (11,12,13,22,23,33) for d = 3.
int sym_index(int d, int a, int b);

/// Pointwise right-hand side of the moment system
///   du_ab/dt = 1/2 Q^ij d_i d_j u_ab - (theta + v).grad u_ab
///              + Sum_i (theta_i^a . grad u_bi + theta_i^b . grad u_ai)
///              + Sum_i ((eta_i^a - kappa_i^a) u_bi + (eta_i^b - kappa_i^b) u_ai)
///              + Sum_ij eta_ij^ab u_ij + Sum_i (u_ib d_i v^a + u_ai d_i v^b).
/// u[sym], du[sym*d + i], ddu[(sym*d + i)*d + j]; v[d], Dv[a*d + i]; out[sym].
void moment_rhs_kernel(const MomentCoefficients& mc, const double* v, const double* Dv, const double* u,
                       const double* du, const double* ddu, double* out);

/// Explicit SSP-RK2 solver for the symmetric second-moment system. v is
/// sampled once at t = 0.
class MomentSolver {
 public:
  MomentSolver(const GridSpec& spec, const NoiseBasis& basis, FieldPtr v, double dt_grid, ParabolicOptions options = {});

  GridField rhs(const GridField& U) const;
  void step(ParabolicState& s, double dt) const;
  double stable_dt() const;
  ParabolicState solve(const GridField& U0, double T, const std::vector<double>& checkpoints = {}) const;

 private:
  GridSpec spec_;
  std::vector<MomentCoefficients> mc_;
  TransportField v_;
  double max_a_ = 0.0;
  double dt_grid_;
  ParabolicOptions options_;
};

/// Symmetric moment field B (x) B from a vector field.
GridField outer_moments(const GridField& B);

struct EnergyDiagnostics {
  double sup_l2_sq = 0.0;
  double int_w12_sq = 0.0;
};

/// sup_t ||V||^2 and the trapezoid integral of ||V||^2 + ||DV||^2 over the history.
EnergyDiagnostics energy_diagnostics(const std::vector<DiagnosticRow>& history);

/// a(t, f, g) = Sum Int a_ij d_j f^a d_i g^a + Sum Int d_i a_ij d_j f^a g^a
///            - Sum Int b_i^{ab} d_i f^b g^a - Sum Int c^{ab} f^b g^a
///            + Int ((w.grad) f) . g - Int ((f.grad) w) . g
/// with central differences and box quadrature; w = v + h.
double bilinear_form(const GridCoefficients& gc, const GridField& f, const GridField& g, const TransportField& w);

}  // namespace stochvec
