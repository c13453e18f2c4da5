#include "stochvec/parabolic.hpp"

#include "stochvec/errors.hpp"
#include "stochvec/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace stochvec {

namespace {

TransportField zero_transport(const GridSpec& spec) {
  const int d = spec.dim;
  TransportField w;
  w.w.assign(spec.nodes() * d, 0.0);
  w.Dw.assign(spec.nodes() * d * d, 0.0);
  return w;
}

TransportField sample_transport(const AnalyticField& f, const std::vector<double>& points, const GridSpec& spec,
                                double t) {
  TransportField w = zero_transport(spec);
  const int d = spec.dim;
  const std::size_t N = spec.nodes();
  parallel_for(N, [&](std::size_t begin, std::size_t end) {
    const std::span<const double> pts(points.data() + begin * d, (end - begin) * d);
    f.eval_batch(pts, t, std::span<double>(w.w.data() + begin * d, (end - begin) * d),
                 std::span<double>(w.Dw.data() + begin * d * d, (end - begin) * d * d));
  });
  return w;
}

struct Derivatives {
  std::vector<std::vector<double>> first;   // [comp * d + i]
  std::vector<std::vector<double>> second;  // [(comp * d + i) * d + j]
};

Derivatives derivatives(const GridField& U, bool with_second) {
  const GridSpec& spec = U.spec();
  const int d = spec.dim;
  const int m = U.ncomp();
  Derivatives D;
  D.first.resize(m * d);
  if (with_second) D.second.resize(m * d * d);
  for (int c = 0; c < m; ++c) {
    const auto comp = U.component(c);
    for (int i = 0; i < d; ++i) D.first[c * d + i] = diff1(spec, comp, i);
    if (!with_second) continue;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        D.second[(c * d + i) * d + j] = diff2(spec, comp, i, j);
        if (j != i) D.second[(c * d + j) * d + i] = D.second[(c * d + i) * d + j];
      }
  }
  return D;
}

template <class Step, class StableDt>
ParabolicState integrate(const GridField& U0, double T, double dt_grid, const ParabolicOptions& opt,
                         std::vector<double> checkpoints, Step step, StableDt stable_dt) {
  if (!(T >= 0) || !std::isfinite(T)) throw InvalidConfig("final time must be finite and non-negative");
  if (!(dt_grid > 0)) throw InvalidConfig("grid step must be positive");
  if (!(opt.cfl > 0) || opt.cfl > 1) throw InvalidConfig("cfl factor must lie in (0, 1]");
  ParabolicState s;
  s.U = U0;
  auto record = [&] {
    if (opt.record_history) s.history.push_back({s.t, l2_norm_sq(s.U), grad_norm_sq(s.U)});
  };
  std::sort(checkpoints.begin(), checkpoints.end());
  std::size_t next = 0;
  auto snap = [&] {
    while (next < checkpoints.size() && s.t >= checkpoints[next] - 1e-12) {
      s.snapshot_times.push_back(s.t);
      s.snapshots.push_back(s.U);
      ++next;
    }
  };
  record();
  snap();
  const int intervals = static_cast<int>(std::ceil(T / dt_grid - 1e-9));
  for (int j = 0; j < intervals; ++j) {
    const double t0 = j * dt_grid;
    const double len = std::min(dt_grid, T - t0);
    if (len <= 0) break;
    const double bound = stable_dt(j);
    long substeps = std::max<long>(1, static_cast<long>(std::ceil(len / bound - 1e-12)));
    const GridField backup = s.U;
    const std::size_t history_size = s.history.size();
    const std::size_t snapshot_count = s.snapshots.size();
    for (int attempt = 0;; ++attempt) {
      const double dt = len / substeps;
      bool ok = true;
      for (long q = 0; q < substeps; ++q) {
        s.t = t0 + q * dt;
        step(s.U, s.t, dt, j);
        s.t = t0 + (q + 1) * dt;
        if (!s.U.all_finite()) {
          ok = false;
          break;
        }
        record();
        snap();
      }
      if (ok) {
        s.dt_pde = dt;
        break;
      }
      if (attempt >= opt.max_halvings)
        throw StepRejected("non-finite solution after " + std::to_string(attempt) + " step halvings at t = " +
                           std::to_string(t0));
      s.U = backup;
      s.history.resize(history_size);
      s.snapshots.resize(snapshot_count);
      s.snapshot_times.resize(snapshot_count);
      next = snapshot_count;
      substeps *= 2;
      ++s.halvings;
    }
    s.t = t0 + len;
  }
  return s;
}

template <class Rhs>
void ssp_rk2(GridField& U, double dt, Rhs rhs) {
  GridField U1 = U;
  U1.axpy(dt, rhs(U));
  GridField U2 = U1;
  U2.axpy(dt, rhs(U1));
  U += U2;
  U *= 0.5;
}

double largest_eigenvalue(const double* a, int d) {
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = 0.5 * (a[i * d + j] + a[j * d + i]);
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
}

double cfl_bound(const GridSpec& spec, double max_a, double max_speed, double cfl) {
  const double dx = spec.dx();
  double bound = std::numeric_limits<double>::infinity();
  if (max_a > 0) bound = std::min(bound, dx * dx / (2 * spec.dim * max_a));
  if (max_speed > 0) bound = std::min(bound, dx / max_speed);
  return cfl * bound;
}

}  // namespace

double TransportField::max_speed() const {
  if (w.empty()) return 0.0;
  const std::size_t d = Dw.size() / w.size();
  double m = 0;
  for (std::size_t k = 0; k < w.size(); k += d) {
    double s = 0;
    for (std::size_t a = 0; a < d; ++a) s += w[k + a] * w[k + a];
    m = std::max(m, std::sqrt(s));
  }
  return m;
}

TransportAssembler::TransportAssembler(const GridSpec& spec, FieldPtr v, const NoiseBasis& basis)
    : spec_(spec), v_(std::move(v)), points_(spec.packed_nodes()) {
  spec.validate();
  if (basis.dim() != spec.dim || (v_ && v_->dim() != spec.dim))
    throw DimensionMismatch("transport fields do not match the grid dimension");
  if (v_ && v_->derivative_order() < 1) throw InvalidConfig("drift must expose a jacobian");
  for (const FieldPtr& s : basis.sigmas()) modes_.push_back(sample_transport(*s, points_, spec_, 0.0));
}

TransportField TransportAssembler::assemble(std::span<const double> f, double s, double t) const {
  if (f.size() > modes_.size()) throw DimensionMismatch("control has more entries than noise modes");
  TransportField w = v_ ? sample_transport(*v_, points_, spec_, t) : zero_transport(spec_);
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double c = s * f[k];
    if (c == 0) continue;
    for (std::size_t q = 0; q < w.w.size(); ++q) w.w[q] += c * modes_[k].w[q];
    for (std::size_t q = 0; q < w.Dw.size(); ++q) w.Dw[q] += c * modes_[k].Dw[q];
  }
  return w;
}

GridField transport_bracket(const TransportField& w, const GridField& V) {
  const GridSpec& spec = V.spec();
  const int d = spec.dim;
  const std::size_t N = spec.nodes();
  if (V.ncomp() != d || w.w.size() != N * d) throw DimensionMismatch("transport bracket layout mismatch");
  const Derivatives D = derivatives(V, false);
  GridField out = GridField::vector(spec);
  parallel_for(N, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const double* wk = &w.w[k * d];
      const double* Dwk = &w.Dw[k * d * d];
      for (int a = 0; a < d; ++a) {
        double r = 0;
        for (int i = 0; i < d; ++i) r += wk[i] * D.first[a * d + i][k] - V.at(k, i) * Dwk[a * d + i];
        out.at(k, a) = r;
      }
    }
  });
  return out;
}

// ---------------------------------------------------------------------------

VSolver::VSolver(const GridSpec& spec, const OperatorCoefficients& coeffs, FieldPtr v, ControlFunction f,
                 double dt_grid, ParabolicOptions options)
    : spec_(spec),
      gc_(sample_coefficients(coeffs, spec)),
      transport_(spec, std::move(v), coeffs.basis()),
      f_(std::move(f)),
      K_(coeffs.basis().K()),
      dt_grid_(dt_grid),
      options_(options) {
  if (!(dt_grid > 0)) throw InvalidConfig("grid step must be positive");
  if (f_.n() > K_) throw DimensionMismatch("control has more entries than noise modes");
}

TransportField VSolver::transport(int interval) const {
  const auto f = f_.on_interval(interval, dt_grid_, K_);
  const double s = options_.h_sign == HSign::Plus ? 1.0 : -1.0;
  return transport_.assemble(f, s, (interval + 0.5) * dt_grid_);
}

GridField VSolver::rhs(const GridField& V, const TransportField& w) const {
  GridField r = apply_L(gc_, V);
  r -= transport_bracket(w, V);
  return r;
}

void VSolver::step(ParabolicState& s, double dt, int interval) const {
  const TransportField w = transport(interval);
  ssp_rk2(s.U, dt, [&](const GridField& U) { return rhs(U, w); });
  s.t += dt;
}

double VSolver::stable_dt(int interval) const {
  return cfl_bound(spec_, gc_.max_a, transport(interval).max_speed(), options_.cfl);
}

ParabolicState VSolver::solve(const GridField& V0, double T, const std::vector<double>& checkpoints) const {
  if (!(V0.spec() == spec_) || V0.ncomp() != spec_.dim) throw DimensionMismatch("initial field does not match grid");
  int cached = -1;
  TransportField w;
  return integrate(
      V0, T, dt_grid_, options_, checkpoints,
      [&](GridField& U, double, double dt, int j) {
        if (j != cached) {
          w = transport(j);
          cached = j;
        }
        ssp_rk2(U, dt, [&](const GridField& X) { return rhs(X, w); });
      },
      [&](int j) {
        w = transport(j);
        cached = j;
        return cfl_bound(spec_, gc_.max_a, w.max_speed(), options_.cfl);
      });
}

// ---------------------------------------------------------------------------

int sym_index(int d, int a, int b) {
  if (a > b) std::swap(a, b);
  return a * d - a * (a - 1) / 2 + (b - a);
}

MomentCoefficients moment_coefficients(const NoiseBasis& basis, const Vec& x) {
  const int d = basis.dim();
  MomentCoefficients mc;
  mc.dim = d;
  for (int k = 0; k < basis.K(); ++k) {
    const Jet J = basis.sigma(k).jet(x);
    const Vec& s = J.value;
    const Mat& D = J.jacobian;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) mc.Q[a][b] += s(a) * s(b);
    for (int m = 0; m < d; ++m)
      for (int j = 0; j < d; ++j) mc.theta[m] -= 0.5 * s(j) * D(m, j);
    for (int i = 0; i < d; ++i)
      for (int a = 0; a < d; ++a) {
        for (int m = 0; m < d; ++m) mc.theta_i[i][a][m] -= s(m) * D(a, i);
        double kap = 0, lin = 0;
        for (int j = 0; j < d; ++j) {
          kap += s(j) * J.hessian.comp[a](j, i);
          lin += D(j, i) * D(a, j);
        }
        mc.kappa[i][a] += kap;
        mc.eta_i[i][a] += 0.5 * kap + 0.5 * lin;
      }
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b) mc.eta_ij[i][j][a][b] += D(a, i) * D(b, j);
  }
  return mc;
}

void moment_rhs_kernel(const MomentCoefficients& mc, const double* v, const double* Dv, const double* u,
                       const double* du, const double* ddu, double* out) {
  const int d = mc.dim;
  auto U = [&](int a, int b) { return u[sym_index(d, a, b)]; };
  auto dU = [&](int a, int b, int i) { return du[sym_index(d, a, b) * d + i]; };
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) {
      const int s = sym_index(d, a, b);
      double r = 0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) r += 0.5 * mc.Q[i][j] * ddu[(s * d + i) * d + j];
      for (int m = 0; m < d; ++m) r -= (mc.theta[m] + v[m]) * du[s * d + m];
      for (int i = 0; i < d; ++i) {
        for (int m = 0; m < d; ++m) r += mc.theta_i[i][a][m] * dU(b, i, m) + mc.theta_i[i][b][m] * dU(a, i, m);
        r += (mc.eta_i[i][a] - mc.kappa[i][a]) * U(b, i) + (mc.eta_i[i][b] - mc.kappa[i][b]) * U(a, i);
        for (int j = 0; j < d; ++j) r += mc.eta_ij[i][j][a][b] * U(i, j);
        r += U(i, b) * Dv[a * d + i] + U(a, i) * Dv[b * d + i];
      }
      out[s] = r;
    }
}

MomentSolver::MomentSolver(const GridSpec& spec, const NoiseBasis& basis, FieldPtr v, double dt_grid,
                           ParabolicOptions options)
    : spec_(spec), dt_grid_(dt_grid), options_(options) {
  spec.validate();
  if (!(dt_grid > 0)) throw InvalidConfig("grid step must be positive");
  if (basis.dim() != spec.dim) throw DimensionMismatch("noise basis does not match the grid dimension");
  for (int k = 0; k < basis.K(); ++k)
    if (basis.sigma(k).derivative_order() < 2) throw InvalidConfig("moment system needs second derivatives of sigma");
  const std::size_t N = spec.nodes();
  mc_.resize(N);
  parallel_for(N, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) mc_[k] = moment_coefficients(basis, spec.node(k));
  });
  v_ = TransportAssembler(spec, std::move(v), basis).assemble({}, 0.0, 0.0);
  const int d = spec.dim;
  for (std::size_t k = 0; k < N; ++k) {
    double q[9];
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) q[i * d + j] = 0.5 * mc_[k].Q[i][j];
    max_a_ = std::max(max_a_, largest_eigenvalue(q, d));
  }
}

GridField MomentSolver::rhs(const GridField& U) const {
  const int d = spec_.dim;
  const int m = sym_count(d);
  if (!(U.spec() == spec_) || U.ncomp() != m) throw DimensionMismatch("moment field does not match the solver grid");
  const Derivatives D = derivatives(U, true);
  GridField out(spec_, m);
  parallel_for(spec_.nodes(), [&](std::size_t begin, std::size_t end) {
    double u[6], du[18], ddu[54];
    for (std::size_t k = begin; k < end; ++k) {
      for (int c = 0; c < m; ++c) {
        u[c] = U.at(k, c);
        for (int i = 0; i < d; ++i) {
          du[c * d + i] = D.first[c * d + i][k];
          for (int j = 0; j < d; ++j) ddu[(c * d + i) * d + j] = D.second[(c * d + i) * d + j][k];
        }
      }
      moment_rhs_kernel(mc_[k], &v_.w[k * d], &v_.Dw[k * d * d], u, du, ddu, &out.values()[k * m]);
    }
  });
  return out;
}

void MomentSolver::step(ParabolicState& s, double dt) const {
  ssp_rk2(s.U, dt, [&](const GridField& U) { return rhs(U); });
  s.t += dt;
}

double MomentSolver::stable_dt() const {
  const int d = spec_.dim;
  double speed = 0;
  for (std::size_t k = 0; k < mc_.size(); ++k) {
    double s = 0, side = 0;
    for (int m = 0; m < d; ++m) s += std::pow(mc_[k].theta[m] + v_.w[k * d + m], 2);
    for (int i = 0; i < d; ++i)
      for (int a = 0; a < d; ++a) {
        double t = 0;
        for (int m = 0; m < d; ++m) t += mc_[k].theta_i[i][a][m] * mc_[k].theta_i[i][a][m];
        side += 2 * std::sqrt(t);
      }
    speed = std::max(speed, std::sqrt(s) + side);
  }
  return cfl_bound(spec_, max_a_, speed, options_.cfl);
}

ParabolicState MomentSolver::solve(const GridField& U0, double T, const std::vector<double>& checkpoints) const {
  const double bound = stable_dt();
  return integrate(
      U0, T, dt_grid_, options_, checkpoints, [&](GridField& U, double, double dt, int) {
        ssp_rk2(U, dt, [&](const GridField& X) { return rhs(X); });
      },
      [&](int) { return bound; });
}

GridField outer_moments(const GridField& B) {
  const GridSpec& spec = B.spec();
  const int d = spec.dim;
  if (B.ncomp() != d) throw DimensionMismatch("outer moments need a vector field");
  GridField U(spec, sym_count(d));
  for (std::size_t k = 0; k < spec.nodes(); ++k)
    for (int a = 0; a < d; ++a)
      for (int b = a; b < d; ++b) U.at(k, sym_index(d, a, b)) = B.at(k, a) * B.at(k, b);
  return U;
}

EnergyDiagnostics energy_diagnostics(const std::vector<DiagnosticRow>& history) {
  EnergyDiagnostics e;
  for (std::size_t q = 0; q < history.size(); ++q) {
    e.sup_l2_sq = std::max(e.sup_l2_sq, history[q].l2_sq);
    if (q == 0) continue;
    const double dt = history[q].t - history[q - 1].t;
    e.int_w12_sq += 0.5 * dt *
                    (history[q].l2_sq + history[q].h1_semi_sq + history[q - 1].l2_sq + history[q - 1].h1_semi_sq);
  }
  return e;
}

double bilinear_form(const GridCoefficients& gc, const GridField& f, const GridField& g, const TransportField& w) {
  const GridSpec& spec = f.spec();
  if (!(spec == gc.spec) || !(g.spec() == spec) || f.ncomp() != spec.dim || g.ncomp() != spec.dim)
    throw DimensionMismatch("bilinear form layout mismatch");
  const int d = spec.dim;
  const Derivatives Df = derivatives(f, false);
  const Derivatives Dg = derivatives(g, false);
  const GridField br = transport_bracket(w, f);
  double s = 0;
  for (std::size_t k = 0; k < spec.nodes(); ++k) {
    const double* a = &gc.a[k * d * d];
    const double* b = &gc.b[k * d * d * d];
    const double* c = &gc.c[k * d * d];
    for (int al = 0; al < d; ++al) {
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) s += a[i * d + j] * Df.first[al * d + j][k] * Dg.first[al * d + i][k];
      for (int j = 0; j < d; ++j) s += gc.div_a[k * d + j] * Df.first[al * d + j][k] * g.at(k, al);
      for (int i = 0; i < d; ++i)
        for (int be = 0; be < d; ++be) s -= b[(i * d + al) * d + be] * Df.first[be * d + i][k] * g.at(k, al);
      for (int be = 0; be < d; ++be) s -= c[al * d + be] * f.at(k, be) * g.at(k, al);
      s += br.at(k, al) * g.at(k, al);
    }
  }
  return s * spec.cell_volume();
}

}  // namespace stochvec
