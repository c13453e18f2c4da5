#include "stochvec/characteristics.hpp"

#include "stochvec/errors.hpp"
#include "stochvec/parallel.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace stochvec {

Vec FlowSample::position(std::size_t p) const {
  Vec x(dim);
  for (int i = 0; i < dim; ++i) x[i] = positions[p * dim + i];
  return x;
}

Mat FlowSample::jacobian(std::size_t p) const {
  Mat J(dim, dim);
  for (int a = 0; a < dim; ++a)
    for (int i = 0; i < dim; ++i) J(a, i) = jacobians[p * dim * dim + a * dim + i];
  return J;
}

double FlowSample::max_det_deviation() const {
  double m = 0;
  if (jacobians.empty()) return m;
  for (std::size_t p = 0; p < count(); ++p) m = std::max(m, std::abs(jacobian(p).determinant() - 1.0));
  return m;
}

Characteristics::Characteristics(FieldPtr drift, NoiseBasis basis, double L)
    : drift_(std::move(drift)), basis_(std::move(basis)), L_(L) {
  if (drift_ && drift_->dim() != basis_.dim()) throw DimensionMismatch("drift and noise basis dimension differ");
  if (!(L > 0)) throw InvalidConfig("box half-width must be positive");
}

FlowSample Characteristics::start(std::span<const double> x0, bool with_jacobian) const {
  FlowSample s;
  s.dim = dim();
  s.positions.assign(x0.begin(), x0.end());
  wrap_point(s.positions, L_);
  if (with_jacobian) {
    const int d = dim();
    s.jacobians.assign(s.count() * d * d, 0.0);
    for (std::size_t p = 0; p < s.count(); ++p)
      for (int i = 0; i < d; ++i) s.jacobians[p * d * d + i * d + i] = 1.0;
  }
  return s;
}

void Characteristics::increment(std::span<const double> points, double t, double drift_scale,
                                std::span<const double> dW, std::vector<double>& F, std::vector<double>* M) const {
  const int d = dim();
  const std::size_t count = points.size() / d;
  F.assign(count * d, 0.0);
  if (M) M->assign(count * d * d, 0.0);
  thread_local std::vector<double> val, jac;
  val.resize(count * d);
  jac.resize(M ? count * d * d : 0);
  auto add = [&](const AnalyticField& f, double t_eval, double scale) {
    f.eval_batch(points, t_eval, val, jac);
    for (std::size_t k = 0; k < F.size(); ++k) F[k] += scale * val[k];
    if (M)
      for (std::size_t k = 0; k < M->size(); ++k) (*M)[k] += scale * jac[k];
  };
  if (drift_) add(*drift_, t, drift_scale);
  for (int k = 0; k < basis_.K(); ++k)
    if (dW[k] != 0.0) add(basis_.sigma(k), t, dW[k]);
}

void Characteristics::heun_step(FlowSample& s, double t0, double t1, double drift_scale,
                                std::span<const double> dW) const {
  const int d = dim();
  const std::size_t count = s.count();
  const bool jac = !s.jacobians.empty();
  thread_local std::vector<double> F0, F1, M0, M1, pred;
  increment(s.positions, t0, drift_scale, dW, F0, jac ? &M0 : nullptr);
  pred.resize(s.positions.size());
  for (std::size_t k = 0; k < pred.size(); ++k) pred[k] = wrap_coordinate(s.positions[k] + F0[k], L_);
  increment(pred, t1, drift_scale, dW, F1, jac ? &M1 : nullptr);
  for (std::size_t k = 0; k < s.positions.size(); ++k) {
    const double x = s.positions[k] + 0.5 * (F0[k] + F1[k]);
    if (!std::isfinite(x) || std::abs(x) >= 3 * L_) throw BlowUp("particle left the safety shell of the box");
    s.positions[k] = wrap_coordinate(x, L_);
  }
  if (jac) {
    double Jp[kMaxDim * kMaxDim];
    for (std::size_t p = 0; p < count; ++p) {
      double* J = &s.jacobians[p * d * d];
      const double* A = &M0[p * d * d];
      const double* B = &M1[p * d * d];
      double AJ[kMaxDim * kMaxDim];
      for (int a = 0; a < d; ++a)
        for (int i = 0; i < d; ++i) {
          double v = 0;
          for (int m = 0; m < d; ++m) v += A[a * d + m] * J[m * d + i];
          AJ[a * d + i] = v;
          Jp[a * d + i] = J[a * d + i] + v;
        }
      for (int a = 0; a < d; ++a)
        for (int i = 0; i < d; ++i) {
          double v = 0;
          for (int m = 0; m < d; ++m) v += B[a * d + m] * Jp[m * d + i];
          J[a * d + i] += 0.5 * (AJ[a * d + i] + v);
        }
    }
  }
}

void Characteristics::integrate_forward(FlowSample& s, const BrownianPath& path, int to) const {
  if (path.K != basis_.K()) throw DimensionMismatch("path and basis mode counts differ");
  if (to > path.N || to < s.step) throw InvalidConfig("forward integration target outside the path");
  for (int j = s.step; j < to; ++j)
    heun_step(s, j * path.dt, (j + 1) * path.dt, path.dt,
              std::span<const double>(path.dW).subspan(static_cast<std::size_t>(j) * path.K, path.K));
  s.step = to;
}

void Characteristics::integrate_inverse(FlowSample& s, const BrownianPath& path, int steps) const {
  if (path.K != basis_.K()) throw DimensionMismatch("path and basis mode counts differ");
  if (steps > path.N || steps < 0) throw InvalidConfig("inverse integration horizon outside the path");
  std::vector<double> neg(path.K);
  for (int j = steps - 1; j >= 0; --j) {
    for (int k = 0; k < path.K; ++k) neg[k] = -path.increment(j, k);
    heun_step(s, (j + 1) * path.dt, j * path.dt, -path.dt, neg);
  }
  s.step = 0;
}

double periodic_distance(std::span<const double> a, std::span<const double> b, double L) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = std::abs(a[i] - b[i]);
    d = std::fmod(d, 2 * L);
    d = std::min(d, 2 * L - d);
    s += d * d;
  }
  return std::sqrt(s);
}

SpdeSample solve_spde_sample(const AnalyticField& B0, const Characteristics& flow, const BrownianPath& path, int steps,
                             const GridSpec& spec, const FlowOptions& options) {
  const int d = spec.dim;
  if (B0.dim() != d || flow.dim() != d) throw DimensionMismatch("field, flow and grid dimension differ");
  if (std::abs(spec.L - flow.L()) > 1e-12 * spec.L) throw InvalidConfig("flow box and grid box differ");
  const std::size_t N = spec.nodes();
  const auto nodes = spec.packed_nodes();

  SpdeSample out;
  out.B = GridField::vector(spec);
  out.t = steps * path.dt;
  std::vector<double> residual(N, -1.0);
  std::vector<double> det_dev(N, 0.0), jnorm(N, 0.0);

  parallel_for(
      N,
      [&](std::size_t begin, std::size_t end) {
        const auto x = std::span<const double>(nodes).subspan(begin * d, (end - begin) * d);
        const bool inverse_jac = options.jacobian == JacobianMode::InverseFlow;
        FlowSample back = flow.start(x, inverse_jac);
        flow.integrate_inverse(back, path, steps);

        std::vector<double> J(x.size() * d);
        if (inverse_jac) {
          for (std::size_t p = 0; p < back.count(); ++p) {
            const Mat Ji = back.jacobian(p).inverse();
            for (int a = 0; a < d; ++a)
              for (int i = 0; i < d; ++i) J[p * d * d + a * d + i] = Ji(a, i);
          }
          if (options.check_stride > 0) {
            std::vector<double> sub;
            std::vector<std::size_t> which;
            for (std::size_t p = 0; p < back.count(); ++p)
              if ((begin + p) % options.check_stride == 0) {
                which.push_back(p);
                for (int i = 0; i < d; ++i) sub.push_back(back.positions[p * d + i]);
              }
            FlowSample fwd = flow.start(sub, false);
            flow.integrate_forward(fwd, path, steps);
            for (std::size_t q = 0; q < which.size(); ++q)
              residual[begin + which[q]] = periodic_distance(std::span<const double>(fwd.positions).subspan(q * d, d),
                                                             x.subspan(which[q] * d, d), spec.L);
          }
        } else {
          FlowSample fwd = flow.start(back.positions, true);
          flow.integrate_forward(fwd, path, steps);
          J = fwd.jacobians;
          for (std::size_t p = 0; p < fwd.count(); ++p)
            residual[begin + p] = periodic_distance(std::span<const double>(fwd.positions).subspan(p * d, d),
                                                    x.subspan(p * d, d), spec.L);
        }

        std::vector<double> b0(back.positions.size());
        B0.eval_batch(back.positions, 0.0, b0, {});
        Mat Jm(d, d);
        for (std::size_t p = 0; p < back.count(); ++p) {
          for (int a = 0; a < d; ++a)
            for (int i = 0; i < d; ++i) Jm(a, i) = J[p * d * d + a * d + i];
          for (int a = 0; a < d; ++a) {
            double v = 0;
            for (int i = 0; i < d; ++i) v += Jm(a, i) * b0[p * d + i];
            out.B.at(begin + p, a) = v;
          }
          det_dev[begin + p] = std::abs(Jm.determinant() - 1.0);
          jnorm[begin + p] = Eigen::JacobiSVD<Mat>(Jm).singularValues()(0);
        }
      },
      options.jobs);

  for (std::size_t k = 0; k < N; ++k) {
    out.max_det_deviation = std::max(out.max_det_deviation, det_dev[k]);
    out.max_jacobian_norm = std::max(out.max_jacobian_norm, jnorm[k]);
    if (residual[k] < 0) continue;
    ++out.checked_nodes;
    out.worst_residual = std::max(out.worst_residual, residual[k]);
    if (residual[k] > options.tol_inv) ++out.failed_nodes;
  }
  if (!out.B.all_finite()) throw BlowUp("non-finite value in SPDE sample");
  if (out.checked_nodes > 0 &&
      static_cast<double>(out.failed_nodes) > options.max_fail_fraction * static_cast<double>(out.checked_nodes))
    throw InverseToleranceExceeded("inverse flow round trip exceeded tolerance", out.worst_residual, out.failed_nodes);
  return out;
}

// ---------------------------------------------------------------------------

TransportAdjointField::TransportAdjointField(FieldPtr w, FieldPtr phi)
    : AnalyticField(w->dim()), w_(std::move(w)), phi_(std::move(phi)) {
  if (w_->dim() != phi_->dim()) throw DimensionMismatch("transport adjoint of fields with different dimension");
}

Vec TransportAdjointField::eval(const Vec& x, double t) const {
  const Vec w = w_->eval(x, t), p = phi_->eval(x, t);
  return phi_->jacobian(x, t) * w + w_->jacobian(x, t).transpose() * p;
}

Mat TransportAdjointField::jacobian(const Vec& x, double t) const {
  const int d = dim();
  const Vec w = w_->eval(x, t), p = phi_->eval(x, t);
  const Mat Jw = w_->jacobian(x, t), Jp = phi_->jacobian(x, t);
  const Hessian Hw = w_->hessian(x, t), Hp = phi_->hessian(x, t);
  // d_m [ Sum_i w^i d_i phi^a + Sum_g d_a w^g phi^g ]
  Mat out = Jp * Jw + Jw.transpose() * Jp;
  for (int a = 0; a < d; ++a)
    for (int m = 0; m < d; ++m) {
      double v = (Hp.comp[a].row(m) * w)(0);
      for (int g = 0; g < d; ++g) v += Hw.comp[g](a, m) * p[g];
      out(a, m) += v;
    }
  return out;
}

Hessian TransportAdjointField::hessian(const Vec&, double) const {
  throw Error("transport adjoint fields expose first derivatives only");
}

std::vector<double> weak_form_residual(const std::vector<GridField>& snapshots, const BrownianPath& path,
                                       const FieldPtr& phi, const FieldPtr& drift, const OperatorCoefficients& coeffs) {
  if (snapshots.empty()) return {};
  const GridSpec& spec = snapshots.front().spec();
  const int K = coeffs.basis().K();
  if (path.K != K) throw DimensionMismatch("path and basis mode counts differ");
  if (static_cast<int>(snapshots.size()) > path.N + 1) throw InvalidConfig("more snapshots than path steps");

  const GridField phi_g = sample(*phi, spec);
  GridField lstar = GridField::vector(spec);
  parallel_for(spec.nodes(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) lstar.set_vec(k, apply_L_adjoint(coeffs, *phi, spec.node(k)));
  });
  std::vector<GridField> g1;
  std::vector<FieldPtr> a1;
  for (int k = 0; k < K; ++k) {
    a1.push_back(std::make_shared<TransportAdjointField>(coeffs.basis().sigmas()[k], phi));
    g1.push_back(sample(*a1.back(), spec));
  }
  std::vector<GridField> g2(K * K);
  for (int l = 0; l < K; ++l)
    for (int k = 0; k < K; ++k) g2[l * K + k] = sample(TransportAdjointField(coeffs.basis().sigmas()[l], a1[k]), spec);

  auto drift_pairing = [&](std::size_t j) {
    double v = inner(snapshots[j], lstar);
    if (drift) v += inner(snapshots[j], sample(TransportAdjointField(drift, phi), spec, j * path.dt));
    return v;
  };

  std::vector<double> res(snapshots.size(), 0.0);
  const double start = inner(snapshots[0], phi_g);
  double drift_int = 0, noise_int = 0;
  double prev = drift_pairing(0);
  for (std::size_t j = 0; j + 1 < snapshots.size(); ++j) {
    const GridField& B = snapshots[j];
    for (int k = 0; k < K; ++k) noise_int += inner(B, g1[k]) * path.increment(static_cast<int>(j), k);
    for (int l = 0; l < K; ++l)
      for (int k = 0; k < K; ++k) {
        double iter = path.increment(static_cast<int>(j), l) * path.increment(static_cast<int>(j), k);
        if (l == k) iter -= path.dt;
        noise_int += 0.5 * inner(B, g2[l * K + k]) * iter;
      }
    const double next = drift_pairing(j + 1);
    drift_int += 0.5 * (prev + next) * path.dt;
    prev = next;
    res[j + 1] = inner(snapshots[j + 1], phi_g) - start - drift_int - noise_int;
  }
  return res;
}

}  // namespace stochvec
