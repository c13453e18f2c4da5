#include "stochvec/lie_operator.hpp"

#include "stochvec/errors.hpp"
#include "stochvec/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace stochvec {

Vec bracket_at(const AnalyticField& A, const AnalyticField& B, const Vec& x, double t) {
  if (A.dim() != B.dim()) throw DimensionMismatch("bracket of fields with different dimension");
  return B.jacobian(x, t) * A.eval(x, t) - A.jacobian(x, t) * B.eval(x, t);
}

LieBracketField::LieBracketField(FieldPtr A, FieldPtr B) : AnalyticField(A->dim()), A_(std::move(A)), B_(std::move(B)) {
  if (A_->dim() != B_->dim()) throw DimensionMismatch("bracket of fields with different dimension");
}

Vec LieBracketField::eval(const Vec& x, double t) const { return bracket_at(*A_, *B_, x, t); }

Mat LieBracketField::jacobian(const Vec& x, double t) const {
  const int d = dim();
  const Vec a = A_->eval(x, t), b = B_->eval(x, t);
  const Mat JA = A_->jacobian(x, t), JB = B_->jacobian(x, t);
  const Hessian HA = A_->hessian(x, t), HB = B_->hessian(x, t);
  // d_i [A,B]^al = Sum_j (d_i A^j d_j B^al + A^j d_i d_j B^al - d_i B^j d_j A^al - B^j d_i d_j A^al)
  Mat J = JB * JA - JA * JB;
  for (int al = 0; al < d; ++al) J.row(al) += (HB.comp[al] * a - HA.comp[al] * b).transpose();
  return J;
}

Hessian LieBracketField::hessian(const Vec&, double) const {
  throw Error("bracket fields expose first derivatives only");
}

FieldPtr lie_bracket(FieldPtr A, FieldPtr B) { return std::make_shared<LieBracketField>(std::move(A), std::move(B)); }

Vec apply_L_by_brackets(const NoiseBasis& basis, const AnalyticField& B, const Vec& x) {
  if (B.dim() != basis.dim()) throw DimensionMismatch("field and basis dimension differ");
  Vec out = zero_vec(basis.dim());
  // borrow B without ownership for the inner bracket
  FieldPtr b(&B, [](const AnalyticField*) {});
  for (const auto& s : basis.sigmas()) {
    LieBracketField inner(s, b);
    out += 0.5 * (inner.jacobian(x) * s->eval(x) - s->jacobian(x) * inner.eval(x));
  }
  return out;
}

// ---------------------------------------------------------------------------

OperatorCoefficients::OperatorCoefficients(NoiseBasis basis) : basis_(std::move(basis)) {}

OperatorCoefficients assemble_coefficients(const NoiseBasis& basis) { return OperatorCoefficients(basis); }

PointCoefficients OperatorCoefficients::at(const Vec& x) const {
  const int d = dim();
  PointCoefficients pc;
  pc.a = 0.5 * basis_.covariance(x, x);
  std::array<Mat, kMaxDim> d2;
  for (int g = 0; g < d; ++g) d2[g] = basis_.covariance_derivative(x, x, {QSlot::D2, g});
  for (int i = 0; i < d; ++i) {
    double trace_term = 0;
    for (int g = 0; g < d; ++g) trace_term += d2[g](g, i);
    pc.b[i] = 0.5 * trace_term * Mat::Identity(d, d);
    for (int al = 0; al < d; ++al)
      for (int be = 0; be < d; ++be) pc.b[i](al, be) -= d2[be](i, al);
  }
  pc.c = zero_mat(d);
  for (int be = 0; be < d; ++be)
    for (int g = 0; g < d; ++g) {
      const Mat m12 = basis_.covariance_derivative(x, x, {QSlot::D1D2, be, g});
      const Mat m22 = basis_.covariance_derivative(x, x, {QSlot::D2D2, g, be});
      for (int al = 0; al < d; ++al) pc.c(al, be) += 0.5 * m12(g, al) - 0.5 * m22(g, al);
    }
  return pc;
}

PointCoefficientDerivatives OperatorCoefficients::derivatives_at(const Vec& x) const {
  const int d = dim();
  PointCoefficientDerivatives pd;
  std::array<std::array<Mat, kMaxDim>, kMaxDim> d12, d22, d11;
  for (int m = 0; m < d; ++m)
    for (int n = 0; n < d; ++n) {
      d12[m][n] = basis_.covariance_derivative(x, x, {QSlot::D1D2, m, n});
      d22[m][n] = basis_.covariance_derivative(x, x, {QSlot::D2D2, m, n});
      d11[m][n] = basis_.covariance_derivative(x, x, {QSlot::D1D1, m, n});
    }
  for (int m = 0; m < d; ++m) {
    pd.da[m] = 0.5 * (basis_.covariance_derivative(x, x, {QSlot::D1, m}) +
                      basis_.covariance_derivative(x, x, {QSlot::D2, m}));
    for (int n = 0; n < d; ++n) pd.dda[m][n] = 0.5 * (d11[m][n] + d12[m][n] + d12[n][m] + d22[m][n]);
    // d_m of d2_g Q(x,x) is (d1_m d2_g + d2_m d2_g) Q
    for (int i = 0; i < d; ++i) {
      double trace_term = 0;
      for (int g = 0; g < d; ++g) trace_term += d12[m][g](g, i) + d22[m][g](g, i);
      pd.db[m][i] = 0.5 * trace_term * Mat::Identity(d, d);
      for (int al = 0; al < d; ++al)
        for (int be = 0; be < d; ++be) pd.db[m][i](al, be) -= d12[m][be](i, al) + d22[m][be](i, al);
    }
  }
  return pd;
}

Vec apply_L_by_coefficients(const PointCoefficients& pc, const Jet& B) {
  const int d = static_cast<int>(B.value.size());
  Vec out = pc.c * B.value;
  for (int al = 0; al < d; ++al) out[al] += (pc.a.cwiseProduct(B.hessian.comp[al])).sum();
  for (int i = 0; i < d; ++i) out += pc.b[i] * B.jacobian.col(i);
  return out;
}

Vec apply_L_by_coefficients(const OperatorCoefficients& coeffs, const AnalyticField& B, const Vec& x) {
  if (B.dim() != coeffs.dim()) throw DimensionMismatch("field and basis dimension differ");
  return apply_L_by_coefficients(coeffs.at(x), B.jet(x));
}

Vec apply_L_adjoint(const OperatorCoefficients& coeffs, const AnalyticField& phi, const Vec& x) {
  const int d = coeffs.dim();
  if (phi.dim() != d) throw DimensionMismatch("field and basis dimension differ");
  const PointCoefficients pc = coeffs.at(x);
  const PointCoefficientDerivatives pd = coeffs.derivatives_at(x);
  const Jet f = phi.jet(x);
  Vec out = pc.c.transpose() * f.value;
  double dda = 0;
  Vec grad_term = zero_vec(d);  // Sum_i d_i a_ij, per j
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      dda += pd.dda[i][j](i, j);
      grad_term[j] += pd.da[i](i, j);
    }
  for (int be = 0; be < d; ++be) {
    double v = dda * f.value[be] + (pc.a.cwiseProduct(f.hessian.comp[be])).sum();
    for (int j = 0; j < d; ++j) v += 2 * grad_term[j] * f.jacobian(be, j);
    out[be] += v;
  }
  for (int i = 0; i < d; ++i) out -= pd.db[i][i].transpose() * f.value + pc.b[i].transpose() * f.jacobian.col(i);
  return out;
}

// ---------------------------------------------------------------------------

GridCoefficients sample_coefficients(const OperatorCoefficients& coeffs, const GridSpec& spec) {
  const int d = spec.dim;
  if (coeffs.dim() != d) throw DimensionMismatch("grid and basis dimension differ");
  GridCoefficients gc;
  gc.spec = spec;
  const std::size_t N = spec.nodes();
  gc.a.resize(N * d * d);
  gc.b.resize(N * d * d * d);
  gc.c.resize(N * d * d);
  gc.div_a.resize(N * d);
  std::vector<double> amax(N);
  parallel_for(N, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const Vec x = spec.node(k);
      const PointCoefficients pc = coeffs.at(x);
      const PointCoefficientDerivatives pd = coeffs.derivatives_at(x);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          gc.a[k * d * d + i * d + j] = pc.a(i, j);
          gc.c[k * d * d + i * d + j] = pc.c(i, j);
          for (int be = 0; be < d; ++be) gc.b[k * d * d * d + (i * d + j) * d + be] = pc.b[i](j, be);
        }
      for (int j = 0; j < d; ++j) {
        double s = 0;
        for (int i = 0; i < d; ++i) s += pd.da[i](i, j);
        gc.div_a[k * d + j] = s;
      }
      Eigen::SelfAdjointEigenSolver<Mat> eig(pc.a, Eigen::EigenvaluesOnly);
      amax[k] = eig.eigenvalues().maxCoeff();
    }
  });
  for (double v : amax) gc.max_a = std::max(gc.max_a, v);
  return gc;
}

GridField apply_L(const GridCoefficients& gc, const GridField& B) {
  const GridSpec& spec = B.spec();
  if (!(spec == gc.spec) || B.ncomp() != spec.dim) throw DimensionMismatch("field does not match coefficient grid");
  const int d = spec.dim;
  const std::size_t N = spec.nodes();
  // first[beta][i], second[alpha][i][j]
  std::vector<std::vector<double>> first(d * d), second(d * d * d);
  for (int al = 0; al < d; ++al) {
    const auto comp = B.component(al);
    for (int i = 0; i < d; ++i) first[al * d + i] = diff1(spec, comp, i);
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        second[(al * d + i) * d + j] = diff2(spec, comp, i, j);
        if (j != i) second[(al * d + j) * d + i] = second[(al * d + i) * d + j];
      }
  }
  GridField out = GridField::vector(spec);
  parallel_for(N, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const double* a = &gc.a[k * d * d];
      const double* b = &gc.b[k * d * d * d];
      const double* c = &gc.c[k * d * d];
      for (int al = 0; al < d; ++al) {
        double v = 0;
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) v += a[i * d + j] * second[(al * d + i) * d + j][k];
        for (int i = 0; i < d; ++i)
          for (int be = 0; be < d; ++be) v += b[(i * d + al) * d + be] * first[be * d + i][k];
        for (int be = 0; be < d; ++be) v += c[al * d + be] * B.at(k, be);
        out.at(k, al) = v;
      }
    }
  });
  return out;
}

CoercivityResult coercivity_check(const GridCoefficients& coeffs, double nu, const std::vector<GridField>& fields) {
  if (fields.empty()) throw DegenerateSample("coercivity check needs at least one field");
  CoercivityResult res;
  res.margin = std::numeric_limits<double>::infinity();
  for (const GridField& B : fields) {
    const double nb = l2_norm_sq(B);
    if (!(nb > 0)) throw DegenerateSample("coercivity sample with zero norm");
    const double lbb = inner(apply_L(coeffs, B), B);
    const double m = (-lbb - 0.5 * nu * grad_norm_sq(B)) / nb;
    res.margin = std::min(res.margin, m);
  }
  res.C_est = std::max(0.0, -res.margin);
  return res;
}

double interpolation_ratio(const GridField& f, const GridField& g, const GridField& h, double p, int axis) {
  if (f.ncomp() != 1 || g.ncomp() != 1 || h.ncomp() != 1) throw DimensionMismatch("interpolation ratio needs scalar fields");
  const GridSpec& spec = f.spec();
  const auto dh = diff1(spec, h.values(), axis);
  double num = 0;
  for (std::size_t k = 0; k < spec.nodes(); ++k) num += f.values()[k] * g.values()[k] * dh[k];
  num *= spec.cell_volume();
  const double den = lp_norm(g, p) * std::sqrt(w12_norm_sq(f)) * std::sqrt(w12_norm_sq(h));
  if (!(den > 0)) throw DegenerateSample("interpolation ratio with zero denominator");
  return num / den;
}

}  // namespace stochvec
