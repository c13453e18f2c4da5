#include "stochvec/spline.hpp"

#include "stochvec/errors.hpp"

#include <cmath>

namespace stochvec {

namespace {

// Periodic inverse of the B-spline node matrix (1/6)[1 4 1]:
// g_m = sqrt(3) (z^m + z^(n-m)) / (1 - z^n), z = sqrt(3) - 2.
std::vector<double> prefilter_taps(int n) {
  const double z = std::sqrt(3.0) - 2.0;
  const double zn = std::pow(z, n);
  std::vector<double> g(n);
  for (int m = 0; m < n; ++m) g[m] = std::sqrt(3.0) * (std::pow(z, m) + std::pow(z, n - m)) / (1 - zn);
  return g;
}

void prefilter_axis(GridField& f, int axis, const std::vector<double>& g) {
  const GridSpec& spec = f.spec();
  const int n = spec.n;
  const std::size_t s = spec.stride(axis);
  std::vector<int> taps;
  for (int m = 0; m < n; ++m)
    if (std::abs(g[m]) > 1e-18) taps.push_back(m);
  GridField out(spec, f.ncomp());
  for (std::size_t k = 0; k < spec.nodes(); ++k) {
    const int c = static_cast<int>((k / s) % n);
    const std::size_t base = k - c * s;
    for (int a = 0; a < f.ncomp(); ++a) {
      double acc = 0;
      for (int m : taps) {
        int q = (c - m) % n;
        if (q < 0) q += n;
        acc += g[m] * f.at(base + q * s, a);
      }
      out.at(k, a) = acc;
    }
  }
  f = std::move(out);
}

// Cubic B-spline weights and their first two derivatives at fraction s.
void bspline_weights(double s, double w[3][4]) {
  const double t = 1 - s;
  w[0][0] = t * t * t / 6;
  w[0][1] = (3 * s * s * s - 6 * s * s + 4) / 6;
  w[0][2] = (-3 * s * s * s + 3 * s * s + 3 * s + 1) / 6;
  w[0][3] = s * s * s / 6;
  w[1][0] = -t * t / 2;
  w[1][1] = (3 * s * s - 4 * s) / 2;
  w[1][2] = (-3 * s * s + 2 * s + 1) / 2;
  w[1][3] = s * s / 2;
  w[2][0] = t;
  w[2][1] = 3 * s - 2;
  w[2][2] = -3 * s + 1;
  w[2][3] = s;
}

}  // namespace

PeriodicSpline::PeriodicSpline(const GridField& f) : coeffs_(f) {
  const auto g = prefilter_taps(f.spec().n);
  for (int axis = 0; axis < f.spec().dim; ++axis) prefilter_axis(coeffs_, axis, g);
}

void PeriodicSpline::evaluate(const double* x, double* value, double* jac, double* hess) const {
  const GridSpec& spec = coeffs_.spec();
  const int d = spec.dim;
  const int n = spec.n;
  const int nc = coeffs_.ncomp();
  const double dx = spec.dx();
  double w[kMaxDim][3][4];
  int idx[kMaxDim][4];
  for (int i = 0; i < d; ++i) {
    const double u = (wrap_coordinate(x[i], spec.L) + spec.L) / dx;
    double fl = std::floor(u);
    const double s = u - fl;
    int i0 = static_cast<int>(fl) % n;
    bspline_weights(s, w[i]);
    for (int q = 0; q < 4; ++q) {
      w[i][1][q] /= dx;
      w[i][2][q] /= dx * dx;
      int m = (i0 - 1 + q) % n;
      if (m < 0) m += n;
      idx[i][q] = m;
    }
  }
  if (d == 2 && !hess) {
    for (int a = 0; a < nc; ++a) {
      double v = 0, j0 = 0, j1 = 0;
      for (int q0 = 0; q0 < 4; ++q0) {
        const std::size_t row = static_cast<std::size_t>(idx[0][q0]) * n;
        double r0 = 0, r1 = 0;
        for (int q1 = 0; q1 < 4; ++q1) {
          const double cf = coeffs_.at(row + idx[1][q1], a);
          r0 += w[1][0][q1] * cf;
          r1 += w[1][1][q1] * cf;
        }
        v += w[0][0][q0] * r0;
        j0 += w[0][1][q0] * r0;
        j1 += w[0][0][q0] * r1;
      }
      value[a] = v;
      if (jac) {
        jac[a * 2] = j0;
        jac[a * 2 + 1] = j1;
      }
    }
    return;
  }
  for (int a = 0; a < nc; ++a) value[a] = 0;
  if (jac)
    for (int k = 0; k < nc * d; ++k) jac[k] = 0;
  if (hess)
    for (int k = 0; k < nc * d * d; ++k) hess[k] = 0;

  int total = 1;
  for (int i = 0; i < d; ++i) total *= 4;
  for (int combo = 0; combo < total; ++combo) {
    int q[kMaxDim];
    int c = combo;
    std::size_t flat = 0;
    for (int i = d - 1; i >= 0; --i) {
      q[i] = c % 4;
      c /= 4;
    }
    for (int i = 0; i < d; ++i) flat = flat * n + idx[i][q[i]];
    double w0 = 1;
    for (int i = 0; i < d; ++i) w0 *= w[i][0][q[i]];
    double wd[kMaxDim] = {0, 0, 0};
    double wh[kMaxDim][kMaxDim] = {};
    if (jac || hess) {
      for (int i = 0; i < d; ++i) {
        double p = 1;
        for (int j = 0; j < d; ++j) p *= w[j][j == i ? 1 : 0][q[j]];
        wd[i] = p;
      }
    }
    if (hess) {
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          double p = 1;
          for (int m = 0; m < d; ++m) {
            const int order = (m == i) + (m == j);
            p *= w[m][order][q[m]];
          }
          wh[i][j] = p;
        }
    }
    for (int a = 0; a < nc; ++a) {
      const double cf = coeffs_.at(flat, a);
      value[a] += w0 * cf;
      if (jac)
        for (int i = 0; i < d; ++i) jac[a * d + i] += wd[i] * cf;
      if (hess)
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) hess[(a * d + i) * d + j] += wh[i][j] * cf;
    }
  }
}

InterpolatedField::InterpolatedField(const GridField& f, std::string name)
    : AnalyticField(f.spec().dim), spline_(f), name_(std::move(name)) {
  if (f.ncomp() != f.spec().dim) throw DimensionMismatch("interpolated field needs a vector grid field");
}

Vec InterpolatedField::eval(const Vec& x, double) const {
  Vec v(dim());
  spline_.evaluate(x.data(), v.data());
  return v;
}

Mat InterpolatedField::jacobian(const Vec& x, double) const {
  const int d = dim();
  double v[kMaxDim], j[kMaxDim * kMaxDim];
  spline_.evaluate(x.data(), v, j);
  Mat J(d, d);
  for (int a = 0; a < d; ++a)
    for (int i = 0; i < d; ++i) J(a, i) = j[a * d + i];
  return J;
}

Hessian InterpolatedField::hessian(const Vec& x, double) const {
  const int d = dim();
  double v[kMaxDim], j[kMaxDim * kMaxDim], h[kMaxDim * kMaxDim * kMaxDim];
  spline_.evaluate(x.data(), v, j, h);
  Hessian H = Hessian::zero(d);
  for (int a = 0; a < d; ++a)
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) H.comp[a](i, k) = h[(a * d + i) * d + k];
  return H;
}

void InterpolatedField::eval_batch(std::span<const double> points, double, std::span<double> values,
                                   std::span<double> jacobians) const {
  const int d = dim();
  const std::size_t count = points.size() / d;
  for (std::size_t p = 0; p < count; ++p)
    spline_.evaluate(&points[p * d], &values[p * d], jacobians.empty() ? nullptr : &jacobians[p * d * d]);
}

}  // namespace stochvec
