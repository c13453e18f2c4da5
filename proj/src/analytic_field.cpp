#include "stochvec/analytic_field.hpp"

#include "stochvec/errors.hpp"

#include <random>

namespace stochvec {

AnalyticField::AnalyticField(int dim) : dim_(dim) {
  if (dim < 1 || dim > kMaxDim) throw DimensionMismatch("field dimension must be 1..3");
}

Jet AnalyticField::jet(const Vec& x, double t) const {
  Jet j;
  j.value = eval(x, t);
  j.jacobian = jacobian(x, t);
  j.hessian = hessian(x, t);
  return j;
}

void AnalyticField::eval_batch(std::span<const double> points, double t, std::span<double> values,
                               std::span<double> jacobians) const {
  const int d = dim();
  const std::size_t count = points.size() / d;
  Vec x(d);
  for (std::size_t p = 0; p < count; ++p) {
    for (int i = 0; i < d; ++i) x[i] = points[p * d + i];
    const Vec f = eval(x, t);
    for (int a = 0; a < d; ++a) values[p * d + a] = f[a];
    if (!jacobians.empty()) {
      const Mat J = jacobian(x, t);
      for (int a = 0; a < d; ++a)
        for (int i = 0; i < d; ++i) jacobians[p * d * d + a * d + i] = J(a, i);
    }
  }
}

void ZeroField::eval_batch(std::span<const double>, double, std::span<double> values,
                           std::span<double> jacobians) const {
  std::fill(values.begin(), values.end(), 0.0);
  std::fill(jacobians.begin(), jacobians.end(), 0.0);
}

ConstantField::ConstantField(Vec value) : AnalyticField(static_cast<int>(value.size())), value_(std::move(value)) {}

void ConstantField::eval_batch(std::span<const double>, double, std::span<double> values,
                               std::span<double> jacobians) const {
  const int d = dim();
  for (std::size_t k = 0; k < values.size(); ++k) values[k] = value_[k % d];
  std::fill(jacobians.begin(), jacobians.end(), 0.0);
}

LinearField::LinearField(Mat matrix, Vec offset)
    : AnalyticField(static_cast<int>(offset.size())), matrix_(std::move(matrix)), offset_(std::move(offset)) {
  if (matrix_.rows() != dim() || matrix_.cols() != dim()) throw DimensionMismatch("linear field matrix shape");
}

// ---------------------------------------------------------------------------

FourierField::FourierField(int dim, std::vector<FourierMode> modes, std::string name)
    : AnalyticField(dim), modes_(std::move(modes)), name_(std::move(name)) {
  for (const auto& m : modes_)
    if (m.amplitude.size() != dim || m.wavevector.size() != dim)
      throw DimensionMismatch("fourier mode dimension");
}

Vec FourierField::eval(const Vec& x, double) const {
  Vec f = zero_vec(dim());
  for (const auto& m : modes_) f += m.amplitude * std::sin(m.wavevector.dot(x) + m.phase);
  return f;
}

Mat FourierField::jacobian(const Vec& x, double) const {
  Mat J = zero_mat(dim());
  for (const auto& m : modes_)
    J += std::cos(m.wavevector.dot(x) + m.phase) * m.amplitude * m.wavevector.transpose();
  return J;
}

Hessian FourierField::hessian(const Vec& x, double) const {
  Hessian H = Hessian::zero(dim());
  for (const auto& m : modes_) {
    const double s = std::sin(m.wavevector.dot(x) + m.phase);
    const Mat kk = m.wavevector * m.wavevector.transpose();
    for (int a = 0; a < dim(); ++a) H.comp[a] -= s * m.amplitude[a] * kk;
  }
  return H;
}

void FourierField::eval_batch(std::span<const double> points, double, std::span<double> values,
                              std::span<double> jacobians) const {
  const int d = dim();
  const std::size_t count = points.size() / d;
  const bool want_jac = !jacobians.empty();
  std::fill(values.begin(), values.end(), 0.0);
  if (want_jac) std::fill(jacobians.begin(), jacobians.end(), 0.0);
  for (std::size_t p = 0; p < count; ++p) {
    const double* x = &points[p * d];
    double* f = &values[p * d];
    for (const auto& m : modes_) {
      double arg = m.phase;
      for (int i = 0; i < d; ++i) arg += m.wavevector[i] * x[i];
      const double s = std::sin(arg);
      for (int a = 0; a < d; ++a) f[a] += m.amplitude[a] * s;
      if (want_jac) {
        const double c = std::cos(arg);
        double* J = &jacobians[p * d * d];
        for (int a = 0; a < d; ++a)
          for (int i = 0; i < d; ++i) J[a * d + i] += c * m.amplitude[a] * m.wavevector[i];
      }
    }
  }
}

// ---------------------------------------------------------------------------

GaussianField::GaussianField(Vec center, double width, Vec direction)
    : AnalyticField(static_cast<int>(center.size())),
      center_(std::move(center)),
      width_(width),
      direction_(std::move(direction)) {
  if (direction_.size() != dim()) throw DimensionMismatch("gaussian direction");
  if (!(width_ > 0)) throw InvalidConfig("gaussian width must be positive");
}

Vec GaussianField::eval(const Vec& x, double) const {
  const Vec r = x - center_;
  return direction_ * std::exp(-r.squaredNorm() / (2 * width_ * width_));
}

Mat GaussianField::jacobian(const Vec& x, double) const {
  const double s2 = width_ * width_;
  const Vec r = x - center_;
  const double g = std::exp(-r.squaredNorm() / (2 * s2));
  return direction_ * (-g / s2 * r).transpose();
}

Hessian GaussianField::hessian(const Vec& x, double) const {
  const double s2 = width_ * width_;
  const Vec r = x - center_;
  const double g = std::exp(-r.squaredNorm() / (2 * s2));
  const Mat second = g * (r * r.transpose() / (s2 * s2) - Mat::Identity(dim(), dim()) / s2);
  Hessian H;
  for (int a = 0; a < dim(); ++a) H.comp[a] = direction_[a] * second;
  return H;
}

// ---------------------------------------------------------------------------

GaussianCurlField::GaussianCurlField(Vec center, double width, double amplitude, Vec axis)
    : AnalyticField(static_cast<int>(center.size())), center_(std::move(center)), width_(width), amplitude_(amplitude) {
  if (!(width_ > 0)) throw InvalidConfig("gaussian width must be positive");
  const int d = dim();
  if (d == 2) {
    rotation_ = Mat::Zero(2, 2);
    rotation_(0, 1) = 1;
    rotation_(1, 0) = -1;
  } else if (d == 3) {
    if (axis.size() != 3) throw DimensionMismatch("3-d curl field needs a 3-d axis");
    rotation_ = Mat::Zero(3, 3);
    rotation_(0, 1) = axis[2];
    rotation_(0, 2) = -axis[1];
    rotation_(1, 0) = -axis[2];
    rotation_(1, 2) = axis[0];
    rotation_(2, 0) = axis[1];
    rotation_(2, 1) = -axis[0];
  } else {
    throw DimensionMismatch("curl field needs d = 2 or 3");
  }
}

Vec GaussianCurlField::eval(const Vec& x, double) const {
  const double s2 = width_ * width_;
  const Vec u = (x - center_) / s2;
  const double psi = amplitude_ * std::exp(-(x - center_).squaredNorm() / (2 * s2));
  return rotation_ * (-psi * u);
}

Mat GaussianCurlField::jacobian(const Vec& x, double) const {
  const int d = dim();
  const double s2 = width_ * width_;
  const Vec u = (x - center_) / s2;
  const double psi = amplitude_ * std::exp(-(x - center_).squaredNorm() / (2 * s2));
  const Mat second = psi * (u * u.transpose() - Mat::Identity(d, d) / s2);
  return rotation_ * second;
}

Hessian GaussianCurlField::hessian(const Vec& x, double) const {
  const int d = dim();
  const double s2 = width_ * width_;
  const Vec u = (x - center_) / s2;
  const double psi = amplitude_ * std::exp(-(x - center_).squaredNorm() / (2 * s2));
  // third derivatives of psi, T[m](i, j) = d_m d_i d_j psi
  std::array<Mat, kMaxDim> third;
  for (int m = 0; m < d; ++m) {
    third[m] = Mat::Zero(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double v = -u[m] * u[i] * u[j];
        if (i == j) v += u[m] / s2;
        if (m == i) v += u[j] / s2;
        if (m == j) v += u[i] / s2;
        third[m](i, j) = psi * v;
      }
  }
  Hessian H = Hessian::zero(d);
  for (int a = 0; a < d; ++a)
    for (int m = 0; m < d; ++m)
      if (rotation_(a, m) != 0.0) H.comp[a] += rotation_(a, m) * third[m];
  return H;
}

// ---------------------------------------------------------------------------

SingularVortexField::SingularVortexField(double alpha, double r_in, double r_out)
    : AnalyticField(2), alpha_(alpha), r_in_(r_in), r_out_(r_out) {
  if (!(r_in > 0 && r_out > r_in)) throw InvalidConfig("singular vortex needs 0 < r_in < r_out");
}

std::array<double, 3> SingularVortexField::profile(double r) const {
  double chi = 1, dchi = 0, ddchi = 0;
  if (r >= r_out_) {
    return {0.0, 0.0, 0.0};
  } else if (r > r_in_) {
    const double w = r_out_ - r_in_;
    const double u = (r_out_ - r) / w;
    chi = u * u * u * (10 - 15 * u + 6 * u * u);
    dchi = -30 * u * u * (1 - u) * (1 - u) / w;
    ddchi = 60 * u * (1 - u) * (1 - 2 * u) / (w * w);
  }
  const double p = std::pow(r, -alpha_);
  const double g = p * chi;
  const double dg = -alpha_ * p / r * chi + p * dchi;
  const double ddg = alpha_ * (alpha_ + 1) * p / (r * r) * chi - 2 * alpha_ * p / r * dchi + p * ddchi;
  return {g, dg, ddg};
}

Vec SingularVortexField::eval(const Vec& x, double) const {
  const double r = x.norm();
  Vec v = zero_vec(2);
  if (r == 0.0) return v;
  const double g = profile(r)[0];
  v[0] = -x[1] * g;
  v[1] = x[0] * g;
  return v;
}

Mat SingularVortexField::jacobian(const Vec& x, double) const {
  const double r = x.norm();
  Mat J = zero_mat(2);
  if (r == 0.0) return J;
  const auto [g, dg, ddg] = profile(r);
  Mat dp(2, 2);
  dp << 0, -1, 1, 0;
  Vec p(2);
  p << -x[1], x[0];
  return dp * g + p * (dg / r * x).transpose();
}

Hessian SingularVortexField::hessian(const Vec& x, double) const {
  const double r = x.norm();
  Hessian H = Hessian::zero(2);
  if (r == 0.0) return H;
  const auto [g, dg, ddg] = profile(r);
  Mat dp(2, 2);
  dp << 0, -1, 1, 0;
  Vec p(2);
  p << -x[1], x[0];
  const Vec e = x / r;
  const Mat radial = ddg * e * e.transpose() + dg / r * (Mat::Identity(2, 2) - e * e.transpose());
  for (int a = 0; a < 2; ++a) {
    const Vec row = dp.row(a).transpose();
    H.comp[a] = dg * (row * e.transpose() + e * row.transpose()) + p[a] * radial;
  }
  return H;
}

// ---------------------------------------------------------------------------

SumField::SumField(std::vector<std::pair<double, FieldPtr>> terms)
    : AnalyticField(terms.empty() ? 2 : terms.front().second->dim()), terms_(std::move(terms)) {
  if (terms_.empty()) throw InvalidConfig("sum field needs at least one term");
  for (const auto& [c, f] : terms_)
    if (f->dim() != dim()) throw DimensionMismatch("sum field terms differ in dimension");
}

int SumField::derivative_order() const {
  int order = 2;
  for (const auto& [c, f] : terms_) order = std::min(order, f->derivative_order());
  return order;
}

Vec SumField::eval(const Vec& x, double t) const {
  Vec v = zero_vec(dim());
  for (const auto& [c, f] : terms_) v += c * f->eval(x, t);
  return v;
}

Mat SumField::jacobian(const Vec& x, double t) const {
  Mat J = zero_mat(dim());
  for (const auto& [c, f] : terms_) J += c * f->jacobian(x, t);
  return J;
}

Hessian SumField::hessian(const Vec& x, double t) const {
  Hessian H = Hessian::zero(dim());
  for (const auto& [c, f] : terms_) {
    const Hessian h = f->hessian(x, t);
    for (int a = 0; a < dim(); ++a) H.comp[a] += c * h.comp[a];
  }
  return H;
}

void SumField::eval_batch(std::span<const double> points, double t, std::span<double> values,
                          std::span<double> jacobians) const {
  std::vector<double> fv(values.size()), fj(jacobians.size());
  std::fill(values.begin(), values.end(), 0.0);
  std::fill(jacobians.begin(), jacobians.end(), 0.0);
  for (const auto& [c, f] : terms_) {
    f->eval_batch(points, t, fv, fj);
    for (std::size_t k = 0; k < fv.size(); ++k) values[k] += c * fv[k];
    for (std::size_t k = 0; k < fj.size(); ++k) jacobians[k] += c * fj[k];
  }
}

// ---------------------------------------------------------------------------

FieldPtr make_shear(double amplitude, const Vec& wavevector, const Vec& direction, double phase) {
  FourierMode m{amplitude * direction, wavevector, phase};
  return std::make_shared<FourierField>(static_cast<int>(wavevector.size()), std::vector<FourierMode>{m}, "shear");
}

FieldPtr make_taylor_green(double amplitude) {
  Vec a1(2), k1(2), a2(2), k2(2);
  a1 << -amplitude, 0;
  k1 << 0, 1;
  a2 << 0, amplitude;
  k2 << 1, 0;
  return std::make_shared<FourierField>(2, std::vector<FourierMode>{{a1, k1, 0.0}, {a2, k2, 0.0}},
                                        "taylor-green");
}

FieldPtr make_random_fourier(int dim, int kmax, std::uint64_t seed, bool divergence_free, double scale,
                             double decay) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(0.0, 2 * M_PI);
  std::vector<FourierMode> modes;
  std::array<int, kMaxDim> k{};
  const int side = 2 * kmax + 1;
  int total = 1;
  for (int i = 0; i < dim; ++i) total *= side;
  for (int code = 0; code < total; ++code) {
    int c = code, inf = 0;
    for (int i = dim - 1; i >= 0; --i) {
      k[i] = c % side - kmax;
      c /= side;
      inf = std::max(inf, std::abs(k[i]));
    }
    if (inf == 0) continue;
    Vec kv(dim), a(dim);
    for (int i = 0; i < dim; ++i) kv[i] = k[i];
    for (int i = 0; i < dim; ++i) a[i] = normal(rng);
    const double phase = uniform(rng);
    if (divergence_free) a -= kv * (a.dot(kv) / kv.squaredNorm());
    a *= scale / std::pow(kv.norm(), decay);
    modes.push_back({a, kv, phase});
  }
  return std::make_shared<FourierField>(dim, std::move(modes), "random-fourier");
}

double divergence(const AnalyticField& f, const Vec& x, double t) { return f.jacobian(x, t).trace(); }

}  // namespace stochvec
