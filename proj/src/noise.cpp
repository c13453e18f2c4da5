#include "stochvec/noise.hpp"

#include "stochvec/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <random>

namespace stochvec {

NoiseBasis::NoiseBasis(int dim, std::vector<FieldPtr> sigmas) : dim_(dim), sigmas_(std::move(sigmas)) {
  if (dim < 1 || dim > kMaxDim) throw DimensionMismatch("noise basis dimension");
  for (const auto& s : sigmas_) {
    if (!s) throw InvalidConfig("null noise mode");
    if (s->dim() != dim) throw DimensionMismatch("noise mode dimension differs from basis dimension");
  }
}

Mat NoiseBasis::covariance(const Vec& x, const Vec& y) const {
  Mat Q = zero_mat(dim_);
  for (const auto& s : sigmas_) Q += s->eval(x) * s->eval(y).transpose();
  return Q;
}

Mat NoiseBasis::covariance_derivative(const Vec& x, const Vec& y, QDerivative w) const {
  Mat Q = zero_mat(dim_);
  if (w.i < 0 || w.i >= dim_ || w.j < 0 || w.j >= dim_) throw DimensionMismatch("derivative index out of range");
  for (const auto& s : sigmas_) {
    switch (w.slot) {
      case QSlot::D1:
        Q += s->jacobian(x).col(w.i) * s->eval(y).transpose();
        break;
      case QSlot::D2:
        Q += s->eval(x) * s->jacobian(y).col(w.i).transpose();
        break;
      case QSlot::D1D2:
        Q += s->jacobian(x).col(w.i) * s->jacobian(y).col(w.j).transpose();
        break;
      case QSlot::D2D2: {
        const Hessian H = s->hessian(y);
        Vec hij(dim_);
        for (int b = 0; b < dim_; ++b) hij[b] = H.comp[b](w.i, w.j);
        Q += s->eval(x) * hij.transpose();
        break;
      }
      case QSlot::D1D1: {
        const Hessian H = s->hessian(x);
        Vec hij(dim_);
        for (int a = 0; a < dim_; ++a) hij[a] = H.comp[a](w.i, w.j);
        Q += hij * s->eval(y).transpose();
        break;
      }
    }
  }
  return Q;
}

double NoiseBasis::variance(const Vec& x) const {
  double v = 0;
  for (const auto& s : sigmas_) v += s->eval(x).squaredNorm();
  return v;
}

EllipticityReport check_ellipticity(const NoiseBasis& basis, const std::vector<Vec>& samples) {
  if (samples.empty()) throw InvalidConfig("ellipticity check needs a nonempty sample set");
  EllipticityReport rep;
  rep.nu_est = std::numeric_limits<double>::infinity();
  for (const Vec& x : samples) {
    const Mat Q = basis.covariance(x, x);
    Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (Q + Q.transpose()), Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    if (lo < rep.nu_est) {
      rep.nu_est = lo;
      rep.worst_x = x;
    }
  }
  rep.pass = rep.nu_est > 0;
  return rep;
}

std::vector<Vec> lattice_samples(int dim, double L, int per_axis) {
  std::vector<Vec> pts;
  int total = 1;
  for (int i = 0; i < dim; ++i) total *= per_axis;
  pts.reserve(total);
  const double h = 2 * L / per_axis;
  for (int code = 0; code < total; ++code) {
    Vec x(dim);
    int c = code;
    for (int i = dim - 1; i >= 0; --i) {
      x[i] = -L + (c % per_axis) * h;
      c /= per_axis;
    }
    pts.push_back(x);
  }
  return pts;
}

NoiseBounds noise_bounds(const NoiseBasis& basis, const std::vector<Vec>& samples) {
  NoiseBounds b;
  const int d = basis.dim();
  auto sup = [](const Mat& m) { return m.cwiseAbs().maxCoeff(); };
  for (const Vec& x : samples) {
    b.sup_q = std::max(b.sup_q, sup(basis.covariance(x, x)));
    b.sup_variance = std::max(b.sup_variance, basis.variance(x));
    for (int i = 0; i < d; ++i) {
      b.sup_dq = std::max(b.sup_dq, sup(basis.covariance_derivative(x, x, {QSlot::D1, i})));
      b.sup_dq = std::max(b.sup_dq, sup(basis.covariance_derivative(x, x, {QSlot::D2, i})));
      for (int j = 0; j < d; ++j)
        for (QSlot s : {QSlot::D1D2, QSlot::D2D2, QSlot::D1D1})
          b.sup_ddq = std::max(b.sup_ddq, sup(basis.covariance_derivative(x, x, {s, i, j})));
    }
  }
  return b;
}

NoiseBasis constant_basis(int dim, double scale) {
  std::vector<FieldPtr> modes;
  for (int k = 0; k < dim; ++k) {
    Vec e = zero_vec(dim);
    e[k] = scale;
    modes.push_back(std::make_shared<ConstantField>(e));
  }
  return NoiseBasis(dim, std::move(modes));
}

NoiseBasis sinusoidal_basis() {
  Vec e1(2), e2(2);
  e1 << 1, 0;
  e2 << 0, 1;
  std::vector<FieldPtr> modes = {std::make_shared<ConstantField>(0.75 * e1), std::make_shared<ConstantField>(0.75 * e2),
                                 make_shear(0.5, e2, e1, 0.0), make_shear(0.5, e1, e2, M_PI / 2)};
  return NoiseBasis(2, std::move(modes));
}

// ---------------------------------------------------------------------------

std::vector<double> BrownianPath::terminal() const {
  std::vector<double> w(K, 0.0);
  for (int j = 0; j < N; ++j)
    for (int k = 0; k < K; ++k) w[k] += increment(j, k);
  return w;
}

BrownianPath BrownianPath::coarsened(int factor) const {
  if (factor < 1 || N % factor != 0) throw InvalidConfig("coarsening factor must divide the step count");
  BrownianPath c;
  c.K = K;
  c.N = N / factor;
  c.dt = dt * factor;
  c.dW.assign(static_cast<std::size_t>(c.N) * K, 0.0);
  for (int j = 0; j < N; ++j)
    for (int k = 0; k < K; ++k) c.dW[static_cast<std::size_t>(j / factor) * K + k] += increment(j, k);
  return c;
}

BrownianPath BrownianPath::zero(int K, int N, double dt) {
  BrownianPath p;
  p.K = K;
  p.N = N;
  p.dt = dt;
  p.dW.assign(static_cast<std::size_t>(N) * K, 0.0);
  return p;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

BrownianEnsemble::BrownianEnsemble(int K, std::size_t M, double T, int N, std::uint64_t seed)
    : K_(K), M_(M), T_(T), N_(N), seed_(seed) {}

std::uint64_t BrownianEnsemble::stream_seed(std::size_t m) const {
  return splitmix64(seed_ ^ splitmix64(static_cast<std::uint64_t>(m) + 0x632be59bd9b4e019ULL));
}

BrownianPath BrownianEnsemble::path(std::size_t m) const {
  BrownianPath p;
  p.K = K_;
  p.N = N_;
  p.dt = dt();
  p.dW.resize(static_cast<std::size_t>(N_) * K_);
  std::mt19937_64 rng(stream_seed(m));
  std::normal_distribution<double> normal(0.0, std::sqrt(p.dt));
  for (double& w : p.dW) w = normal(rng);
  return p;
}

BrownianEnsemble generate_ensemble(int K, std::size_t M, double T, int N, std::uint64_t seed) {
  if (K < 1 || M < 1 || N < 1) throw InvalidConfig("ensemble sizes K, M, N must be positive");
  if (!(T > 0) || !std::isfinite(T)) throw InvalidConfig("ensemble horizon T must be positive");
  return BrownianEnsemble(K, M, T, N, seed);
}

}  // namespace stochvec
