#include "stochvec/grid.hpp"

#include "stochvec/errors.hpp"
#include "stochvec/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace stochvec {

void GridSpec::validate() const {
  if (dim < 1 || dim > kMaxDim) throw InvalidConfig("grid dimension must be 1..3");
  if (n < 4) throw InvalidConfig("grid needs at least 4 nodes per axis");
  if (!(L > 0) || !std::isfinite(L)) throw InvalidConfig("grid half-width L must be positive");
}

double GridSpec::cell_volume() const { return std::pow(dx(), dim); }

std::size_t GridSpec::nodes() const {
  std::size_t c = 1;
  for (int i = 0; i < dim; ++i) c *= static_cast<std::size_t>(n);
  return c;
}

std::size_t GridSpec::stride(int axis) const {
  std::size_t s = 1;
  for (int i = axis + 1; i < dim; ++i) s *= static_cast<std::size_t>(n);
  return s;
}

std::size_t GridSpec::shift(std::size_t idx, int axis, int offset) const {
  const std::size_t s = stride(axis);
  const int c = coord(idx, axis);
  int m = (c + offset) % n;
  if (m < 0) m += n;
  return idx + (static_cast<std::ptrdiff_t>(m) - c) * static_cast<std::ptrdiff_t>(s);
}

std::size_t GridSpec::flat(const std::array<int, kMaxDim>& multi) const {
  std::size_t idx = 0;
  for (int i = 0; i < dim; ++i) {
    int m = multi[i] % n;
    if (m < 0) m += n;
    idx = idx * n + m;
  }
  return idx;
}

Vec GridSpec::node(std::size_t idx) const {
  Vec x(dim);
  for (int i = 0; i < dim; ++i) x[i] = -L + coord(idx, i) * dx();
  return x;
}

std::vector<double> GridSpec::packed_nodes() const {
  std::vector<double> pts(nodes() * dim);
  for (std::size_t k = 0; k < nodes(); ++k)
    for (int i = 0; i < dim; ++i) pts[k * dim + i] = -L + coord(k, i) * dx();
  return pts;
}

double wrap_coordinate(double x, double L) {
  if (x >= -L && x < L) return x;
  double y = std::fmod(x + L, 2 * L);
  if (y < 0) y += 2 * L;
  y -= L;
  return y >= L ? -L : y;
}

void wrap_point(std::span<double> x, double L) {
  for (double& c : x) c = wrap_coordinate(c, L);
}

// ---------------------------------------------------------------------------

GridField::GridField(const GridSpec& spec, int ncomp) : spec_(spec), ncomp_(ncomp) {
  spec_.validate();
  if (ncomp < 1) throw DimensionMismatch("grid field needs at least one component");
  values_.assign(spec_.nodes() * ncomp, 0.0);
}

Vec GridField::vec(std::size_t node) const {
  Vec v(ncomp_);
  for (int a = 0; a < ncomp_; ++a) v[a] = at(node, a);
  return v;
}

void GridField::set_vec(std::size_t node, const Vec& v) {
  for (int a = 0; a < ncomp_; ++a) at(node, a) = v[a];
}

std::vector<double> GridField::component(int comp) const {
  std::vector<double> out(nodes());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = at(k, comp);
  return out;
}

void GridField::set_component(int comp, std::span<const double> data) {
  for (std::size_t k = 0; k < data.size(); ++k) at(k, comp) = data[k];
}

double GridField::sup_norm() const {
  double m = 0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool GridField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

static void require_same_layout(const GridField& a, const GridField& b) {
  if (!(a.spec() == b.spec()) || a.ncomp() != b.ncomp()) throw DimensionMismatch("grid fields differ in layout");
}

GridField& GridField::operator+=(const GridField& o) {
  require_same_layout(*this, o);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
  return *this;
}

GridField& GridField::operator-=(const GridField& o) {
  require_same_layout(*this, o);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
  return *this;
}

GridField& GridField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

void GridField::axpy(double s, const GridField& o) {
  require_same_layout(*this, o);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += s * o.values_[k];
}

GridField operator+(GridField a, const GridField& b) { return a += b; }
GridField operator-(GridField a, const GridField& b) { return a -= b; }
GridField operator*(double s, GridField a) { return a *= s; }

GridField sample(const AnalyticField& f, const GridSpec& spec, double t) {
  if (f.dim() != spec.dim) throw DimensionMismatch("field and grid dimension differ");
  GridField out = GridField::vector(spec);
  const auto pts = spec.packed_nodes();
  const int d = spec.dim;
  parallel_for(spec.nodes(), [&](std::size_t begin, std::size_t end) {
    f.eval_batch(std::span<const double>(pts).subspan(begin * d, (end - begin) * d), t,
                 std::span<double>(out.values()).subspan(begin * d, (end - begin) * d), {});
  });
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> diff1(const GridSpec& spec, std::span<const double> u, int axis) {
  const std::size_t N = spec.nodes();
  const std::size_t s = spec.stride(axis);
  const int n = spec.n;
  const double inv = 1.0 / (2 * spec.dx());
  std::vector<double> out(N);
  for (std::size_t k = 0; k < N; ++k) {
    const int c = static_cast<int>((k / s) % n);
    const std::size_t up = c == n - 1 ? k - (n - 1) * s : k + s;
    const std::size_t dn = c == 0 ? k + (n - 1) * s : k - s;
    out[k] = (u[up] - u[dn]) * inv;
  }
  return out;
}

std::vector<double> diff2(const GridSpec& spec, std::span<const double> u, int i, int j) {
  if (i != j) {
    const auto di = diff1(spec, u, i);
    return diff1(spec, di, j);
  }
  const std::size_t N = spec.nodes();
  const std::size_t s = spec.stride(i);
  const int n = spec.n;
  const double inv = 1.0 / (spec.dx() * spec.dx());
  std::vector<double> out(N);
  for (std::size_t k = 0; k < N; ++k) {
    const int c = static_cast<int>((k / s) % n);
    const std::size_t up = c == n - 1 ? k - (n - 1) * s : k + s;
    const std::size_t dn = c == 0 ? k + (n - 1) * s : k - s;
    out[k] = (u[up] - 2 * u[k] + u[dn]) * inv;
  }
  return out;
}

GridField partial(const GridField& f, int axis) {
  GridField out(f.spec(), f.ncomp());
  for (int a = 0; a < f.ncomp(); ++a) out.set_component(a, diff1(f.spec(), f.component(a), axis));
  return out;
}

GridField divergence(const GridField& f) {
  if (f.ncomp() != f.spec().dim) throw DimensionMismatch("divergence needs a vector field");
  GridField out = GridField::scalar(f.spec());
  for (int a = 0; a < f.ncomp(); ++a) {
    const auto da = diff1(f.spec(), f.component(a), a);
    for (std::size_t k = 0; k < da.size(); ++k) out.values()[k] += da[k];
  }
  return out;
}

GridField lie_bracket(const GridField& A, const GridField& B) {
  require_same_layout(A, B);
  const int d = A.spec().dim;
  if (A.ncomp() != d) throw DimensionMismatch("lie bracket needs vector fields");
  GridField out = GridField::vector(A.spec());
  for (int i = 0; i < d; ++i) {
    const GridField dA = partial(A, i);
    const GridField dB = partial(B, i);
    for (std::size_t k = 0; k < out.nodes(); ++k)
      for (int a = 0; a < d; ++a) out.at(k, a) += A.at(k, i) * dB.at(k, a) - B.at(k, i) * dA.at(k, a);
  }
  return out;
}

// ---------------------------------------------------------------------------

double inner(const GridField& f, const GridField& g) {
  require_same_layout(f, g);
  double s = 0;
  const auto& a = f.values();
  const auto& b = g.values();
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s * f.spec().cell_volume();
}

double l2_norm_sq(const GridField& f) { return inner(f, f); }

double grad_norm_sq(const GridField& f) {
  double s = 0;
  for (int i = 0; i < f.spec().dim; ++i) s += l2_norm_sq(partial(f, i));
  return s;
}

double w12_norm_sq(const GridField& f) { return l2_norm_sq(f) + grad_norm_sq(f); }

double lp_norm(const GridField& f, double p) {
  double s = 0;
  for (double v : f.values()) s += std::pow(std::abs(v), p);
  return std::pow(s * f.spec().cell_volume(), 1.0 / p);
}

}  // namespace stochvec
