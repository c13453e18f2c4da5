#pragma once

#include "stochvec/analytic_field.hpp"
#include "stochvec/types.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace stochvec {

/// Uniform periodic grid on [-L, L)^d with n nodes per axis. Node i sits at
/// -L + i dx, dx = 2L/n. Flat indices are row-major with the last axis fastest.
struct GridSpec {
  int dim = 2;
  double L = M_PI;
  int n = 64;

  void validate() const;
  double dx() const { return 2 * L / n; }
  double cell_volume() const;
  std::size_t nodes() const;
  std::size_t stride(int axis) const;
  int coord(std::size_t idx, int axis) const { return static_cast<int>((idx / stride(axis)) % n); }
  /// Periodic neighbour of `idx` shifted by `offset` nodes along `axis`.
  std::size_t shift(std::size_t idx, int axis, int offset) const;
  std::size_t flat(const std::array<int, kMaxDim>& multi) const;
  Vec node(std::size_t idx) const;
  /// All node coordinates packed (node-major), as consumed by eval_batch.
  std::vector<double> packed_nodes() const;

  bool operator==(const GridSpec& o) const { return dim == o.dim && L == o.L && n == o.n; }
};

/// Maps x into the periodic box [-L, L)^d.
double wrap_coordinate(double x, double L);
void wrap_point(std::span<double> x, double L);

/// `ncomp` real components per node of a periodic grid, stored node-major:
/// values[node * ncomp + comp]. Vector fields use ncomp = d.
class GridField {
 public:
  GridField() = default;
  GridField(const GridSpec& spec, int ncomp);
  static GridField vector(const GridSpec& spec) { return GridField(spec, spec.dim); }
  static GridField scalar(const GridSpec& spec) { return GridField(spec, 1); }

  const GridSpec& spec() const { return spec_; }
  int ncomp() const { return ncomp_; }
  std::size_t nodes() const { return spec_.nodes(); }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  double& at(std::size_t node, int comp) { return values_[node * ncomp_ + comp]; }
  double at(std::size_t node, int comp) const { return values_[node * ncomp_ + comp]; }
  Vec vec(std::size_t node) const;
  void set_vec(std::size_t node, const Vec& v);

  /// Component `comp` as a plain node array.
  std::vector<double> component(int comp) const;
  void set_component(int comp, std::span<const double> data);

  double sup_norm() const;
  bool all_finite() const;

  GridField& operator+=(const GridField& o);
  GridField& operator-=(const GridField& o);
  GridField& operator*=(double s);
  /// this += s * o
  void axpy(double s, const GridField& o);

 private:
  GridSpec spec_;
  int ncomp_ = 0;
  std::vector<double> values_;
};

GridField operator+(GridField a, const GridField& b);
GridField operator-(GridField a, const GridField& b);
GridField operator*(double s, GridField a);

/// Pointwise evaluation of an analytic field at the nodes.
GridField sample(const AnalyticField& f, const GridSpec& spec, double t = 0.0);

// --- finite differences (2nd order, central, periodic) ---------------------

/// (u[i+1] - u[i-1]) / (2 dx) along `axis`.
std::vector<double> diff1(const GridSpec& spec, std::span<const double> u, int axis);
/// d_i d_j: compact 3-point stencil when i == j, product of first differences otherwise.
std::vector<double> diff2(const GridSpec& spec, std::span<const double> u, int i, int j);

/// Componentwise derivative along `axis`.
GridField partial(const GridField& f, int axis);
/// Sum_alpha d_alpha f^alpha as a scalar field.
GridField divergence(const GridField& f);
/// [A, B] = A.grad B - B.grad A with central differences.
GridField lie_bracket(const GridField& A, const GridField& B);

// --- quadrature --------------------------------------------------------------

/// Box quadrature dx^d Sum f.g over all components.
double inner(const GridField& f, const GridField& g);
double l2_norm_sq(const GridField& f);
/// Sum_alpha Sum_i || d_i f^alpha ||^2.
double grad_norm_sq(const GridField& f);
/// ||f||_{W^{1,2}}^2 = ||f||^2 + ||Df||^2.
double w12_norm_sq(const GridField& f);
/// (dx^d Sum |f|^p)^(1/p) of a scalar field.
double lp_norm(const GridField& f, double p);

}  // namespace stochvec
