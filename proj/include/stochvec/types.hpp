#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>

namespace stochvec {

inline constexpr int kMaxDim = 3;

/// Runtime-sized (d <= 3) point / vector. Stack allocated.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

/// Runtime-sized d x d matrix. For a field f, jacobian entry (alpha, i) = d_i f^alpha.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

/// Second derivatives of a vector field: comp[alpha](i, j) = d_i d_j f^alpha.
struct Hessian {
  std::array<Mat, kMaxDim> comp;

  static Hessian zero(int dim) {
    Hessian h;
    for (int a = 0; a < dim; ++a) h.comp[a] = Mat::Zero(dim, dim);
    return h;
  }
};

/// Value plus first and second derivatives of a vector field at one point.
struct Jet {
  Vec value;
  Mat jacobian;
  Hessian hessian;
};

inline Vec zero_vec(int dim) { return Vec::Zero(dim); }
inline Mat zero_mat(int dim) { return Mat::Zero(dim, dim); }

}  // namespace stochvec
