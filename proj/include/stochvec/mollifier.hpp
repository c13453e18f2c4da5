#pragma once

#include "stochvec/analytic_field.hpp"
#include "stochvec/grid.hpp"

#include <vector>

namespace stochvec {

/// Tensor-product Gaussian kernel of standard deviation eps, truncated to
/// [-4 eps, 4 eps] per axis and renormalized to unit discrete mass.
class Mollifier {
 public:
  explicit Mollifier(double eps);

  double width() const { return eps_; }
  /// One-dimensional weights w[-r..r] (returned as index 0..2r) for spacing dx.
  /// Symmetric by construction; sum is 1 to rounding.
  std::vector<double> weights(double dx) const;

 private:
  double eps_;
};

/// Periodic discrete convolution with the kernel, one axis at a time.
/// Throws KernelUnderresolved if eps < dx.
GridField mollify(const GridField& f, const Mollifier& m);
/// Samples `f` on the grid first, then convolves.
GridField mollify(const AnalyticField& f, const Mollifier& m, const GridSpec& spec, double t = 0.0);

}  // namespace stochvec
