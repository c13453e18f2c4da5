#pragma once

#include "stochvec/analytic_field.hpp"

#include <random>

namespace testutil {

using stochvec::Vec;

inline Vec random_point(std::mt19937_64& rng, int d, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec x(d);
  for (int i = 0; i < d; ++i) x[i] = u(rng);
  return x;
}

inline Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

inline Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

/// Largest deviation between the analytic jacobian/hessian and central
/// differences with step h, relative to the largest derivative magnitude seen.
struct FdReport {
  double jac_rel = 0;
  double hess_rel = 0;
};

inline FdReport fd_consistency(const stochvec::AnalyticField& f, const std::vector<Vec>& pts, double h = 1e-4) {
  const int d = f.dim();
  double jac_err = 0, jac_scale = 0, hess_err = 0, hess_scale = 0;
  for (const Vec& x : pts) {
    const auto J = f.jacobian(x);
    const auto H = f.hessian(x);
    for (int i = 0; i < d; ++i) {
      Vec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const Vec col = (f.eval(xp) - f.eval(xm)) / (2 * h);
      const auto dJ = (f.jacobian(xp) - f.jacobian(xm)) / (2 * h);
      for (int a = 0; a < d; ++a) {
        jac_err = std::max(jac_err, std::abs(col[a] - J(a, i)));
        jac_scale = std::max(jac_scale, std::abs(J(a, i)));
        for (int k = 0; k < d; ++k) {
          // dJ(a, k) = d_i d_k f^a
          hess_err = std::max(hess_err, std::abs(dJ(a, k) - H.comp[a](k, i)));
          hess_scale = std::max(hess_scale, std::abs(H.comp[a](k, i)));
        }
      }
    }
  }
  return {jac_err / std::max(jac_scale, 1e-300), hess_err / std::max(hess_scale, 1e-300)};
}

}  // namespace testutil
