#include "stochvec/mollifier.hpp"

#include "stochvec/errors.hpp"
#include "stochvec/parallel.hpp"

#include <cmath>

namespace stochvec {

Mollifier::Mollifier(double eps) : eps_(eps) {
  if (!(eps > 0) || !std::isfinite(eps)) throw InvalidConfig("mollifier width must be positive");
}

std::vector<double> Mollifier::weights(double dx) const {
  const int r = static_cast<int>(std::floor(4 * eps_ / dx));
  std::vector<double> half(r + 1);
  for (int j = 0; j <= r; ++j) {
    const double x = j * dx;
    half[j] = std::exp(-x * x / (2 * eps_ * eps_));
  }
  double mass = half[0];
  for (int j = 1; j <= r; ++j) mass += 2 * half[j];
  std::vector<double> w(2 * r + 1);
  for (int j = 0; j <= r; ++j) w[r + j] = w[r - j] = half[j] / mass;
  return w;
}

GridField mollify(const GridField& f, const Mollifier& m) {
  const GridSpec& spec = f.spec();
  if (m.width() < spec.dx()) throw KernelUnderresolved("mollifier width is below the grid spacing");
  const auto w = m.weights(spec.dx());
  const int r = static_cast<int>(w.size() / 2);
  const int nc = f.ncomp();
  const int n = spec.n;
  GridField cur = f;
  GridField next(spec, nc);
  for (int axis = 0; axis < spec.dim; ++axis) {
    const std::size_t s = spec.stride(axis);
    parallel_for(spec.nodes(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t k = begin; k < end; ++k) {
        const int c = static_cast<int>((k / s) % n);
        const std::size_t base = k - c * s;
        for (int a = 0; a < nc; ++a) {
          double acc = 0;
          for (int j = -r; j <= r; ++j) {
            int q = (c - j) % n;
            if (q < 0) q += n;
            acc += w[j + r] * cur.at(base + q * s, a);
          }
          next.at(k, a) = acc;
        }
      }
    });
    std::swap(cur, next);
  }
  return cur;
}

GridField mollify(const AnalyticField& f, const Mollifier& m, const GridSpec& spec, double t) {
  if (m.width() < spec.dx()) throw KernelUnderresolved("mollifier width is below the grid spacing");
  return mollify(sample(f, spec, t), m);
}

}  // namespace stochvec
