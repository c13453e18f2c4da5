#pragma once

#include "stochvec/analytic_field.hpp"

#include <cstdint>
#include <vector>

namespace stochvec {

/// Which partial derivative of Q(x, y) to take. D1 acts on x, D2 on y.
enum class QSlot { D1, D2, D1D2, D2D2, D1D1 };

struct QDerivative {
  QSlot slot;
  int i;
  int j = 0;  // second index; ignored for D1 and D2
};

/// Finite family sigma_1..sigma_K of vector fields with covariance
/// Q^{ab}(x, y) = Sum_k sigma_k^a(x) sigma_k^b(y).
class NoiseBasis {
 public:
  NoiseBasis(int dim, std::vector<FieldPtr> sigmas);

  int dim() const { return dim_; }
  int K() const { return static_cast<int>(sigmas_.size()); }
  const AnalyticField& sigma(int k) const { return *sigmas_[k]; }
  const std::vector<FieldPtr>& sigmas() const { return sigmas_; }

  Mat covariance(const Vec& x, const Vec& y) const;
  Mat covariance_derivative(const Vec& x, const Vec& y, QDerivative which) const;
  /// Sum_k |sigma_k(x)|^2 = trace Q(x, x).
  double variance(const Vec& x) const;

 private:
  int dim_;
  std::vector<FieldPtr> sigmas_;
};

struct EllipticityReport {
  double nu_est = 0.0;
  Vec worst_x;
  bool pass = false;
};

/// Smallest eigenvalue of Q(x, x) over the sample set.
EllipticityReport check_ellipticity(const NoiseBasis& basis, const std::vector<Vec>& samples);

/// Node set of a uniform per_axis^d lattice on [-L, L)^d.
std::vector<Vec> lattice_samples(int dim, double L, int per_axis = 32);

/// Sup-norms of Q and its first and second derivatives over the samples.
struct NoiseBounds {
  double sup_q = 0.0;
  double sup_dq = 0.0;
  double sup_ddq = 0.0;
  double sup_variance = 0.0;
};
NoiseBounds noise_bounds(const NoiseBasis& basis, const std::vector<Vec>& samples);

/// sigma_k = scale * e_k, k = 1..d.
NoiseBasis constant_basis(int dim, double scale = 1.0);

/// d = 2, K = 4: 0.75 e_1, 0.75 e_2, 0.5 sin(x_2) e_1, 0.5 cos(x_1) e_2.
/// Q(x, x) = diag(0.5625 + 0.25 sin^2 x_2, 0.5625 + 0.25 cos^2 x_1), so nu = 0.5625.
NoiseBasis sinusoidal_basis();

// --- Brownian increments --------------------------------------------------

/// One K-dimensional Brownian path on a uniform grid of N steps: dW[j * K + k].
struct BrownianPath {
  int K = 0;
  int N = 0;
  double dt = 0.0;
  std::vector<double> dW;

  double increment(int step, int k) const { return dW[static_cast<std::size_t>(step) * K + k]; }
  /// W^k at the final time.
  std::vector<double> terminal() const;
  /// Path on a grid `factor` times coarser (sums of consecutive increments).
  BrownianPath coarsened(int factor) const;
  /// Path with N steps and all increments zero.
  static BrownianPath zero(int K, int N, double dt);
};

/// M independent paths. Path m is a pure function of (seed, m), so samples
/// can be regenerated on any worker in any order.
class BrownianEnsemble {
 public:
  BrownianEnsemble(int K, std::size_t M, double T, int N, std::uint64_t seed);

  int K() const { return K_; }
  std::size_t M() const { return M_; }
  double T() const { return T_; }
  int N() const { return N_; }
  double dt() const { return T_ / N_; }
  std::uint64_t seed() const { return seed_; }

  std::uint64_t stream_seed(std::size_t m) const;
  BrownianPath path(std::size_t m) const;

 private:
  int K_;
  std::size_t M_;
  double T_;
  int N_;
  std::uint64_t seed_;
};

/// Validating constructor; throws InvalidConfig on nonpositive sizes.
BrownianEnsemble generate_ensemble(int K, std::size_t M, double T, int N, std::uint64_t seed);

}  // namespace stochvec
