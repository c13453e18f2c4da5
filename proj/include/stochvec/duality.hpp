#pragma once

#include "stochvec/characteristics.hpp"
#include "stochvec/control.hpp"
#include "stochvec/grid.hpp"
#include "stochvec/noise.hpp"
#include "stochvec/parabolic.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stochvec {

/// e_f(t) = exp(Sum_k Int f_k dW^k - 1/2 Sum_k Int |f_k|^2 ds) for piecewise-constant f.
class StochasticExponential {
 public:
  double log_value() const { return log_value_; }
  double value() const;
  /// 1/2 Sum_k Int |f_k|^2 ds accumulated so far.
  double compensator() const { return compensator_; }

  /// log e += Sum_k f_k dW^k - 1/2 Sum_k f_k^2 dt. Throws DimensionMismatch if sizes differ.
  void advance(std::span<const double> f, std::span<const double> dW, double dt);

  /// e_f after the first `steps` increments of the path, f taken per interval.
  static StochasticExponential along(const ControlFunction& f, const BrownianPath& path, int steps);

 private:
  double log_value_ = 0.0;
  double compensator_ = 0.0;
};

struct MonteCarloEstimate {
  GridField mean;
  /// standard error of the mean per entry
  GridField se;
  std::size_t samples = 0;
};

/// Streaming per-entry mean and sum of squared deviations (Welford), merged
/// pairwise so that block reductions are reproducible.
class FieldAccumulator {
 public:
  FieldAccumulator() = default;
  FieldAccumulator(const GridSpec& spec, int ncomp);

  void add(std::span<const double> values);
  void merge(const FieldAccumulator& other);
  std::size_t count() const { return count_; }

 private:
  friend MonteCarloEstimate finalize(const FieldAccumulator& acc);
  GridSpec spec_;
  int ncomp_ = 0;
  std::size_t count_ = 0;
  std::vector<double> mean_, m2_;
};

/// Throws InsufficientSamples with fewer than two samples.
MonteCarloEstimate finalize(const FieldAccumulator& acc);

/// Mean of B_m e_m with standard errors.
MonteCarloEstimate estimate_V(std::span<const GridField> B, std::span<const double> weights);
/// Mean of the symmetric products B^a B^b with standard errors.
MonteCarloEstimate estimate_moments(std::span<const GridField> B);

/// Scalar mean and standard error.
struct ScalarEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t samples = 0;
};

/// Drift v^eps: the spline interpolant of v mollified at width eps on `spec`.
FieldPtr mollified_drift(const AnalyticField& v, double eps, const GridSpec& spec);

/// Monte-Carlo run of the SPDE by characteristics.
struct EnsembleConfig {
  GridSpec spec;
  FieldPtr B0;
  /// v^eps, may be null
  FieldPtr drift;
  NoiseBasis basis = constant_basis(2);
  ControlFunction f = ControlFunction::zero();
  double T = 0.25;
  int steps = 64;
  std::size_t M = 10000;
  std::uint64_t seed = 1;
  FlowOptions flow;
  bool moments = false;
  /// paths per reduction block
  std::size_t block = 64;
};

struct EnsembleResult {
  MonteCarloEstimate V;
  std::optional<MonteCarloEstimate> moments;
  ScalarEstimate exponential;
  double worst_residual = 0.0;
  std::size_t failed_nodes = 0;
  double max_det_deviation = 0.0;
};

/// Runs M paths; path m is driven by BrownianEnsemble(K, M, T, steps, seed).path(m)
/// for both B and e_f. Parallel over blocks of paths, reproducible for any job count.
EnsembleResult run_ensemble(const EnsembleConfig& config, int jobs = 0);

struct DualityReport {
  MonteCarloEstimate mc;
  GridField V_pde;
  /// ||V_MC - V_PDE||_2 / ||V_PDE||_2 (0 when both vanish)
  double discrepancy = 0.0;
  /// ||SE||_2 / ||V_PDE||_2
  double se_rel = 0.0;
  double allowance = 0.0;
  /// 3 se_rel + allowance
  double threshold = 0.0;
  bool pass = false;
  ScalarEstimate exponential;
  double pde_dt = 0.0;
  std::string config_text;
};

struct DualityOptions {
  double allowance = 0.02;
  ParabolicOptions pde;
  bool throw_on_fail = true;
  int jobs = 0;
};

/// Relative L2 discrepancy between two fields; 0 if both vanish.
double relative_l2(const GridField& a, const GridField& ref);

/// Runs the MC leg and the PDE leg (same v^eps, h = Sum f_k sigma_k) and compares.
/// Throws TolExceeded with the JSON report when the check fails and throw_on_fail is set.
DualityReport duality_check(const EnsembleConfig& config, const DualityOptions& options = {});

std::string report_json(const DualityReport& r);

struct ComparisonResult {
  double metric = 0.0;
  double se = 0.0;
  std::size_t samples = 0;
};

/// Mean over paths of ||B^{eps1} - B^{eps2}||_2 for solutions driven by v
/// mollified at eps1 and eps2 with shared noise paths. Needs eps1 >= eps2 >= 2 dx.
ComparisonResult two_solution_comparison(const EnsembleConfig& config, const AnalyticField& v, double eps1, double eps2,
                                         int jobs = 0);

}  // namespace stochvec
