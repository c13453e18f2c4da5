#include "stochvec/duality.hpp"

#include "stochvec/errors.hpp"
#include "stochvec/mollifier.hpp"
#include "stochvec/parallel.hpp"
#include "stochvec/spline.hpp"

#include <json.hpp>

#include <cmath>
#include <memory>

namespace stochvec {

double StochasticExponential::value() const { return std::exp(log_value_); }

void StochasticExponential::advance(std::span<const double> f, std::span<const double> dW, double dt) {
  if (f.size() != dW.size()) throw DimensionMismatch("control and increment sizes differ");
  double s = 0, q = 0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    s += f[k] * dW[k];
    q += f[k] * f[k];
  }
  log_value_ += s - 0.5 * q * dt;
  compensator_ += 0.5 * q * dt;
}

StochasticExponential StochasticExponential::along(const ControlFunction& f, const BrownianPath& path, int steps) {
  if (steps < 0 || steps > path.N) throw InvalidConfig("step count outside the path");
  StochasticExponential e;
  if (f.is_zero()) return e;
  for (int j = 0; j < steps; ++j) {
    const auto fj = f.on_interval(j, path.dt, path.K);
    e.advance(fj, std::span<const double>(path.dW.data() + static_cast<std::size_t>(j) * path.K, path.K), path.dt);
  }
  return e;
}

// ---------------------------------------------------------------------------

FieldAccumulator::FieldAccumulator(const GridSpec& spec, int ncomp)
    : spec_(spec), ncomp_(ncomp), mean_(spec.nodes() * ncomp, 0.0), m2_(spec.nodes() * ncomp, 0.0) {}

void FieldAccumulator::add(std::span<const double> values) {
  if (values.size() != mean_.size()) throw DimensionMismatch("sample size does not match accumulator");
  ++count_;
  const double inv = 1.0 / static_cast<double>(count_);
  for (std::size_t q = 0; q < values.size(); ++q) {
    const double delta = values[q] - mean_[q];
    mean_[q] += delta * inv;
    m2_[q] += delta * (values[q] - mean_[q]);
  }
}

void FieldAccumulator::merge(const FieldAccumulator& o) {
  if (o.count_ == 0) return;
  if (count_ == 0) {
    *this = o;
    return;
  }
  if (o.mean_.size() != mean_.size()) throw DimensionMismatch("accumulators differ in size");
  const double na = static_cast<double>(count_), nb = static_cast<double>(o.count_), n = na + nb;
  for (std::size_t q = 0; q < mean_.size(); ++q) {
    const double delta = o.mean_[q] - mean_[q];
    mean_[q] += delta * nb / n;
    m2_[q] += o.m2_[q] + delta * delta * na * nb / n;
  }
  count_ += o.count_;
}

MonteCarloEstimate finalize(const FieldAccumulator& acc) {
  if (acc.count_ < 2) throw InsufficientSamples("at least two samples are needed for a standard error");
  MonteCarloEstimate e;
  e.samples = acc.count_;
  e.mean = GridField(acc.spec_, acc.ncomp_);
  e.se = GridField(acc.spec_, acc.ncomp_);
  const double n = static_cast<double>(acc.count_);
  for (std::size_t q = 0; q < acc.mean_.size(); ++q) {
    e.mean.values()[q] = acc.mean_[q];
    e.se.values()[q] = std::sqrt(std::max(0.0, acc.m2_[q]) / (n - 1) / n);
  }
  return e;
}

namespace {

void add_weighted(FieldAccumulator& acc, const GridField& B, double w, std::vector<double>& scratch) {
  scratch.resize(B.values().size());
  for (std::size_t q = 0; q < scratch.size(); ++q) scratch[q] = w * B.values()[q];
  acc.add(scratch);
}

void add_moments(FieldAccumulator& acc, const GridField& B, std::vector<double>& scratch) {
  const int d = B.spec().dim;
  const int m = sym_count(d);
  scratch.resize(B.nodes() * m);
  for (std::size_t k = 0; k < B.nodes(); ++k)
    for (int a = 0; a < d; ++a)
      for (int b = a; b < d; ++b) scratch[k * m + sym_index(d, a, b)] = B.at(k, a) * B.at(k, b);
  acc.add(scratch);
}

struct ScalarAccumulator {
  std::size_t n = 0;
  double mean = 0, m2 = 0;
  void add(double x) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  void merge(const ScalarAccumulator& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n), nb = static_cast<double>(o.n), t = na + nb;
    const double delta = o.mean - mean;
    mean += delta * nb / t;
    m2 += o.m2 + delta * delta * na * nb / t;
    n += o.n;
  }
  ScalarEstimate estimate() const {
    ScalarEstimate e;
    e.samples = n;
    e.mean = mean;
    e.se = n > 1 ? std::sqrt(std::max(0.0, m2) / (n - 1) / n) : 0.0;
    return e;
  }
};

struct EnsembleBlock {
  FieldAccumulator V, U;
  ScalarAccumulator e;
  double worst_residual = 0;
  std::size_t failed = 0;
  double det = 0;

  void merge(const EnsembleBlock& o) {
    V.merge(o.V);
    U.merge(o.U);
    e.merge(o.e);
    worst_residual = std::max(worst_residual, o.worst_residual);
    failed += o.failed;
    det = std::max(det, o.det);
  }
};

void validate(const EnsembleConfig& c) {
  c.spec.validate();
  if (!c.B0) throw InvalidConfig("initial field is missing");
  if (c.B0->dim() != c.spec.dim || c.basis.dim() != c.spec.dim) throw DimensionMismatch("ensemble dimensions differ");
  if (c.M < 2) throw InsufficientSamples("at least two paths are needed");
  if (c.steps <= 0 || !(c.T > 0)) throw InvalidConfig("time grid must have positive length and step count");
  if (c.f.n() > c.basis.K()) throw DimensionMismatch("control has more entries than noise modes");
}

int inner_jobs(const EnsembleConfig& c, int jobs) {
  const int outer = jobs > 0 ? jobs : default_jobs();
  return outer > 1 ? 1 : c.flow.jobs;
}

}  // namespace

MonteCarloEstimate estimate_V(std::span<const GridField> B, std::span<const double> weights) {
  if (B.size() != weights.size()) throw DimensionMismatch("one weight per sample is required");
  if (B.size() < 2) throw InsufficientSamples("at least two samples are needed");
  FieldAccumulator acc(B[0].spec(), B[0].ncomp());
  std::vector<double> scratch;
  for (std::size_t m = 0; m < B.size(); ++m) add_weighted(acc, B[m], weights[m], scratch);
  return finalize(acc);
}

MonteCarloEstimate estimate_moments(std::span<const GridField> B) {
  if (B.size() < 2) throw InsufficientSamples("at least two samples are needed");
  FieldAccumulator acc(B[0].spec(), sym_count(B[0].spec().dim));
  std::vector<double> scratch;
  for (const GridField& b : B) add_moments(acc, b, scratch);
  return finalize(acc);
}

FieldPtr mollified_drift(const AnalyticField& v, double eps, const GridSpec& spec) {
  return std::make_shared<InterpolatedField>(mollify(v, Mollifier(eps), spec), v.name() + "-mollified");
}

EnsembleResult run_ensemble(const EnsembleConfig& c, int jobs) {
  validate(c);
  const BrownianEnsemble ens = generate_ensemble(c.basis.K(), c.M, c.T, c.steps, c.seed);
  const Characteristics flow(c.drift, c.basis, c.spec.L);
  FlowOptions fo = c.flow;
  fo.jobs = inner_jobs(c, jobs);
  const int d = c.spec.dim;
  EnsembleBlock total = block_reduce<EnsembleBlock>(
      c.M, c.block,
      [&] {
        EnsembleBlock b;
        b.V = FieldAccumulator(c.spec, d);
        if (c.moments) b.U = FieldAccumulator(c.spec, sym_count(d));
        return b;
      },
      [&](EnsembleBlock& b, std::size_t m) {
        const BrownianPath path = ens.path(m);
        const SpdeSample s = solve_spde_sample(*c.B0, flow, path, c.steps, c.spec, fo);
        const double e = StochasticExponential::along(c.f, path, c.steps).value();
        std::vector<double> scratch;
        add_weighted(b.V, s.B, e, scratch);
        if (c.moments) add_moments(b.U, s.B, scratch);
        b.e.add(e);
        b.worst_residual = std::max(b.worst_residual, s.worst_residual);
        b.failed += s.failed_nodes;
        b.det = std::max(b.det, s.max_det_deviation);
      },
      [](EnsembleBlock& a, const EnsembleBlock& b) { a.merge(b); }, jobs);
  EnsembleResult r;
  r.V = finalize(total.V);
  if (c.moments) r.moments = finalize(total.U);
  r.exponential = total.e.estimate();
  r.worst_residual = total.worst_residual;
  r.failed_nodes = total.failed;
  r.max_det_deviation = total.det;
  return r;
}

double relative_l2(const GridField& a, const GridField& ref) {
  const double den = std::sqrt(l2_norm_sq(ref));
  const double num = std::sqrt(l2_norm_sq(a - ref));
  if (den == 0) return num == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  return num / den;
}

DualityReport duality_check(const EnsembleConfig& c, const DualityOptions& options) {
  EnsembleConfig mc_config = c;
  mc_config.moments = false;
  const EnsembleResult mc = run_ensemble(mc_config, options.jobs);
  const VSolver solver(c.spec, OperatorCoefficients(c.basis), c.drift, c.f, c.T / c.steps, options.pde);
  const ParabolicState pde = solver.solve(sample(*c.B0, c.spec), c.T);

  DualityReport r;
  r.mc = mc.V;
  r.V_pde = pde.U;
  r.exponential = mc.exponential;
  r.pde_dt = pde.dt_pde;
  r.allowance = options.allowance;
  const double ref = std::sqrt(l2_norm_sq(pde.U));
  r.discrepancy = relative_l2(mc.V.mean, pde.U);
  r.se_rel = ref > 0 ? std::sqrt(l2_norm_sq(mc.V.se)) / ref : 0.0;
  r.threshold = 3 * r.se_rel + r.allowance;
  r.pass = std::isfinite(r.discrepancy) && r.discrepancy <= r.threshold;
  nlohmann::ordered_json cfg{{"dim", c.spec.dim},
                             {"L", c.spec.L},
                             {"n", c.spec.n},
                             {"T", c.T},
                             {"steps", c.steps},
                             {"M", c.M},
                             {"seed", c.seed},
                             {"f", c.f.text()},
                             {"K", c.basis.K()},
                             {"B0", c.B0->name()},
                             {"drift", c.drift ? c.drift->name() : "zero"},
                             {"h_sign", options.pde.h_sign == HSign::Plus ? "plus" : "minus"}};
  r.config_text = cfg.dump();
  if (!r.pass && options.throw_on_fail)
    throw TolExceeded("duality discrepancy " + std::to_string(r.discrepancy) + " exceeds " +
                          std::to_string(r.threshold),
                      report_json(r));
  return r;
}

std::string report_json(const DualityReport& r) {
  nlohmann::ordered_json j;
  j["discrepancy"] = r.discrepancy;
  j["se_rel"] = r.se_rel;
  j["allowance"] = r.allowance;
  j["threshold"] = r.threshold;
  j["pass"] = r.pass;
  j["samples"] = r.mc.samples;
  j["exp_mean"] = r.exponential.mean;
  j["exp_se"] = r.exponential.se;
  j["pde_dt"] = r.pde_dt;
  j["max_se"] = r.mc.se.sup_norm();
  j["max_abs_error"] = (r.mc.mean - r.V_pde).sup_norm();
  j["config"] = nlohmann::ordered_json::parse(r.config_text.empty() ? "{}" : r.config_text);
  return j.dump(2);
}

ComparisonResult two_solution_comparison(const EnsembleConfig& c, const AnalyticField& v, double eps1, double eps2,
                                         int jobs) {
  validate(c);
  const double dx = c.spec.dx();
  if (!(eps1 >= eps2) || eps2 < 2 * dx - 1e-12) throw InvalidConfig("need eps1 >= eps2 >= 2 dx");
  const FieldPtr v1 = mollified_drift(v, eps1, c.spec);
  const FieldPtr v2 = eps2 == eps1 ? v1 : mollified_drift(v, eps2, c.spec);
  const Characteristics flow1(v1, c.basis, c.spec.L), flow2(v2, c.basis, c.spec.L);
  const BrownianEnsemble ens = generate_ensemble(c.basis.K(), c.M, c.T, c.steps, c.seed);
  FlowOptions fo = c.flow;
  fo.jobs = inner_jobs(c, jobs);
  const ScalarAccumulator acc = block_reduce<ScalarAccumulator>(
      c.M, c.block, [] { return ScalarAccumulator{}; },
      [&](ScalarAccumulator& a, std::size_t m) {
        if (v2 == v1) {
          a.add(0.0);
          return;
        }
        const BrownianPath path = ens.path(m);
        const SpdeSample s1 = solve_spde_sample(*c.B0, flow1, path, c.steps, c.spec, fo);
        const SpdeSample s2 = solve_spde_sample(*c.B0, flow2, path, c.steps, c.spec, fo);
        a.add(std::sqrt(l2_norm_sq(s1.B - s2.B)));
      },
      [](ScalarAccumulator& a, const ScalarAccumulator& b) { a.merge(b); }, jobs);
  const ScalarEstimate e = acc.estimate();
  return {e.mean, e.se, e.samples};
}

}  // namespace stochvec
