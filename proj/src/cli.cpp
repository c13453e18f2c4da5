#include "stochvec/cli.hpp"

#include "stochvec/config.hpp"
#include "stochvec/duality.hpp"
#include "stochvec/errors.hpp"
#include "stochvec/io.hpp"
#include "stochvec/parallel.hpp"
#include "stochvec/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>

#ifndef STOCHVEC_GIT_DESCRIBE
#define STOCHVEC_GIT_DESCRIBE "unknown"
#endif

namespace stochvec {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

const char* build_version() { return STOCHVEC_GIT_DESCRIBE; }

namespace {

struct Options {
  std::string config_path;
  std::string out;
  bool force = false;
  std::optional<double> t, dt, tol;
  std::optional<std::size_t> samples;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> f;
  std::string mode = "V";
  int jobs = 0;
};

ExperimentConfig resolve(const Options& o) {
  ExperimentConfig c = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
  if (const char* env = std::getenv("STOCHVEC_SEED"); env && *env) {
    try {
      set_config_key(c, "seed", env);
    } catch (const InvalidConfig& e) {
      throw InvalidConfig(std::string("STOCHVEC_SEED: ") + e.what());
    }
  }
  if (o.seed) c.seed = *o.seed;
  if (o.t) {
    // keep the step size when only the horizon changes
    const double dt = c.T / c.steps;
    c.T = *o.t;
    c.steps = std::max(1, static_cast<int>(std::lround(c.T / dt)));
  }
  if (o.dt) {
    if (!(*o.dt > 0)) throw InvalidConfig("--dt must be positive");
    const double steps = c.T / *o.dt;
    if (std::abs(steps - std::round(steps)) > 1e-9 * steps) throw InvalidConfig("--dt must divide T");
    c.steps = static_cast<int>(std::lround(steps));
  }
  if (o.samples) c.M = *o.samples;
  if (o.tol) c.tol = *o.tol;
  if (o.f) c.f = *o.f;
  validate_config(c);
  return c;
}

class Run {
 public:
  Run(const std::string& command, const Options& o, const ExperimentConfig& c) : command_(command), config_(c) {
    if (o.out.empty()) throw InvalidConfig("--out is required");
    dir_ = o.out;
    if (fs::exists(dir_)) {
      if (!fs::is_directory(dir_)) throw InvalidConfig("--out exists and is not a directory");
      if (!fs::is_empty(dir_) && !o.force) throw InvalidConfig("--out directory is not empty (use --force)");
    }
    fs::create_directories(dir_);
    fs::remove(dir_ / "manifest.json");
    jobs_ = o.jobs;
  }

  fs::path path(const std::string& name) {
    outputs_.push_back(name);
    return dir_ / name;
  }

  void field(const std::string& name, const GridField& f, double t) {
    write_field_csv(path(name + ".csv"), f, FieldMeta{name, t, config_.seed});
    outputs_.push_back(name + ".json");
  }

  void json(const std::string& name, const std::string& text) {
    std::ofstream out(path(name), std::ios::binary);
    out << text << '\n';
  }

  void manifest() {
    ojson m;
    m["tool"] = "stochvec";
    m["command"] = command_;
    m["git_describe"] = build_version();
    m["seed"] = config_.seed;
    m["jobs"] = jobs_ > 0 ? jobs_ : default_jobs();
    m["config"] = config_json(config_);
    m["outputs"] = outputs_;
    std::ofstream out(dir_ / "manifest.json", std::ios::binary);
    out << m.dump(2) << '\n';
  }

 private:
  std::string command_;
  ExperimentConfig config_;
  fs::path dir_;
  std::vector<std::string> outputs_;
  int jobs_ = 0;
};

EnsembleConfig ensemble_of(const ExperimentConfig& c) {
  EnsembleConfig e;
  e.spec = grid_of(c);
  e.B0 = parse_field(c.B0, c.dim);
  e.drift = build_drift(c);
  e.basis = parse_basis(c.basis, c.dim);
  e.f = ControlFunction::parse(c.f);
  e.T = c.T;
  e.steps = c.steps;
  e.M = c.M;
  e.seed = c.seed;
  e.flow = flow_options(c);
  return e;
}

struct SimulateBlock {
  FieldAccumulator acc;
  std::vector<std::vector<double>> rows;
  std::optional<GridField> first;
};

int cmd_simulate(const Options& o, std::ostream& out) {
  const ExperimentConfig c = resolve(o);
  Run run("simulate", o, c);
  const EnsembleConfig e = ensemble_of(c);
  const BrownianEnsemble ens = generate_ensemble(e.basis.K(), e.M, e.T, e.steps, e.seed);
  const Characteristics flow(e.drift, e.basis, e.spec.L);
  FlowOptions fo = e.flow;
  fo.jobs = (o.jobs > 0 ? o.jobs : default_jobs()) > 1 ? 1 : 0;
  SimulateBlock total = block_reduce<SimulateBlock>(
      e.M, e.block, [&] { return SimulateBlock{FieldAccumulator(e.spec, e.spec.dim), {}, {}}; },
      [&](SimulateBlock& b, std::size_t m) {
        const BrownianPath p = ens.path(m);
        const SpdeSample s = solve_spde_sample(*e.B0, flow, p, e.steps, e.spec, fo);
        const double ef = StochasticExponential::along(e.f, p, e.steps).value();
        b.acc.add(s.B.values());
        b.rows.push_back({static_cast<double>(m), s.worst_residual, static_cast<double>(s.checked_nodes),
                          static_cast<double>(s.failed_nodes), s.max_det_deviation, s.max_jacobian_norm,
                          l2_norm_sq(s.B), ef});
        if (m == 0) b.first = s.B;
      },
      [](SimulateBlock& a, const SimulateBlock& b) {
        a.acc.merge(b.acc);
        a.rows.insert(a.rows.end(), b.rows.begin(), b.rows.end());
        if (!a.first && b.first) a.first = b.first;
      },
      o.jobs);
  const MonteCarloEstimate mean = finalize(total.acc);
  write_table_csv(run.path("diagnostics.csv"),
                  {"path", "worst_residual", "checked_nodes", "failed_nodes", "max_det_deviation",
                   "max_jacobian_norm", "l2_sq", "exp_f"},
                  total.rows);
  run.field("B_mean", mean.mean, c.T);
  run.field("B_se", mean.se, c.T);
  run.field("B_path0", *total.first, c.T);
  run.manifest();
  out << "simulate: " << e.M << " paths, t = " << c.T << "\n";
  return kExitOk;
}

int cmd_pde(const Options& o, std::ostream& out) {
  const ExperimentConfig c = resolve(o);
  if (o.mode != "V" && o.mode != "moments") throw InvalidConfig("--mode must be V or moments");
  Run run("pde", o, c);
  const GridSpec spec = grid_of(c);
  const NoiseBasis basis = parse_basis(c.basis, c.dim);
  const FieldPtr drift = build_drift(c);
  const GridField B0 = sample(*parse_field(c.B0, c.dim), spec);
  const double dt = c.T / c.steps;
  ParabolicState s;
  if (o.mode == "V") {
    const VSolver solver(spec, OperatorCoefficients(basis), drift, ControlFunction::parse(c.f), dt,
                         parabolic_options(c));
    s = solver.solve(B0, c.T, c.checkpoints);
  } else {
    const MomentSolver solver(spec, basis, drift, dt, parabolic_options(c));
    s = solver.solve(outer_moments(B0), c.T, c.checkpoints);
  }
  const std::string stem = o.mode == "V" ? "V" : "u";
  for (std::size_t q = 0; q < s.snapshots.size(); ++q)
    run.field(stem + "_" + std::to_string(q), s.snapshots[q], s.snapshot_times[q]);
  run.field(stem + "_final", s.U, s.t);
  std::vector<std::vector<double>> rows;
  for (const auto& r : s.history) rows.push_back({r.t, std::sqrt(r.l2_sq), std::sqrt(r.h1_semi_sq)});
  write_table_csv(run.path("diagnostics.csv"), {"t", "l2_norm", "h1_seminorm"}, rows);
  const EnergyDiagnostics e = energy_diagnostics(s.history);
  ojson rep{{"mode", o.mode},           {"t", s.t},
            {"dt_pde", s.dt_pde},       {"halvings", s.halvings},
            {"sup_l2_sq", e.sup_l2_sq}, {"int_w12_sq", e.int_w12_sq}};
  run.json("report.json", rep.dump(2));
  run.manifest();
  out << "pde: mode " << o.mode << ", t = " << s.t << ", dt_pde = " << s.dt_pde << "\n";
  return kExitOk;
}

int cmd_duality(const Options& o, std::ostream& out) {
  const ExperimentConfig c = resolve(o);
  Run run("duality", o, c);
  DualityOptions opt;
  opt.allowance = c.tol;
  opt.pde = parabolic_options(c);
  opt.throw_on_fail = false;
  opt.jobs = o.jobs;
  const DualityReport r = duality_check(ensemble_of(c), opt);
  const std::string text = report_json(r);
  run.json("report.json", text);
  run.field("V_mc", r.mc.mean, c.T);
  run.field("V_se", r.mc.se, c.T);
  run.field("V_pde", r.V_pde, c.T);
  run.field("V_error", r.mc.mean - r.V_pde, c.T);
  run.manifest();
  out << "duality: discrepancy " << r.discrepancy << ", threshold " << r.threshold << (r.pass ? " pass" : " FAIL")
      << "\n";
  if (!r.pass) throw TolExceeded("duality discrepancy exceeds threshold", text);
  return kExitOk;
}

int cmd_moments(const Options& o, std::ostream& out) {
  const ExperimentConfig c = resolve(o);
  Run run("moments", o, c);
  EnsembleConfig e = ensemble_of(c);
  e.moments = true;
  const EnsembleResult mc = run_ensemble(e, o.jobs);
  const MomentSolver solver(e.spec, e.basis, e.drift, c.T / c.steps, parabolic_options(c));
  const ParabolicState s = solver.solve(outer_moments(sample(*e.B0, e.spec)), c.T);
  const double disc = relative_l2(mc.moments->mean, s.U);
  const double ref = std::sqrt(l2_norm_sq(s.U));
  const double se_rel = ref > 0 ? std::sqrt(l2_norm_sq(mc.moments->se)) / ref : 0.0;
  const double threshold = 3 * se_rel + c.tol;
  const bool pass = disc <= threshold;
  ojson rep{{"discrepancy", disc}, {"se_rel", se_rel}, {"allowance", c.tol},
            {"threshold", threshold}, {"pass", pass}, {"samples", mc.moments->samples},
            {"pde_dt", s.dt_pde}};
  run.json("report.json", rep.dump(2));
  run.field("u_mc", mc.moments->mean, c.T);
  run.field("u_se", mc.moments->se, c.T);
  run.field("u_pde", s.U, c.T);
  run.manifest();
  out << "moments: discrepancy " << disc << ", threshold " << threshold << (pass ? " pass" : " FAIL") << "\n";
  if (!pass) throw TolExceeded("moment discrepancy exceeds threshold", rep.dump(2));
  return kExitOk;
}

int cmd_verify(const Options& o, std::ostream& out) {
  const ExperimentConfig c = resolve(o);
  Run run("verify-operator", o, c);
  const OperatorReport r = verify_operator(parse_basis(c.basis, c.dim), grid_of(c), c.seed);
  ojson rep{{"nu_est", r.nu_est},
            {"C_est", r.C_est},
            {"bracket_vs_coeff_max_err", r.bracket_vs_coeff_max_err},
            {"adjoint_duality_err", r.adjoint_duality_err},
            {"interp_max_ratio", r.interp_max_ratio}};
  run.json("report.json", rep.dump(2));
  run.manifest();
  out << rep.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"stochvec: stochastic vector advection laboratory"};
  app.set_version_flag("--version", std::string(build_version()));
  app.require_subcommand(1);
  Options o;
  app.add_option("--jobs", o.jobs, "worker threads (default: available parallelism)");

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "config file (key = value)");
    sub->add_option("--out", o.out, "output directory")->required();
    sub->add_flag("--force", o.force, "write into a non-empty output directory");
    sub->add_option("--seed", o.seed, "seed (overrides config and STOCHVEC_SEED)");
    sub->add_option("--t", o.t, "final time");
    sub->add_option("--jobs", o.jobs, "worker threads");
  };
  CLI::App* simulate = app.add_subcommand("simulate", "SPDE samples by stochastic characteristics");
  common(simulate);
  simulate->add_option("--samples", o.samples, "number of paths M");
  simulate->add_option("--dt", o.dt, "SDE step");
  CLI::App* pde = app.add_subcommand("pde", "parabolic equation for V or the second moments");
  common(pde);
  pde->add_option("--mode", o.mode, "V or moments");
  pde->add_option("--f", o.f, "control spec");
  pde->add_option("--dt", o.dt, "grid step of the control");
  CLI::App* duality = app.add_subcommand("duality", "Monte-Carlo versus PDE check of E[B e_f]");
  common(duality);
  duality->add_option("--f", o.f, "control spec");
  duality->add_option("--samples", o.samples, "number of paths M");
  duality->add_option("--tol", o.tol, "discretization allowance");
  duality->add_option("--dt", o.dt, "SDE step");
  CLI::App* verify = app.add_subcommand("verify-operator", "operator assembly report");
  common(verify);
  CLI::App* moments = app.add_subcommand("moments", "Monte-Carlo versus PDE second moments");
  common(moments);
  moments->add_option("--samples", o.samples, "number of paths M");
  moments->add_option("--tol", o.tol, "discretization allowance");
  moments->add_option("--dt", o.dt, "SDE step");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::Success& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInvalidConfig;
  }

  try {
    if (o.jobs < 0) throw InvalidConfig("--jobs must be non-negative");
    if (o.jobs > 0) set_default_jobs(o.jobs);
    if (simulate->parsed()) return cmd_simulate(o, out);
    if (pde->parsed()) return cmd_pde(o, out);
    if (duality->parsed()) return cmd_duality(o, out);
    if (verify->parsed()) return cmd_verify(o, out);
    if (moments->parsed()) return cmd_moments(o, out);
  } catch (const TolExceeded& e) {
    err << "error: " << e.what() << "\n";
    return kExitTolExceeded;
  } catch (const InvalidConfig& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const DimensionMismatch& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const KernelUnderresolved& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace stochvec
