#pragma once

#include "stochvec/analytic_field.hpp"
#include "stochvec/characteristics.hpp"
#include "stochvec/control.hpp"
#include "stochvec/grid.hpp"
#include "stochvec/noise.hpp"
#include "stochvec/parabolic.hpp"

#include <json.hpp>

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

namespace stochvec {

/// Fully resolved experiment parameters. Text form: one `key = value` per
/// line, `#` starts a comment, unknown keys are rejected.
///
/// Field specs (B0, v, basis modes), numbers separated by commas:
///   zero | const:c1..cd | gaussian:c1..cd,w,e1..ed | gaussian-curl:c1..cd,w,amp
///   taylor-green[:amp] | shear:amp,k1..kd,e1..ed[,phase] | singular[:alpha,r_in,r_out]
///   random:kmax,seed[,scale[,divfree]]
/// and sums `spec + spec`. Basis: constant[:scale] | sinusoidal | spec; spec; ...
/// v_eps: 0 (no mollification), an absolute width, or a multiple of dx as `4dx`.
struct ExperimentConfig {
  int dim = 2;
  double L = M_PI;
  int n = 64;
  double T = 0.25;
  int steps = 64;
  double cfl = 0.9;
  std::string basis = "constant";
  std::string v = "zero";
  std::string v_eps = "0";
  std::string B0 = "gaussian-curl:0.2,-0.1,0.6,1";
  std::string f = "zero";
  std::size_t M = 1000;
  std::uint64_t seed = 1;
  double tol = 0.02;
  std::string h_sign = "plus";
  std::string jacobian = "inverse";
  std::size_t check_stride = 16;
  double tol_inv = 1e-2;
  std::vector<double> checkpoints;
};

/// Assigns one key; throws InvalidConfig naming the key.
void set_config_key(ExperimentConfig& c, const std::string& key, const std::string& value);
/// Throws InvalidConfig with `source:line:` prefixes.
ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);
/// Cross-field validation (grid, times, specs parse).
void validate_config(const ExperimentConfig& c);
nlohmann::ordered_json config_json(const ExperimentConfig& c);

GridSpec grid_of(const ExperimentConfig& c);
FieldPtr parse_field(const std::string& spec, int dim);
NoiseBasis parse_basis(const std::string& spec, int dim);
double resolve_eps(const std::string& text, double dx);
/// v, mollified on the grid when v_eps > 0; null for `zero`.
FieldPtr build_drift(const ExperimentConfig& c);
FlowOptions flow_options(const ExperimentConfig& c);
ParabolicOptions parabolic_options(const ExperimentConfig& c);

}  // namespace stochvec
