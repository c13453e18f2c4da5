#include "stochvec/config.hpp"

#include "stochvec/duality.hpp"
#include "stochvec/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace stochvec {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  const std::string t = trim(s);
  if (t == "pi") return M_PI;
  double v = 0;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size() || t.empty())
    throw InvalidConfig(what + ": expected a number, got '" + s + "'");
  return v;
}

template <class Int>
Int to_int(const std::string& s, const std::string& what) {
  const std::string t = trim(s);
  Int v = 0;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size() || t.empty())
    throw InvalidConfig(what + ": expected an integer, got '" + s + "'");
  return v;
}

std::vector<double> numbers(const std::string& s, const std::string& what) {
  std::vector<double> out;
  if (trim(s).empty()) return out;
  for (const auto& p : split(s, ',')) out.push_back(to_double(p, what));
  return out;
}

Vec take(const std::vector<double>& a, std::size_t from, int d) {
  Vec v(d);
  for (int i = 0; i < d; ++i) v[i] = a[from + i];
  return v;
}

FieldPtr parse_term(const std::string& text, int dim) {
  const auto colon = text.find(':');
  const std::string name = trim(text.substr(0, colon));
  const std::vector<double> a = colon == std::string::npos ? std::vector<double>{} : numbers(text.substr(colon + 1), name);
  const std::size_t d = dim;
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (a.size() < lo || a.size() > hi)
      throw InvalidConfig("field '" + text + "': expected " + std::to_string(lo) +
                          (hi != lo ? ".." + std::to_string(hi) : "") + " numbers");
  };
  if (name == "zero") {
    need(0, 0);
    return std::make_shared<ZeroField>(dim);
  }
  if (name == "const") {
    need(d, d);
    return std::make_shared<ConstantField>(take(a, 0, dim));
  }
  if (name == "gaussian") {
    need(2 * d + 1, 2 * d + 1);
    return std::make_shared<GaussianField>(take(a, 0, dim), a[d], take(a, d + 1, dim));
  }
  if (name == "gaussian-curl") {
    need(d + 2, d == 3 ? d + 5 : d + 2);
    const Vec axis = a.size() == d + 5 ? take(a, d + 2, dim) : Vec();
    return std::make_shared<GaussianCurlField>(take(a, 0, dim), a[d], a[d + 1], axis);
  }
  if (name == "taylor-green") {
    need(0, 1);
    if (dim != 2) throw InvalidConfig("taylor-green needs dim = 2");
    return make_taylor_green(a.empty() ? 1.0 : a[0]);
  }
  if (name == "shear") {
    need(2 * d + 1, 2 * d + 2);
    return make_shear(a[0], take(a, 1, dim), take(a, d + 1, dim), a.size() > 2 * d + 1 ? a[2 * d + 1] : 0.0);
  }
  if (name == "singular") {
    need(0, 3);
    if (dim != 2) throw InvalidConfig("singular vortex needs dim = 2");
    if (a.empty()) return std::make_shared<SingularVortexField>(0.5, 1.0, 2.0);
    need(3, 3);
    return std::make_shared<SingularVortexField>(a[0], a[1], a[2]);
  }
  if (name == "random") {
    need(2, 4);
    return make_random_fourier(dim, static_cast<int>(a[0]), static_cast<std::uint64_t>(a[1]), a.size() < 4 || a[3] != 0,
                               a.size() > 2 ? a[2] : 1.0);
  }
  throw InvalidConfig("unknown field '" + name + "'");
}

JacobianMode jacobian_mode(const std::string& s) {
  if (s == "forward") return JacobianMode::ForwardReintegration;
  if (s == "inverse") return JacobianMode::InverseFlow;
  throw InvalidConfig("jacobian: expected forward or inverse, got '" + s + "'");
}

HSign h_sign(const std::string& s) {
  if (s == "plus") return HSign::Plus;
  if (s == "minus") return HSign::Minus;
  throw InvalidConfig("h_sign: expected plus or minus, got '" + s + "'");
}

}  // namespace

void set_config_key(ExperimentConfig& c, const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "dim")
    c.dim = to_int<int>(value, key);
  else if (key == "L")
    c.L = to_double(value, key);
  else if (key == "n")
    c.n = to_int<int>(value, key);
  else if (key == "T")
    c.T = to_double(value, key);
  else if (key == "steps")
    c.steps = to_int<int>(value, key);
  else if (key == "cfl")
    c.cfl = to_double(value, key);
  else if (key == "basis")
    c.basis = value;
  else if (key == "v")
    c.v = value;
  else if (key == "v_eps")
    c.v_eps = value;
  else if (key == "B0")
    c.B0 = value;
  else if (key == "f")
    c.f = value;
  else if (key == "M")
    c.M = to_int<std::size_t>(value, key);
  else if (key == "seed")
    c.seed = to_int<std::uint64_t>(value, key);
  else if (key == "tol")
    c.tol = to_double(value, key);
  else if (key == "h_sign")
    c.h_sign = value;
  else if (key == "jacobian")
    c.jacobian = value;
  else if (key == "check_stride")
    c.check_stride = to_int<std::size_t>(value, key);
  else if (key == "tol_inv")
    c.tol_inv = to_double(value, key);
  else if (key == "checkpoints")
    c.checkpoints = numbers(value, key);
  else
    throw InvalidConfig("unknown key '" + key + "'");
}

ExperimentConfig parse_config(std::istream& in, const std::string& source) {
  ExperimentConfig c;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(number) + ": ";
    if (eq == std::string::npos) throw InvalidConfig(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    try {
      set_config_key(c, key, line.substr(eq + 1));
    } catch (const InvalidConfig& e) {
      throw InvalidConfig(where + e.what());
    }
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open config file '" + path + "'");
  return parse_config(in, path);
}

GridSpec grid_of(const ExperimentConfig& c) { return GridSpec{c.dim, c.L, c.n}; }

FieldPtr parse_field(const std::string& spec, int dim) {
  const auto terms = split(spec, '+');
  if (terms.empty() || (terms.size() == 1 && terms[0].empty())) throw InvalidConfig("empty field spec");
  if (terms.size() == 1) return parse_term(terms[0], dim);
  std::vector<std::pair<double, FieldPtr>> parts;
  for (const auto& t : terms) parts.emplace_back(1.0, parse_term(t, dim));
  return std::make_shared<SumField>(parts);
}

NoiseBasis parse_basis(const std::string& spec, int dim) {
  const std::string s = trim(spec);
  if (s == "sinusoidal") {
    if (dim != 2) throw InvalidConfig("basis: sinusoidal needs dim = 2");
    return sinusoidal_basis();
  }
  if (s.rfind("constant", 0) == 0) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) {
      if (s != "constant") throw InvalidConfig("basis: unknown preset '" + s + "'");
      return constant_basis(dim);
    }
    return constant_basis(dim, to_double(s.substr(colon + 1), "basis scale"));
  }
  std::vector<FieldPtr> modes;
  for (const auto& m : split(s, ';'))
    if (!m.empty()) modes.push_back(parse_field(m, dim));
  if (modes.empty()) throw InvalidConfig("basis: no modes");
  return NoiseBasis(dim, modes);
}

double resolve_eps(const std::string& text, double dx) {
  const std::string t = trim(text);
  if (t.size() > 2 && t.substr(t.size() - 2) == "dx") return to_double(t.substr(0, t.size() - 2), "v_eps") * dx;
  const double e = to_double(t, "v_eps");
  if (e < 0) throw InvalidConfig("v_eps must be non-negative");
  return e;
}

void validate_config(const ExperimentConfig& c) {
  if (c.dim != 2 && c.dim != 3) throw InvalidConfig("dim: must be 2 or 3");
  if (!(c.L > 0)) throw InvalidConfig("L: must be positive");
  if (c.n < 4) throw InvalidConfig("n: must be at least 4");
  if (!(c.T > 0)) throw InvalidConfig("T: must be positive");
  if (c.steps < 1) throw InvalidConfig("steps: must be positive");
  if (!(c.cfl > 0) || c.cfl > 1) throw InvalidConfig("cfl: must lie in (0, 1]");
  if (c.M < 2) throw InvalidConfig("M: at least two samples are needed");
  if (!(c.tol >= 0)) throw InvalidConfig("tol: must be non-negative");
  if (!(c.tol_inv > 0)) throw InvalidConfig("tol_inv: must be positive");
  for (double t : c.checkpoints)
    if (!(t >= 0) || t > c.T) throw InvalidConfig("checkpoints: times must lie in [0, T]");
  h_sign(c.h_sign);
  jacobian_mode(c.jacobian);
  const NoiseBasis basis = parse_basis(c.basis, c.dim);
  parse_field(c.B0, c.dim);
  parse_field(c.v, c.dim);
  resolve_eps(c.v_eps, grid_of(c).dx());
  if (ControlFunction::parse(c.f).n() > basis.K()) throw InvalidConfig("f: more entries than noise modes");
}

nlohmann::ordered_json config_json(const ExperimentConfig& c) {
  return nlohmann::ordered_json{{"dim", c.dim},     {"L", c.L},
                                {"n", c.n},         {"T", c.T},
                                {"steps", c.steps}, {"cfl", c.cfl},
                                {"basis", c.basis}, {"v", c.v},
                                {"v_eps", c.v_eps}, {"B0", c.B0},
                                {"f", c.f},         {"M", c.M},
                                {"seed", c.seed},   {"tol", c.tol},
                                {"h_sign", c.h_sign}, {"jacobian", c.jacobian},
                                {"check_stride", c.check_stride}, {"tol_inv", c.tol_inv},
                                {"checkpoints", c.checkpoints}};
}

FieldPtr build_drift(const ExperimentConfig& c) {
  if (trim(c.v) == "zero") return nullptr;
  const FieldPtr v = parse_field(c.v, c.dim);
  const GridSpec spec = grid_of(c);
  const double eps = resolve_eps(c.v_eps, spec.dx());
  if (eps == 0) return v;
  return mollified_drift(*v, eps, spec);
}

FlowOptions flow_options(const ExperimentConfig& c) {
  FlowOptions o;
  o.jacobian = jacobian_mode(c.jacobian);
  o.check_stride = c.check_stride;
  o.tol_inv = c.tol_inv;
  return o;
}

ParabolicOptions parabolic_options(const ExperimentConfig& c) {
  ParabolicOptions o;
  o.h_sign = h_sign(c.h_sign);
  o.cfl = c.cfl;
  return o;
}

}  // namespace stochvec
