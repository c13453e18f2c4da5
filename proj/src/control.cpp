#include "stochvec/control.hpp"

#include "stochvec/errors.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace stochvec {

namespace {

std::vector<double> parse_list(const std::string& s, const std::string& whole) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw InvalidConfig("control '" + whole + "': bad number '" + item + "'");
    }
    if (used != item.size() || !std::isfinite(v)) throw InvalidConfig("control '" + whole + "': bad number '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw InvalidConfig("control '" + whole + "': empty coefficient list");
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ControlFunction ControlFunction::zero(int n) {
  ControlFunction f;
  f.c_.assign(std::max(n, 1), 0.0);
  return f;
}

ControlFunction ControlFunction::constant(std::vector<double> c) {
  if (c.empty()) throw InvalidConfig("constant control needs at least one coefficient");
  ControlFunction f;
  f.kind_ = Kind::Constant;
  f.c_ = std::move(c);
  return f;
}

ControlFunction ControlFunction::sign_flip(std::vector<double> c, double t_flip) {
  if (c.empty()) throw InvalidConfig("sign-flip control needs at least one coefficient");
  if (!(t_flip >= 0)) throw InvalidConfig("sign-flip time must be nonnegative");
  ControlFunction f;
  f.kind_ = Kind::Flip;
  f.c_ = std::move(c);
  f.t_flip_ = t_flip;
  return f;
}

ControlFunction ControlFunction::parse(const std::string& text) {
  if (text == "zero") return zero(1);
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw InvalidConfig("control '" + text + "': expected zero, const:... or flip:...");
  const std::string kind = text.substr(0, colon), rest = text.substr(colon + 1);
  if (kind == "zero") {
    try {
      return zero(std::stoi(rest));
    } catch (const std::exception&) {
      throw InvalidConfig("control '" + text + "': bad mode count");
    }
  }
  if (kind == "const") return constant(parse_list(rest, text));
  if (kind == "flip") {
    const auto at = rest.find('@');
    if (at == std::string::npos) throw InvalidConfig("control '" + text + "': flip needs '@time'");
    const auto t = parse_list(rest.substr(at + 1), text);
    if (t.size() != 1) throw InvalidConfig("control '" + text + "': one flip time expected");
    return sign_flip(parse_list(rest.substr(0, at), text), t[0]);
  }
  throw InvalidConfig("control '" + text + "': unknown kind '" + kind + "'");
}

bool ControlFunction::is_zero() const {
  if (kind_ == Kind::Zero) return true;
  for (double v : c_)
    if (v != 0.0) return false;
  return true;
}

std::vector<double> ControlFunction::at(double t) const {
  switch (kind_) {
    case Kind::Zero:
      return std::vector<double>(c_.size(), 0.0);
    case Kind::Constant:
      return c_;
    case Kind::Flip: {
      std::vector<double> v = c_;
      if (t >= t_flip_)
        for (double& x : v) x = -x;
      return v;
    }
  }
  return c_;
}

std::vector<double> ControlFunction::on_interval(int j, double dt) const { return at((j + 0.5) * dt); }

std::vector<double> ControlFunction::on_interval(int j, double dt, int K) const {
  if (n() > K) throw InvalidConfig("control uses more modes than the noise basis has");
  auto v = on_interval(j, dt);
  v.resize(K, 0.0);
  return v;
}

std::string ControlFunction::text() const {
  if (kind_ == Kind::Zero) return c_.size() == 1 ? "zero" : "zero:" + std::to_string(c_.size());
  std::string list;
  for (std::size_t i = 0; i < c_.size(); ++i) list += (i ? "," : "") + num(c_[i]);
  if (kind_ == Kind::Constant) return "const:" + list;
  return "flip:" + list + "@" + num(t_flip_);
}

}  // namespace stochvec
