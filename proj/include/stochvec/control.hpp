#pragma once

#include <string>
#include <vector>

namespace stochvec {

/// Piecewise-constant control f: [0, T] -> R^n driving stochastic
/// exponentials and the drift h = Sum_k f_k sigma_k. Modes beyond n are zero.
///
/// Text form: "zero", "zero:n", "const:c1,...,cn", "flip:c1,...,cn@t"
/// (f = c before t and -c from t on).
class ControlFunction {
 public:
  static ControlFunction zero(int n = 1);
  static ControlFunction constant(std::vector<double> c);
  static ControlFunction sign_flip(std::vector<double> c, double t_flip);
  static ControlFunction parse(const std::string& text);

  int n() const { return static_cast<int>(c_.size()); }
  bool is_zero() const;
  std::vector<double> at(double t) const;
  /// Value used on the grid interval [j dt, (j + 1) dt): f at the interval midpoint.
  std::vector<double> on_interval(int j, double dt) const;
  /// Same as on_interval, padded with zeros to K entries.
  std::vector<double> on_interval(int j, double dt, int K) const;
  std::string text() const;

 private:
  enum class Kind { Zero, Constant, Flip };
  Kind kind_ = Kind::Zero;
  std::vector<double> c_;
  double t_flip_ = 0.0;
};

}  // namespace stochvec
