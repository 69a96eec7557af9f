#pragma once

#include <cmath>
#include <limits>

#include "permlab/errors.hpp"

namespace permlab {

/// A real number stored as sign and natural-log magnitude, so that
/// permanents and factorial-sized means do not overflow a double.
/// Zero is a separate flag; log_mag is never -inf.
class ScaledValue {
 public:
  ScaledValue() = default;  // zero

  static ScaledValue zero() { return {}; }

  static ScaledValue from_log(double log_mag, int sign = 1) {
    if (!std::isfinite(log_mag)) throw ArgumentError("ScaledValue: log magnitude must be finite");
    ScaledValue v;
    v.is_zero_ = false;
    v.log_mag_ = log_mag;
    v.sign_ = sign < 0 ? -1 : 1;
    return v;
  }

  template <class Real>
  static ScaledValue from_real(Real x) {
    if (x == Real(0)) return zero();
    if (!std::isfinite(x)) throw ArgumentError("ScaledValue: value must be finite");
    return from_log(static_cast<double>(std::log(std::fabs(x))), x < 0 ? -1 : 1);
  }

  bool is_zero() const { return is_zero_; }
  double log_mag() const { return log_mag_; }
  int sign() const { return is_zero_ ? 0 : sign_; }

  /// Converts back to a plain double; overflows to +-inf / underflows to 0
  /// exactly like std::exp.
  double value() const { return is_zero_ ? 0.0 : sign_ * std::exp(log_mag_); }

  friend ScaledValue operator*(const ScaledValue& a, const ScaledValue& b) {
    if (a.is_zero_ || b.is_zero_) return zero();
    return from_log(a.log_mag_ + b.log_mag_, a.sign_ * b.sign_);
  }

  friend ScaledValue operator/(const ScaledValue& a, const ScaledValue& b) {
    if (b.is_zero_) throw DomainError("ScaledValue: division by zero");
    if (a.is_zero_) return zero();
    return from_log(a.log_mag_ - b.log_mag_, a.sign_ * b.sign_);
  }

  /// Raises to a nonnegative integer power.
  ScaledValue pow(unsigned k) const {
    if (k == 0) return from_log(0.0);
    if (is_zero_) return zero();
    return from_log(log_mag_ * k, (k % 2 == 1) ? sign_ : 1);
  }

  friend bool operator==(const ScaledValue& a, const ScaledValue& b) {
    if (a.is_zero_ || b.is_zero_) return a.is_zero_ == b.is_zero_;
    return a.sign_ == b.sign_ && a.log_mag_ == b.log_mag_;
  }

 private:
  bool is_zero_ = true;
  double log_mag_ = 0.0;
  int sign_ = 1;
};

/// Relative difference |a/b - 1| evaluated in log space; both must be nonzero
/// with equal signs, otherwise returns +inf (or 0 when both are zero).
inline double relative_difference(const ScaledValue& a, const ScaledValue& b) {
  if (a.is_zero() && b.is_zero()) return 0.0;
  if (a.is_zero() || b.is_zero() || a.sign() != b.sign()) return std::numeric_limits<double>::infinity();
  return std::fabs(std::expm1(a.log_mag() - b.log_mag()));
}

}  // namespace permlab
