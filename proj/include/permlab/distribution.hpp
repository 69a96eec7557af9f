#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "permlab/errors.hpp"

namespace permlab {

enum class DistKind { constant, uniform, exponential, lognormal };

/// Law of a single positive weight entry, restricted to families whose mean
/// (nu) and second moment (delta) have closed forms.
///
/// Sampling returns the *unit-mean* weight W = Z / nu. Callers that need Z
/// multiply by nu. Keeping the standardized draw separate makes T/mu a
/// function of W alone, so it is pathwise identical across const:c for all c
/// and across exp:lambda for all lambda.
class DistributionSpec {
 public:
  static DistributionSpec constant(double c) {
    if (!(c > 0) || !std::isfinite(c)) throw ArgumentError("const: c must be a finite value > 0");
    return DistributionSpec(DistKind::constant, c, 0.0);
  }
  static DistributionSpec uniform(double a, double b) {
    if (!(a > 0) || !(b > a) || !std::isfinite(b)) throw ArgumentError("uniform: need 0 < a < b");
    return DistributionSpec(DistKind::uniform, a, b);
  }
  static DistributionSpec exponential(double rate) {
    if (!(rate > 0) || !std::isfinite(rate)) throw ArgumentError("exp: rate must be a finite value > 0");
    return DistributionSpec(DistKind::exponential, rate, 0.0);
  }
  static DistributionSpec lognormal(double m, double s) {
    if (!std::isfinite(m) || !(s > 0) || !std::isfinite(s)) throw ArgumentError("lognormal: need finite m and s > 0");
    return DistributionSpec(DistKind::lognormal, m, s);
  }

  /// Parses `const:c`, `uniform:a,b`, `exp:lambda` or `lognormal:m,s`.
  static DistributionSpec parse(std::string_view text);

  DistKind kind() const { return kind_; }
  double p1() const { return p1_; }
  double p2() const { return p2_; }

  /// E Z.
  double nu() const {
    switch (kind_) {
      case DistKind::constant: return p1_;
      case DistKind::uniform: return (p1_ + p2_) / 2;
      case DistKind::exponential: return 1 / p1_;
      case DistKind::lognormal: return std::exp(p1_ + p2_ * p2_ / 2);
    }
    return 0;
  }

  /// E Z^2.
  double delta() const {
    switch (kind_) {
      case DistKind::constant: return p1_ * p1_;
      case DistKind::uniform: return (p1_ * p1_ + p1_ * p2_ + p2_ * p2_) / 3;
      case DistKind::exponential: return 2 / (p1_ * p1_);
      case DistKind::lognormal: return std::exp(2 * p1_ + 2 * p2_ * p2_);
    }
    return 0;
  }

  /// delta / nu^2, computed from the family's closed form rather than by
  /// dividing the two moments, so it is exact for const (1) and exp (2).
  double delta_over_nu2() const {
    switch (kind_) {
      case DistKind::constant: return 1.0;
      case DistKind::uniform: {
        double s = p1_ + p2_;
        return 4 * (p1_ * p1_ + p1_ * p2_ + p2_ * p2_) / (3 * s * s);
      }
      case DistKind::exponential: return 2.0;
      case DistKind::lognormal: return std::exp(p2_ * p2_);
    }
    return 0;
  }

  /// Draws W = Z / nu. `uniform01` must yield values strictly inside (0, 1).
  ///
  /// Transforms: exponential by inverse CDF (W = -ln(1-U)); lognormal by
  /// Box-Muller on two uniforms, cosine branch (W = exp(s N - s^2/2));
  /// uniform by the affine map a + (b-a)U.
  template <class UniformSource>
  double sample_unit(UniformSource&& uniform01) const {
    switch (kind_) {
      case DistKind::constant: return 1.0;
      case DistKind::uniform: return (p1_ + (p2_ - p1_) * uniform01()) / nu();
      case DistKind::exponential: return -std::log1p(-uniform01());
      case DistKind::lognormal: {
        double u1 = uniform01();
        double u2 = uniform01();
        double normal = std::sqrt(-2 * std::log(u1)) * std::cos(2 * std::numbers::pi * u2);
        return std::exp(p2_ * normal - p2_ * p2_ / 2);
      }
    }
    return 1.0;
  }

  /// Canonical text form, parseable by parse().
  std::string to_string() const;

  friend bool operator==(const DistributionSpec&, const DistributionSpec&) = default;

 private:
  DistributionSpec(DistKind k, double a, double b) : kind_(k), p1_(a), p2_(b) {}

  DistKind kind_;
  double p1_;
  double p2_;
};

namespace detail {

inline double parse_real(std::string_view tok, std::string_view what) {
  while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
  while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty())
    throw ParseError("invalid number '" + std::string(tok) + "' in " + std::string(what));
  return v;
}

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline DistributionSpec DistributionSpec::parse(std::string_view text) {
  auto colon = text.find(':');
  if (colon == std::string_view::npos) throw ParseError("distribution '" + std::string(text) + "' lacks ':'");
  std::string_view name = text.substr(0, colon);
  std::string_view rest = text.substr(colon + 1);
  std::vector<double> params;
  while (true) {
    auto comma = rest.find(',');
    params.push_back(detail::parse_real(rest.substr(0, comma), text));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  auto want = [&](std::size_t k) {
    if (params.size() != k)
      throw ParseError("distribution '" + std::string(text) + "' expects " + std::to_string(k) + " parameter(s)");
  };
  if (name == "const") {
    want(1);
    return constant(params[0]);
  }
  if (name == "uniform") {
    want(2);
    return uniform(params[0], params[1]);
  }
  if (name == "exp") {
    want(1);
    return exponential(params[0]);
  }
  if (name == "lognormal") {
    want(2);
    return lognormal(params[0], params[1]);
  }
  throw ParseError("unknown distribution family '" + std::string(name) + "'");
}

inline std::string DistributionSpec::to_string() const {
  using detail::format_g17;
  switch (kind_) {
    case DistKind::constant: return "const:" + format_g17(p1_);
    case DistKind::uniform: return "uniform:" + format_g17(p1_) + "," + format_g17(p2_);
    case DistKind::exponential: return "exp:" + format_g17(p1_);
    case DistKind::lognormal: return "lognormal:" + format_g17(p1_) + "," + format_g17(p2_);
  }
  return {};
}

}  // namespace permlab
