#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "permlab/errors.hpp"
#include "permlab/model.hpp"
#include "permlab/model_spec.hpp"
#include "permlab/scaled_value.hpp"

namespace permlab {

using Rational = boost::multiprecision::cpp_rational;

/// b_j = sum_{l=0}^{j} (-1)^l / l!, exactly. j! * b_j is the number of
/// derangements of j items.
inline Rational subfactorial_b(unsigned j) {
  Rational sum = 0;
  Rational term = 1;  // (-1)^l / l!
  for (unsigned l = 0; l <= j; ++l) {
    if (l > 0) term = -term / l;
    sum += term;
  }
  return sum;
}

inline constexpr unsigned kExactSubfactorialMax = 170;

/// b_j as long double. Exact rationals are rounded once for j <= 170; beyond
/// that b_j equals 1/e to far below long double resolution.
inline long double subfactorial_b_real(unsigned j) {
  static const std::array<long double, kExactSubfactorialMax + 1> table = [] {
    std::array<long double, kExactSubfactorialMax + 1> t{};
    Rational sum = 0;
    Rational term = 1;
    for (unsigned l = 0; l <= kExactSubfactorialMax; ++l) {
      if (l > 0) term = -term / l;
      sum += term;
      t[l] = static_cast<long double>(sum);
    }
    return t;
  }();
  if (j <= kExactSubfactorialMax) return table[j];
  return std::exp(-1.0L);
}

/// E T_n = prod r_i * nu^n * n! / n^n, in log space.
inline ScaledValue mu_n(const ModelSpec& spec) {
  const double n = static_cast<double>(spec.n());
  double log_mu = spec.n() * std::log(spec.dist().nu()) + std::lgamma(n + 1) - n * std::log(n);
  for (int r : spec.r()) log_mu += std::log(static_cast<double>(r));
  return ScaledValue::from_log(log_mu);
}

/// r^n n! / n^n.
inline ScaledValue vdw_bound(std::size_t n, int r) {
  if (n == 0 || r < 1 || static_cast<std::size_t>(r) > n)
    throw ArgumentError("vdw_bound: need 1 <= r <= n");
  const double nd = static_cast<double>(n);
  return ScaledValue::from_log(nd * std::log(static_cast<double>(r)) + std::lgamma(nd + 1) - nd * std::log(nd));
}

struct AlphaBeta {
  double alpha_up;
  double beta_up;
  double alpha_low;
  double beta_low;
};

namespace detail {

inline double log_alpha(std::size_t n, int r) {
  const double nd = static_cast<double>(n);
  const double rd = r;
  return nd * (std::log(nd * (rd - 1)) - std::log(rd * (nd - 1)));
}

}  // namespace detail

/// alpha = (n(r-1) / (r(n-1)))^n at r_up / r_low, and
/// beta_up  = delta r_up (n-1) / (nu^2 r_low (r_up - 1)),
/// beta_low = delta r_low (n-1) / (nu^2 r_up (r_low - 1)).
inline AlphaBeta alpha_beta(const ModelSpec& spec) {
  const std::size_t n = spec.n();
  const int lo = spec.r_low();
  const int up = spec.r_up();
  if (n < 2) throw DomainError("alpha_beta: requires n >= 2");
  if (lo < 2) throw DomainError("alpha_beta: requires r_low >= 2 (formulas divide by r - 1)");
  const double ratio = spec.dist().delta_over_nu2();
  const double nm1 = static_cast<double>(n - 1);
  AlphaBeta ab{};
  ab.alpha_up = std::exp(detail::log_alpha(n, up));
  ab.alpha_low = std::exp(detail::log_alpha(n, lo));
  ab.beta_up = ratio * up * nm1 / (static_cast<double>(lo) * (up - 1));
  ab.beta_low = ratio * lo * nm1 / (static_cast<double>(up) * (lo - 1));
  return ab;
}

/// sum_{k=0}^{n} beta^k / k! * b_{n-k}. All terms are nonnegative; beta^k/k!
/// is formed in log space.
inline long double derangement_weighted_sum(std::size_t n, double beta) {
  if (!(beta > 0)) throw DomainError("derangement_weighted_sum: beta must be > 0");
  const long double log_beta = std::log(static_cast<long double>(beta));
  long double sum = 0.0L;
  for (std::size_t k = 0; k <= n; ++k) {
    const long double b = subfactorial_b_real(static_cast<unsigned>(n - k));
    if (b == 0.0L) continue;
    sum += std::exp(k * log_beta - std::lgamma(static_cast<long double>(k) + 1)) * b;
  }
  return sum;
}

struct SecondMomentBounds {
  double lower;
  double upper;
};

/// True when r_low >= 6 delta / nu^2.
inline bool bounds_hypothesis_holds(const ModelSpec& spec) {
  return spec.r_low() >= 6.0 * spec.dist().delta_over_nu2();
}

/// alpha_low e^{beta_low - 1} (1 - 2e/n^2) and alpha_up e^{beta_up - 1} (1 + 2e/n^2):
/// the sandwich on E T^2 / mu^2, asserted only for large n.
inline SecondMomentBounds second_moment_bounds(const ModelSpec& spec) {
  if (spec.n() < 2) throw DomainError("second_moment_bounds: requires n >= 2");
  if (!bounds_hypothesis_holds(spec)) throw DomainError("r_low ≥ 6δ/ν² not met");
  const AlphaBeta ab = alpha_beta(spec);
  const double n = static_cast<double>(spec.n());
  const double slack = 2 * std::numbers::e / (n * n);
  return {std::exp(std::log(ab.alpha_low) + ab.beta_low - 1) * (1 - slack),
          std::exp(std::log(ab.alpha_up) + ab.beta_up - 1) * (1 + slack)};
}

/// E T^2 / mu^2 for homogeneous rows (all r_i = r):
/// alpha * sum_k beta^k / k! * b_{n-k}, which is exact in that case.
inline double exact_second_moment_homogeneous(std::size_t n, int r, const DistributionSpec& dist) {
  if (r < 2) throw DomainError("exact_second_moment_homogeneous: requires r >= 2");
  const AlphaBeta ab = alpha_beta(ModelSpec::homogeneous(n, r, dist));
  return static_cast<double>(static_cast<long double>(ab.alpha_up) * derangement_weighted_sum(n, ab.beta_up));
}

/// Bounds on E T^2 / mu^2 that hold at every n, obtained by bounding each
/// pair term between alpha_low beta_low^k and alpha_up beta_up^k before any
/// asymptotic step.
inline SecondMomentBounds pre_approximation_bounds(const ModelSpec& spec) {
  const AlphaBeta ab = alpha_beta(spec);
  return {static_cast<double>(ab.alpha_low * derangement_weighted_sum(spec.n(), ab.beta_low)),
          static_cast<double>(ab.alpha_up * derangement_weighted_sum(spec.n(), ab.beta_up))};
}

namespace detail {

inline void check_permutation(std::span<const std::size_t> sigma, std::size_t n, const char* name) {
  if (sigma.size() != n) throw ArgumentError(std::string("pair_moment: ") + name + " has wrong length");
  std::vector<char> seen(n, 0);
  for (std::size_t v : sigma) {
    if (v >= n || seen[v]) throw ArgumentError(std::string("pair_moment: ") + name + " is not a permutation");
    seen[v] = 1;
  }
}

// Per-row factors of E R_{s1} R_{s2}: rows where the permutations agree
// contribute delta p_i, rows where they differ contribute
// nu^2 r_i (r_i - 1) / (n (n - 1)).
struct PairFactors {
  std::vector<long double> same;
  std::vector<long double> differ;

  explicit PairFactors(const ModelSpec& spec) : same(spec.n()), differ(spec.n()) {
    const long double n = static_cast<long double>(spec.n());
    const long double nu = spec.dist().nu();
    const long double delta = spec.dist().delta();
    for (std::size_t i = 0; i < spec.n(); ++i) {
      const long double r = spec.r(i);
      same[i] = delta * r / n;
      differ[i] = spec.n() > 1 ? nu * nu * r * (r - 1) / (n * (n - 1)) : 0.0L;
    }
  }
};

}  // namespace detail

/// E R_{sigma1} R_{sigma2}, the expected product of two permutation terms.
inline double pair_moment(std::span<const std::size_t> sigma1, std::span<const std::size_t> sigma2,
                          const ModelSpec& spec) {
  detail::check_permutation(sigma1, spec.n(), "sigma1");
  detail::check_permutation(sigma2, spec.n(), "sigma2");
  const detail::PairFactors f(spec);
  long double prod = 1.0L;
  for (std::size_t i = 0; i < spec.n(); ++i) prod *= sigma1[i] == sigma2[i] ? f.same[i] : f.differ[i];
  return static_cast<double>(prod);
}

inline constexpr std::size_t kPairBruteMaxN = 7;

struct SecondMoment {
  double second_moment;  // E T^2
  double ratio;          // E T^2 / mu^2
};

/// E T^2 as the sum of pair_moment over all (n!)^2 permutation pairs.
inline SecondMoment brute_second_moment_pairs(const ModelSpec& spec) {
  const std::size_t n = spec.n();
  if (n > kPairBruteMaxN)
    throw SizeLimitError("brute_second_moment_pairs: n = " + std::to_string(n) + " exceeds limit 7");
  std::vector<std::vector<std::size_t>> perms;
  std::vector<std::size_t> sigma(n);
  std::iota(sigma.begin(), sigma.end(), 0);
  do perms.push_back(sigma);
  while (std::next_permutation(sigma.begin(), sigma.end()));

  const detail::PairFactors f(spec);
  long double total = 0.0L;
  for (const auto& s1 : perms) {
    long double inner = 0.0L;
    for (const auto& s2 : perms) {
      long double prod = 1.0L;
      for (std::size_t i = 0; i < n; ++i) prod *= s1[i] == s2[i] ? f.same[i] : f.differ[i];
      inner += prod;
    }
    total += inner;
  }
  const double mu = mu_n(spec).value();
  return {static_cast<double>(total), static_cast<double>(total / (static_cast<long double>(mu) * mu))};
}

inline constexpr std::size_t kEnumerateMomentsMaxN = 6;

/// Integer tallies from enumerating the class; moments for any weight law
/// follow from them and (nu, delta).
struct EnumerationTally {
  std::size_t n = 0;
  std::uint64_t class_size = 0;
  std::uint64_t per_sum = 0;                   // sum over X of per(X)
  std::vector<std::uint64_t> overlap_counts;   // [k] = # (X, s1, s2) with s1, s2 in supp X, |s1 ∩ s2| = k
};

/// Visits every X in the class, lists the permutations supported by X, and
/// counts ordered pairs of them by number of agreeing rows.
inline EnumerationTally enumerate_class_tally(const ModelSpec& spec) {
  const std::size_t n = spec.n();
  if (n > kEnumerateMomentsMaxN)
    throw SizeLimitError("exact_moments_enumerate: n = " + std::to_string(n) + " exceeds limit 6");
  EnumerationTally tally;
  tally.n = n;
  tally.overlap_counts.assign(n + 1, 0);
  std::vector<std::array<std::uint8_t, kEnumerateMomentsMaxN>> supported;
  std::array<std::uint8_t, kEnumerateMomentsMaxN> current{};
  for_each_constraint_support(spec, [&](std::span<const std::uint32_t> masks) {
    ++tally.class_size;
    supported.clear();
    auto extend = [&](auto&& self, std::size_t row, std::uint32_t used) -> void {
      if (row == n) {
        supported.push_back(current);
        return;
      }
      std::uint32_t free = masks[row] & ~used;
      while (free) {
        const auto col = static_cast<std::uint8_t>(std::countr_zero(free));
        free &= free - 1;
        current[row] = col;
        self(self, row + 1, used | (std::uint32_t{1} << col));
      }
    };
    extend(extend, 0, 0);
    tally.per_sum += supported.size();
    for (const auto& s1 : supported)
      for (const auto& s2 : supported) {
        std::size_t agree = 0;
        for (std::size_t i = 0; i < n; ++i) agree += s1[i] == s2[i];
        ++tally.overlap_counts[agree];
      }
  });
  return tally;
}

struct ExactMoments {
  double mean;           // E T_n
  double second_moment;  // E T_n^2
};

/// Applies the weight law to the integer tallies: for fixed X, E over Z of
/// per(Y) is nu^n per(X), and each pair with k agreeing rows contributes
/// delta^k nu^{2(n-k)}.
inline ExactMoments moments_from_tally(const EnumerationTally& t, const DistributionSpec& dist) {
  const long double nu = dist.nu();
  const long double delta = dist.delta();
  const long double size = static_cast<long double>(t.class_size);
  long double second = 0.0L;
  for (std::size_t k = 0; k <= t.n; ++k)
    second += static_cast<long double>(t.overlap_counts[k]) * std::pow(delta, static_cast<long double>(k)) *
              std::pow(nu, static_cast<long double>(2 * (t.n - k)));
  const long double mean = std::pow(nu, static_cast<long double>(t.n)) * static_cast<long double>(t.per_sum) / size;
  return {static_cast<double>(mean), static_cast<double>(second / size)};
}

/// Ground-truth (E T_n, E T_n^2) by averaging over every X in the class.
inline ExactMoments exact_moments_enumerate(const ModelSpec& spec) {
  return moments_from_tally(enumerate_class_tally(spec), spec.dist());
}

struct ConditionDiagnostics {
  double a_n;                   // sqrt(n) delta / (nu^2 r_low)
  double c_n;                   // n (delta / (nu^2 r_low) - 1 / r_up), signed
  std::optional<double> theta;  // (1 - 1/r) e^{1/(r-1)}, homogeneous r >= 2 only
};

inline ConditionDiagnostics condition_check(const ModelSpec& spec) {
  const double n = static_cast<double>(spec.n());
  const double q = spec.dist().delta_over_nu2() / spec.r_low();
  ConditionDiagnostics d{std::sqrt(n) * q, n * (q - 1.0 / spec.r_up()), std::nullopt};
  if (spec.is_homogeneous() && spec.r_low() >= 2) {
    const double r = spec.r_low();
    d.theta = (1 - 1 / r) * std::exp(1 / (r - 1));
  }
  return d;
}

/// Every closed-form quantity for one spec. Fields whose hypotheses fail are
/// empty and the reason is kept in the matching *_error string.
struct MomentReport {
  ScaledValue mu_n;
  std::optional<ScaledValue> vdw;
  std::optional<AlphaBeta> alpha_beta;
  std::string alpha_beta_error;
  std::optional<SecondMomentBounds> bounds;
  std::string bounds_error;
  std::optional<double> exact_ratio;  // homogeneous r >= 2 only
  ConditionDiagnostics diagnostics;
};

inline MomentReport moment_report(const ModelSpec& spec) {
  MomentReport rep{mu_n(spec), std::nullopt, std::nullopt, {}, std::nullopt, {}, std::nullopt, condition_check(spec)};
  if (spec.is_homogeneous()) rep.vdw = vdw_bound(spec.n(), spec.r_low());
  try {
    rep.alpha_beta = alpha_beta(spec);
  } catch (const DomainError& e) {
    rep.alpha_beta_error = e.what();
  }
  try {
    rep.bounds = second_moment_bounds(spec);
  } catch (const DomainError& e) {
    rep.bounds_error = e.what();
  }
  if (spec.is_homogeneous() && spec.r_low() >= 2)
    rep.exact_ratio = exact_second_moment_homogeneous(spec.n(), spec.r_low(), spec.dist());
  return rep;
}

}  // namespace permlab
