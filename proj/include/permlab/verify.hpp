#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "permlab/moments.hpp"

namespace permlab {

/// Outcome of the enumeration-vs-closed-form oracle suite.
struct VerifyReport {
  std::size_t checks = 0;
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

using MeanFormula = std::function<ScaledValue(const ModelSpec&)>;

inline constexpr double kVerifyRelTol = 1e-10;

/// All r vectors in [1, n]^n, or only nondecreasing ones when `sorted_only`.
/// Row order does not change the law of per(Y), so the sorted vectors cover
/// every class up to relabeling.
inline std::vector<std::vector<int>> r_vectors(std::size_t n, bool sorted_only) {
  std::vector<std::vector<int>> out;
  std::vector<int> r(n, 1);
  while (true) {
    if (!sorted_only || std::is_sorted(r.begin(), r.end())) out.push_back(r);
    std::size_t i = n;
    while (i > 0 && r[i - 1] == static_cast<int>(n)) r[--i] = 1;
    if (i == 0) break;
    ++r[i - 1];
  }
  return out;
}

namespace detail {

inline std::string rational_text(const Rational& q) {
  std::ostringstream s;
  s << numerator(q);
  if (denominator(q) != 1) s << '/' << denominator(q);
  return s.str();
}

inline std::string spec_label(const ModelSpec& spec) {
  std::string s = "(" + std::to_string(spec.n()) + ",(";
  for (std::size_t i = 0; i < spec.n(); ++i) s += (i ? "," : "") + std::to_string(spec.r(i));
  std::string d = spec.dist().to_string();
  d.erase(std::remove(d.begin(), d.end(), ':'), d.end());
  return s + ")," + d + ")";
}

inline double rel_err(double a, double b) { return std::fabs(a - b) / std::fabs(b); }

}  // namespace detail

/// Exact (E T, E T^2) as rationals for integer-valued nu and delta.
inline std::pair<Rational, Rational> exact_rational_moments(const EnumerationTally& t, long nu, long delta) {
  Rational mean = Rational(t.per_sum) / t.class_size;
  for (std::size_t i = 0; i < t.n; ++i) mean *= nu;
  Rational second = 0;
  for (std::size_t k = 0; k <= t.n; ++k) {
    Rational term = t.overlap_counts[k];
    for (std::size_t i = 0; i < k; ++i) term *= delta;
    for (std::size_t i = 0; i < 2 * (t.n - k); ++i) term *= nu;
    second += term;
  }
  return {mean, second / t.class_size};
}

struct VerifyOptions {
  std::size_t max_n = 5;
  /// When false, n = 5 visits only nondecreasing r vectors (126 instead of 3125).
  bool all_r_vectors = true;
};

/// Cross-checks, for every class with n <= max_n and weights const:1 and exp:1:
///   mean formula == enumeration mean,
///   pair-sum second moment == enumeration second moment,
///   homogeneous closed form * mu^2 == pair-sum second moment.
inline VerifyReport run_verification(std::ostream& out, const MeanFormula& mean_formula = mu_n,
                                     VerifyOptions options = {}) {
  VerifyReport rep;
  const std::vector<DistributionSpec> dists = {DistributionSpec::constant(1), DistributionSpec::exponential(1)};
  auto check = [&](bool pass, const std::string& what) {
    ++rep.checks;
    if (!pass) {
      rep.failures.push_back(what);
      out << "FAIL " << what << '\n';
    }
  };

  // Anchors with exact fractions.
  for (const std::vector<int>& r : {std::vector<int>{2, 2, 2}, std::vector<int>{1, 2, 3}}) {
    const ModelSpec spec(3, r, dists[0]);
    const EnumerationTally t = enumerate_class_tally(spec);
    const auto [mean, second] = exact_rational_moments(t, 1, 1);
    const double formula = mean_formula(spec).value();
    const double pairs = brute_second_moment_pairs(spec).second_moment;
    const bool pass = detail::rel_err(formula, static_cast<double>(mean)) < kVerifyRelTol &&
                      detail::rel_err(pairs, static_cast<double>(second)) < kVerifyRelTol;
    check(pass, detail::spec_label(spec) + ": mu = " + detail::format_g17(formula) + " vs ET = " +
                    detail::rational_text(mean) + ", pairs = " + detail::format_g17(pairs) +
                    " vs ET² = " + detail::rational_text(second));
    out << detail::spec_label(spec) << ": ET=" << detail::rational_text(mean)
        << " ET²=" << detail::rational_text(second) << (pass ? " ✓" : " ✗") << '\n';
  }

  for (std::size_t n = 1; n <= options.max_n; ++n) {
    const bool sorted_only = n >= 5 && !options.all_r_vectors;
    std::size_t specs = 0;
    const std::size_t before = rep.failures.size();
    for (const std::vector<int>& r : r_vectors(n, sorted_only)) {
      const EnumerationTally t = enumerate_class_tally(ModelSpec(n, r, dists[0]));
      ++specs;
      for (const DistributionSpec& d : dists) {
        const ModelSpec spec(n, r, d);
        const ExactMoments exact = moments_from_tally(t, d);
        const double formula = mean_formula(spec).value();
        check(detail::rel_err(formula, exact.mean) < kVerifyRelTol,
              detail::spec_label(spec) + ": mean formula " + detail::format_g17(formula) + " vs enumeration " +
                  detail::format_g17(exact.mean));
        const SecondMoment pairs = brute_second_moment_pairs(spec);
        check(detail::rel_err(pairs.second_moment, exact.second_moment) < kVerifyRelTol,
              detail::spec_label(spec) + ": pair sum " + detail::format_g17(pairs.second_moment) +
                  " vs enumeration " + detail::format_g17(exact.second_moment));
        if (spec.is_homogeneous() && spec.r_low() >= 2) {
          const double closed = exact_second_moment_homogeneous(n, spec.r_low(), d);
          const double mu = mean_formula(spec).value();
          check(detail::rel_err(closed * mu * mu, pairs.second_moment) < kVerifyRelTol,
                detail::spec_label(spec) + ": closed form " + detail::format_g17(closed * mu * mu) +
                    " vs pair sum " + detail::format_g17(pairs.second_moment));
        }
      }
    }
    out << "n=" << n << ": " << specs << (sorted_only ? " nondecreasing" : "") << " r vectors x "
        << dists.size() << " weight laws" << (rep.failures.size() == before ? " ✓" : " ✗") << '\n';
  }
  out << rep.checks << " checks, " << rep.failures.size() << " failed\n";
  return rep;
}

}  // namespace permlab
