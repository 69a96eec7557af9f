#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "permlab/model.hpp"
#include "permlab/moments.hpp"
#include "permlab/permanent.hpp"
#include "permlab/verify.hpp"

using namespace permlab;

namespace {

const DistributionSpec kConst1 = DistributionSpec::constant(1);
const DistributionSpec kExp1 = DistributionSpec::exponential(1);

// Test-side oracle for 0-1 weights: average per(X) and per(X)^2 over the
// class, each per computed by the permutation expansion.
std::pair<double, double> naive_class_moments(const ModelSpec& spec) {
  double s1 = 0, s2 = 0;
  std::size_t count = 0;
  enumerate_constraint_matrices(spec, [&](const DenseMatrix& x) {
    const double p = per_naive(x).value();
    s1 += p;
    s2 += p * p;
    ++count;
  });
  return {s1 / count, s2 / count};
}

double rel(double a, double b) { return std::fabs(a - b) / std::fabs(b); }

}  // namespace

TEST(Subfactorial, SmallValues) {
  EXPECT_EQ(subfactorial_b(0), Rational(1));
  EXPECT_EQ(subfactorial_b(1), Rational(0));
  EXPECT_EQ(subfactorial_b(3), Rational(1, 3));
  EXPECT_EQ(subfactorial_b(4), Rational(3, 8));
}

TEST(Subfactorial, DerangementCounts) {
  // D_j by recurrence D_j = (j-1)(D_{j-1} + D_{j-2}).
  std::vector<Rational> d{1, 0};
  for (unsigned j = 2; j <= 20; ++j) d.push_back((j - 1) * (d[j - 1] + d[j - 2]));
  Rational fact = 1;
  for (unsigned j = 0; j <= 20; ++j) {
    if (j > 0) fact *= j;
    EXPECT_EQ(subfactorial_b(j) * fact, d[j]) << j;
  }
}

TEST(Subfactorial, BetaOneIdentity) {
  for (unsigned n = 0; n <= 50; ++n) {
    Rational sum = 0;
    Rational inv_fact = 1;
    for (unsigned k = 0; k <= n; ++k) {
      if (k > 0) inv_fact /= k;
      sum += inv_fact * subfactorial_b(n - k);
    }
    EXPECT_EQ(sum, Rational(1)) << n;
  }
}

TEST(Subfactorial, RealTableConvergesToInverseE) {
  EXPECT_EQ(subfactorial_b_real(3), 1.0L / 3.0L);
  EXPECT_NEAR(static_cast<double>(subfactorial_b_real(170)), std::exp(-1.0), 1e-17);
  EXPECT_EQ(subfactorial_b_real(500), std::exp(-1.0L));
}

TEST(MuN, MatchesClassAverages) {
  const ModelSpec a(3, {2, 2, 2}, kConst1);
  EXPECT_NEAR(mu_n(a).value(), 16.0 / 9.0, 1e-14);
  EXPECT_NEAR(naive_class_moments(a).first, 16.0 / 9.0, 1e-14);

  const ModelSpec b(3, {1, 2, 3}, kConst1);
  EXPECT_NEAR(mu_n(b).value(), 4.0 / 3.0, 1e-14);
  EXPECT_NEAR(naive_class_moments(b).first, 4.0 / 3.0, 1e-14);

  for (std::size_t n = 1; n <= 12; ++n)
    EXPECT_NEAR(mu_n(ModelSpec::homogeneous(n, static_cast<int>(n), kConst1)).log_mag(), std::lgamma(n + 1.0), 1e-12);
}

TEST(MuN, ScalesWithNu) {
  const ModelSpec a(4, {1, 3, 2, 4}, DistributionSpec::constant(2.5));
  const ModelSpec b(4, {1, 3, 2, 4}, kConst1);
  EXPECT_NEAR(mu_n(a).log_mag() - mu_n(b).log_mag(), 4 * std::log(2.5), 1e-12);
}

TEST(VdwBound, Values) {
  EXPECT_NEAR(vdw_bound(3, 2).value(), 16.0 / 9.0, 1e-14);
  for (std::size_t n : {1U, 5U, 9U}) {
    EXPECT_NEAR(vdw_bound(n, static_cast<int>(n)).log_mag(), std::lgamma(n + 1.0), 1e-12);
    EXPECT_NEAR(vdw_bound(n, 1).log_mag(), std::lgamma(n + 1.0) - n * std::log(double(n)), 1e-12);
  }
  EXPECT_LT(relative_difference(vdw_bound(7, 3), mu_n(ModelSpec::homogeneous(7, 3, kConst1))), 1e-13);
  EXPECT_THROW(vdw_bound(3, 4), ArgumentError);
  EXPECT_THROW(vdw_bound(3, 0), ArgumentError);
}

TEST(AlphaBeta, DirectSubstitution) {
  const AlphaBeta a = alpha_beta(ModelSpec::homogeneous(4, 2, kConst1));
  EXPECT_NEAR(a.alpha_up, 16.0 / 81.0, 1e-15);
  EXPECT_EQ(a.alpha_up, a.alpha_low);
  EXPECT_DOUBLE_EQ(a.beta_up, 3.0);
  EXPECT_EQ(a.beta_up, a.beta_low);

  const AlphaBeta b = alpha_beta(ModelSpec::homogeneous(3, 2, kConst1));
  EXPECT_NEAR(b.alpha_up, 27.0 / 64.0, 1e-15);
  EXPECT_DOUBLE_EQ(b.beta_up, 2.0);

  const AlphaBeta h = alpha_beta(ModelSpec(5, {2, 3, 4, 5, 3}, kExp1));
  EXPECT_LT(h.alpha_low, h.alpha_up);
  EXPECT_LT(h.beta_low, h.beta_up);
  EXPECT_DOUBLE_EQ(h.beta_up, 2.0 * 5 * 4 / (2.0 * 4));
  EXPECT_DOUBLE_EQ(h.beta_low, 2.0 * 2 * 4 / (5.0 * 1));
}

TEST(AlphaBeta, DomainErrors) {
  EXPECT_THROW(alpha_beta(ModelSpec(3, {1, 2, 3}, kConst1)), DomainError);
  EXPECT_THROW(alpha_beta(ModelSpec(1, {1}, kConst1)), DomainError);
}

TEST(SecondMomentBounds, HypothesisFailure) {
  try {
    second_moment_bounds(ModelSpec::homogeneous(3, 2, kConst1));
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_STREQ(e.what(), "r_low ≥ 6δ/ν² not met");
  }
  EXPECT_THROW(second_moment_bounds(ModelSpec::homogeneous(20, 11, kExp1)), DomainError);
  EXPECT_NO_THROW(second_moment_bounds(ModelSpec::homogeneous(20, 12, kExp1)));
}

TEST(SecondMomentBounds, SandwichAtN12) {
  const ModelSpec spec = ModelSpec::homogeneous(12, 8, kConst1);
  const SecondMomentBounds b = second_moment_bounds(spec);
  const double exact = exact_second_moment_homogeneous(12, 8, kConst1);
  EXPECT_LT(b.lower, exact);
  EXPECT_LT(exact, b.upper);
}

TEST(SecondMomentBounds, FullSupportLimit) {
  for (std::size_t n : {10U, 20U, 50U}) {
    const SecondMomentBounds b = second_moment_bounds(ModelSpec::homogeneous(n, static_cast<int>(n), kConst1));
    const double slack = 2 * std::exp(1.0) / (double(n) * n);
    // alpha = beta = 1 at r = n
    EXPECT_NEAR(b.lower, 1 - slack, 1e-12);
    EXPECT_NEAR(b.upper, 1 + slack, 1e-12);
  }
}

TEST(ExactHomogeneous, SmallCases) {
  EXPECT_NEAR(exact_second_moment_homogeneous(3, 2, kConst1), 1.125, 1e-15);
  const double mu = mu_n(ModelSpec::homogeneous(3, 2, kConst1)).value();
  EXPECT_NEAR(exact_second_moment_homogeneous(3, 2, kConst1) * mu * mu, 32.0 / 9.0, 1e-14);
  EXPECT_NEAR(naive_class_moments(ModelSpec::homogeneous(3, 2, kConst1)).second, 32.0 / 9.0, 1e-14);
  EXPECT_EQ(exact_second_moment_homogeneous(3, 3, kConst1), 1.0);
  EXPECT_NEAR(static_cast<double>(derangement_weighted_sum(3, 1.0)), 1.0, 1e-18);
  EXPECT_THROW(exact_second_moment_homogeneous(3, 1, kConst1), DomainError);
}

TEST(ExactHomogeneous, MatchesPairSumWithExponentialWeights) {
  const ModelSpec spec = ModelSpec::homogeneous(4, 2, kExp1);
  const double mu = mu_n(spec).value();
  EXPECT_LT(rel(exact_second_moment_homogeneous(4, 2, kExp1) * mu * mu, brute_second_moment_pairs(spec).second_moment),
            1e-12);
}

TEST(ExactHomogeneous, FullSupportIsOneForAllN) {
  for (std::size_t n = 2; n <= 40; ++n)
    EXPECT_NEAR(exact_second_moment_homogeneous(n, static_cast<int>(n), kConst1), 1.0, 1e-14) << n;
}

TEST(PairMoment, DiagonalAndDisjoint) {
  const ModelSpec spec = ModelSpec::homogeneous(3, 2, kConst1);
  const std::vector<std::size_t> id{0, 1, 2};
  const std::vector<std::size_t> cycle{1, 2, 0};
  EXPECT_NEAR(pair_moment(id, id, spec), 8.0 / 27.0, 1e-16);
  EXPECT_NEAR(pair_moment(id, cycle, spec), 1.0 / 27.0, 1e-16);
}

TEST(PairMoment, InvalidPermutation) {
  const ModelSpec spec = ModelSpec::homogeneous(3, 2, kConst1);
  const std::vector<std::size_t> id{0, 1, 2};
  EXPECT_THROW(pair_moment(id, std::vector<std::size_t>{0, 0, 2}, spec), ArgumentError);
  EXPECT_THROW(pair_moment(id, std::vector<std::size_t>{0, 1}, spec), ArgumentError);
  EXPECT_THROW(pair_moment(std::vector<std::size_t>{0, 1, 3}, id, spec), ArgumentError);
}

namespace {

// Monte Carlo estimate of E R_{s1} R_{s2} with R_s = prod_i Y_{i, s(i)}.
std::pair<double, double> simulate_pair(const ModelSpec& spec, const std::vector<std::size_t>& s1,
                                        const std::vector<std::size_t>& s2, int samples) {
  double sum = 0, sum2 = 0;
  for (int t = 0; t < samples; ++t) {
    const auto y = sample_constrained_matrix(spec, TrialSeed{321, static_cast<std::uint64_t>(t)}).y;
    double v = 1;
    for (std::size_t i = 0; i < spec.n(); ++i) v *= y(i, s1[i]) * y(i, s2[i]);
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / samples;
  const double se = std::sqrt(std::max(0.0, sum2 / samples - mean * mean) / samples);
  return {mean, se};
}

}  // namespace

TEST(PairMoment, MatchesSimulation) {
  constexpr int kSamples = 1000000;
  const std::vector<std::size_t> id{0, 1, 2};
  const std::vector<std::size_t> swap01{1, 0, 2};

  const ModelSpec a(3, {1, 2, 3}, kConst1);
  const auto [mean_a, se_a] = simulate_pair(a, id, swap01, kSamples);
  EXPECT_NEAR(mean_a, pair_moment(id, swap01, a), 3 * se_a + 1e-15);

  const ModelSpec b(3, {2, 3, 3}, kExp1);
  const double exact = pair_moment(id, swap01, b);
  EXPECT_NEAR(exact, 2.0 / 3.0, 1e-15);
  const auto [mean_b, se_b] = simulate_pair(b, id, swap01, kSamples);
  EXPECT_NEAR(mean_b, exact, 3 * se_b);
}

TEST(BrutePairs, Examples) {
  EXPECT_NEAR(brute_second_moment_pairs(ModelSpec::homogeneous(3, 2, kConst1)).second_moment, 32.0 / 9.0, 1e-14);
  const SecondMoment full = brute_second_moment_pairs(ModelSpec::homogeneous(2, 2, kConst1));
  EXPECT_NEAR(full.second_moment, 4.0, 1e-15);
  EXPECT_NEAR(full.ratio, 1.0, 1e-15);
  EXPECT_GT(brute_second_moment_pairs(ModelSpec::homogeneous(3, 2, kExp1)).ratio,
            brute_second_moment_pairs(ModelSpec::homogeneous(3, 2, kConst1)).ratio);
  EXPECT_THROW(brute_second_moment_pairs(ModelSpec::homogeneous(8, 2, kConst1)), SizeLimitError);
}

TEST(BrutePairs, NondecreasingInDeltaOverNuSquared) {
  const std::vector<DistributionSpec> grid = {
      kConst1,
      DistributionSpec::uniform(9, 11),
      DistributionSpec::uniform(1, 3),
      DistributionSpec::uniform(0.01, 1),
      DistributionSpec::lognormal(0, 0.8),
      kExp1,
      DistributionSpec::lognormal(0, 1.2),
  };
  std::vector<DistributionSpec> sorted = grid;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.delta_over_nu2() < b.delta_over_nu2(); });
  for (const std::vector<int>& r : {std::vector<int>{2, 2, 2}, std::vector<int>{1, 2, 3, 4}, std::vector<int>{2, 3, 5, 5, 4}}) {
    double prev = 0;
    for (const auto& d : sorted) {
      const double ratio = brute_second_moment_pairs(ModelSpec(r.size(), r, d)).ratio;
      EXPECT_GE(ratio, prev) << d.to_string();
      prev = ratio;
    }
  }
}

TEST(BrutePairs, PreApproximationSandwichHeterogeneous) {
  std::mt19937_64 gen(99);
  for (std::size_t n = 3; n <= 7; ++n) {
    std::uniform_int_distribution<int> pick(2, static_cast<int>(n));
    for (int t = 0; t < (n == 7 ? 2 : 5); ++t) {
      std::vector<int> r(n);
      for (int& v : r) v = pick(gen);
      for (const auto& d : {kConst1, kExp1}) {
        const ModelSpec spec(n, r, d);
        const double exact = brute_second_moment_pairs(spec).ratio;
        const SecondMomentBounds b = pre_approximation_bounds(spec);
        EXPECT_LE(b.lower, exact * (1 + 1e-12)) << spec.r_text();
        EXPECT_GE(b.upper, exact * (1 - 1e-12)) << spec.r_text();
      }
    }
  }
}

TEST(EnumerateMoments, Anchors) {
  const ExactMoments a = exact_moments_enumerate(ModelSpec::homogeneous(3, 2, kConst1));
  EXPECT_NEAR(a.mean, 16.0 / 9.0, 1e-15);
  EXPECT_NEAR(a.second_moment, 32.0 / 9.0, 1e-15);

  const ModelSpec b(3, {1, 2, 3}, kConst1);
  const ExactMoments eb = exact_moments_enumerate(b);
  const auto oracle = naive_class_moments(b);
  EXPECT_NEAR(eb.mean, 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(eb.second_moment, oracle.second, 1e-14);
}

TEST(EnumerateMoments, ConstantWeightsMatchNaivePermanents) {
  for (std::size_t n = 1; n <= 4; ++n)
    for (const auto& r : r_vectors(n, true)) {
      const ModelSpec spec(n, r, DistributionSpec::constant(1.5));
      const auto oracle = naive_class_moments(spec.with_dist(kConst1));
      const ExactMoments got = exact_moments_enumerate(spec);
      EXPECT_LT(rel(got.mean, oracle.first * std::pow(1.5, n)), 1e-12);
      EXPECT_LT(rel(got.second_moment, oracle.second * std::pow(1.5, 2 * n)), 1e-12);
    }
}

TEST(EnumerateMoments, AgreesWithPairSumUpToN5) {
  std::mt19937_64 gen(5);
  for (std::size_t n = 1; n <= 5; ++n)
    for (const auto& r : r_vectors(n, true)) {
      for (const auto& d : {kConst1, kExp1, DistributionSpec::uniform(1, 4)}) {
        const ModelSpec spec(n, r, d);
        EXPECT_LT(rel(exact_moments_enumerate(spec).second_moment, brute_second_moment_pairs(spec).second_moment),
                  1e-10);
      }
    }
}

TEST(EnumerateMoments, Guards) {
  EXPECT_THROW(exact_moments_enumerate(ModelSpec::homogeneous(7, 1, kConst1)), SizeLimitError);
  EXPECT_THROW(exact_moments_enumerate(ModelSpec::homogeneous(6, 3, kConst1)), SizeLimitError);  // 20^6 > 1e7
  EXPECT_NO_THROW(exact_moments_enumerate(ModelSpec::homogeneous(6, 1, kConst1)));
}

TEST(ConditionCheck, Examples) {
  const ConditionDiagnostics a = condition_check(ModelSpec::homogeneous(100, 50, kConst1));
  EXPECT_NEAR(a.a_n, 0.2, 1e-15);
  EXPECT_EQ(a.c_n, 0.0);
  for (int r = 2; r <= 9; ++r) EXPECT_EQ(condition_check(ModelSpec::homogeneous(9, r, kConst1)).c_n, 0.0);
  const ConditionDiagnostics t = condition_check(ModelSpec::homogeneous(9, 3, kConst1));
  ASSERT_TRUE(t.theta.has_value());
  EXPECT_NEAR(*t.theta, (2.0 / 3.0) * std::exp(0.5), 1e-15);
  EXPECT_GT(*t.theta, 1.0);
  EXPECT_FALSE(condition_check(ModelSpec(3, {1, 2, 3}, kConst1)).theta.has_value());
  EXPECT_NEAR(condition_check(ModelSpec(4, {4, 4, 4, 2}, kConst1)).c_n, 1.0, 1e-15);
  EXPECT_NEAR(condition_check(ModelSpec(4, {4, 4, 4, 2}, kExp1)).c_n, 3.0, 1e-15);
}

TEST(MomentReport, HomogeneousAndHeterogeneous) {
  const MomentReport h = moment_report(ModelSpec::homogeneous(3, 2, kConst1));
  EXPECT_NEAR(h.mu_n.value(), 16.0 / 9.0, 1e-14);
  ASSERT_TRUE(h.vdw.has_value());
  EXPECT_LT(relative_difference(*h.vdw, h.mu_n), 1e-13);
  EXPECT_FALSE(h.bounds.has_value());
  EXPECT_EQ(h.bounds_error, "r_low ≥ 6δ/ν² not met");
  ASSERT_TRUE(h.diagnostics.theta.has_value());
  EXPECT_NEAR(*h.diagnostics.theta, std::exp(1.0) / 2, 1e-15);

  const MomentReport g = moment_report(ModelSpec(3, {1, 2, 3}, kConst1));
  EXPECT_NEAR(g.mu_n.value(), 4.0 / 3.0, 1e-14);
  EXPECT_FALSE(g.vdw.has_value());
  EXPECT_FALSE(g.diagnostics.theta.has_value());
  EXPECT_FALSE(g.alpha_beta.has_value());
  EXPECT_FALSE(g.exact_ratio.has_value());
}

TEST(Verify, PassesAndCatchesMeanTypo) {
  std::ostringstream sink;
  VerifyOptions opts;
  opts.max_n = 4;
  EXPECT_TRUE(run_verification(sink, mu_n, opts).ok());
  EXPECT_NE(sink.str().find("(3,(2,2,2),const1): ET=16/9 ET²=32/9 ✓"), std::string::npos);

  // n^n / n! in place of n! / n^n.
  const MeanFormula typo = [](const ModelSpec& s) {
    const double n = static_cast<double>(s.n());
    double log_mu = n * std::log(s.dist().nu()) + n * std::log(n) - std::lgamma(n + 1);
    for (int r : s.r()) log_mu += std::log(static_cast<double>(r));
    return ScaledValue::from_log(log_mu);
  };
  std::ostringstream bad;
  const VerifyReport rep = run_verification(bad, typo, opts);
  EXPECT_FALSE(rep.ok());
  EXPECT_GT(rep.failures.size(), 10U);
}
