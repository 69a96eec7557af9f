#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "permlab/errors.hpp"
#include "permlab/model.hpp"
#include "permlab/moments.hpp"
#include "permlab/permanent.hpp"

namespace permlab {

/// T_n / mu_n for one seeded draw.
///
/// The kernel sees X (.) W with W = Z / nu, rows scaled by r_i. Then
/// per(Y) = nu^n * prod(r_i) * per(scaled) and mu_n = nu^n * prod(r_i) * n!/n^n,
/// so the ratio is per(scaled) * n^n / n!, formed in long double.
inline double run_trial(const ModelSpec& spec, TrialSeed seed) {
  const std::size_t n = spec.n();
  if (n > kRyserMaxN)
    throw SizeLimitError("run_trial: n = " + std::to_string(n) + " exceeds limit " + std::to_string(kRyserMaxN));
  TrialRng rng(seed);
  const SupportSample s = sample_support_and_weights(spec, rng);
  std::vector<double> scales(spec.r().begin(), spec.r().end());
  const detail::ScaledRyser per = detail::scaled_ryser(s.weighted, scales);
  if (per.zero) return 0.0;
  const long double nl = static_cast<long double>(n);
  return static_cast<double>(per.core * std::exp(nl * std::log(nl) - std::lgamma(nl + 1)));
}

struct TrialSummary {
  double mean = 0;
  double variance = 0;  // unbiased sample variance
  double se_mean = 0;
  std::optional<double> se_variance;  // jackknife, needs >= 3 trials
  double p_deviation = 0;             // fraction with |ratio - 1| > epsilon
};

/// Summary statistics of ratios in the stored order.
inline TrialSummary summarize(const std::vector<double>& ratios, double epsilon) {
  const std::size_t count = ratios.size();
  if (count < 2) throw ArgumentError("summarize: need at least 2 trials");
  // Welford
  double mean = 0, m2 = 0;
  std::size_t k = 0;
  std::size_t deviations = 0;
  for (double x : ratios) {
    ++k;
    const double d = x - mean;
    mean += d / static_cast<double>(k);
    m2 += d * (x - mean);
    if (std::fabs(x - 1) > epsilon) ++deviations;
  }
  const double nd = static_cast<double>(count);
  TrialSummary s;
  s.mean = mean;
  s.variance = m2 / (nd - 1);
  s.se_mean = std::sqrt(s.variance / nd);
  s.p_deviation = static_cast<double>(deviations) / nd;
  if (count >= 3) {
    // Leave-one-out variances from the centered sums, then the jackknife SE.
    std::vector<double> loo(count);
    double loo_mean = 0;
    for (std::size_t i = 0; i < count; ++i) {
      const double d = ratios[i] - mean;
      const double ss = std::max(0.0, m2 - d * d * nd / (nd - 1));
      loo[i] = ss / (nd - 2);
      loo_mean += loo[i];
    }
    loo_mean /= nd;
    double acc = 0;
    for (double v : loo) acc += (v - loo_mean) * (v - loo_mean);
    s.se_variance = std::sqrt((nd - 1) / nd * acc);
  }
  return s;
}

struct TrialBatch {
  ModelSpec spec;
  std::uint64_t master_seed;
  double epsilon;
  std::vector<double> ratios;  // indexed by trial_index
  TrialSummary summary;
};

inline constexpr double kDefaultEpsilon = 0.1;

/// Runs `trials` seeded trials on `workers` threads. Each trial writes its own
/// slot, so the stored ratios and the summary do not depend on scheduling.
inline TrialBatch estimate_moments(const ModelSpec& spec, std::size_t trials, std::uint64_t master_seed,
                                   unsigned workers = 1, double epsilon = kDefaultEpsilon) {
  if (trials < 2) throw ArgumentError("estimate_moments: need at least 2 trials");
  if (spec.n() > kRyserMaxN)
    throw SizeLimitError("estimate_moments: n = " + std::to_string(spec.n()) + " exceeds limit " +
                         std::to_string(kRyserMaxN));
  std::vector<double> ratios(trials);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    while (true) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= trials) return;
      try {
        ratios[idx] = run_trial(spec, TrialSeed{master_seed, idx});
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = trials;
      }
    }
  };
  workers = std::max(1U, std::min<unsigned>(workers, static_cast<unsigned>(trials)));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  TrialSummary summary = summarize(ratios, epsilon);
  return TrialBatch{spec, master_seed, epsilon, std::move(ratios), summary};
}

/// How r is chosen for each n of a sweep.
struct RRule {
  enum class Kind { constant, sqrt_log, power, fixed };
  Kind kind = Kind::constant;
  int k = 1;        // constant
  double p = 0.5;   // power
  std::map<std::size_t, std::vector<int>> fixed;

  /// `const:k`, `sqrt-log`, `power:p`, or `fixed:N=r1,..,rN;M=...`.
  static RRule parse(std::string_view text);

  std::vector<int> rows_for(std::size_t n) const {
    auto ceil_int = [](double x) { return static_cast<int>(std::ceil(x - 1e-9)); };
    const double nd = static_cast<double>(n);
    switch (kind) {
      case Kind::constant: return std::vector<int>(n, k);
      case Kind::sqrt_log: return std::vector<int>(n, ceil_int(std::sqrt(nd) * std::log(nd)));
      case Kind::power: return std::vector<int>(n, ceil_int(std::pow(nd, p)));
      case Kind::fixed: {
        auto it = fixed.find(n);
        if (it == fixed.end()) throw ArgumentError("r-rule: no fixed r vector for n = " + std::to_string(n));
        return it->second;
      }
    }
    return {};
  }

  std::string to_string() const {
    switch (kind) {
      case Kind::constant: return "const:" + std::to_string(k);
      case Kind::sqrt_log: return "sqrt-log";
      case Kind::power: return "power:" + detail::format_g17(p);
      case Kind::fixed: {
        std::string s = "fixed:";
        bool first = true;
        for (const auto& [n, r] : fixed) {
          if (!first) s += ';';
          first = false;
          s += std::to_string(n) + "=";
          for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + std::to_string(r[i]);
        }
        return s;
      }
    }
    return {};
  }
};

inline RRule RRule::parse(std::string_view text) {
  RRule rule;
  if (text == "sqrt-log") {
    rule.kind = Kind::sqrt_log;
    return rule;
  }
  auto colon = text.find(':');
  if (colon == std::string_view::npos) throw ParseError("r-rule '" + std::string(text) + "' not recognized");
  std::string_view name = text.substr(0, colon);
  std::string_view arg = text.substr(colon + 1);
  if (name == "const") {
    rule.kind = Kind::constant;
    double k = detail::parse_real(arg, "r-rule");
    if (k != std::floor(k) || k < 1) throw ParseError("r-rule const:k needs an integer k >= 1");
    rule.k = static_cast<int>(k);
  } else if (name == "power") {
    rule.kind = Kind::power;
    rule.p = detail::parse_real(arg, "r-rule");
    if (!(rule.p > 0) || rule.p > 1) throw ParseError("r-rule power:p needs 0 < p <= 1");
  } else if (name == "fixed") {
    rule.kind = Kind::fixed;
    while (!arg.empty()) {
      auto semi = arg.find(';');
      std::string_view item = arg.substr(0, semi);
      auto eq = item.find('=');
      if (eq == std::string_view::npos) throw ParseError("r-rule fixed: entry '" + std::string(item) + "' lacks '='");
      auto n = static_cast<std::size_t>(detail::parse_real(item.substr(0, eq), "r-rule"));
      std::vector<int> r;
      std::string_view list = item.substr(eq + 1);
      while (true) {
        auto comma = list.find(',');
        r.push_back(static_cast<int>(detail::parse_real(list.substr(0, comma), "r-rule")));
        if (comma == std::string_view::npos) break;
        list.remove_prefix(comma + 1);
      }
      rule.fixed[n] = std::move(r);
      if (semi == std::string_view::npos) break;
      arg.remove_prefix(semi + 1);
    }
  } else {
    throw ParseError("r-rule '" + std::string(text) + "' not recognized");
  }
  return rule;
}

struct SweepPlan {
  std::vector<std::size_t> ns;
  RRule rule;
  DistributionSpec dist = DistributionSpec::constant(1);
  std::size_t trials = 400;
  std::uint64_t master_seed = 0;
  double epsilon = kDefaultEpsilon;
  unsigned workers = 1;

  /// Builds the spec for every n, throwing if an induced r is out of range or
  /// n exceeds the Ryser guard.
  std::vector<ModelSpec> specs() const {
    std::vector<ModelSpec> out;
    for (std::size_t n : ns) {
      if (n > kRyserMaxN)
        throw SizeLimitError("sweep: n = " + std::to_string(n) + " exceeds limit " + std::to_string(kRyserMaxN));
      out.emplace_back(n, rule.rows_for(n), dist);
    }
    return out;
  }

  /// Master seed of the stream used for dimension n.
  std::uint64_t seed_for(std::size_t n) const { return mix_seed(master_seed, n); }
};

/// One line of the result table.
struct SweepRow {
  std::size_t n;
  int r_low;
  int r_up;
  std::string dist;
  std::size_t trials;
  std::uint64_t seed;
  TrialSummary summary;
  double epsilon;
  double a_n;
  double c_n;
  std::optional<double> exact_ratio;  // E T^2 / mu^2, homogeneous r >= 2
  std::optional<double> bound_low;
  std::optional<double> bound_up;
};

inline SweepRow make_row(const TrialBatch& batch) {
  const ModelSpec& spec = batch.spec;
  const ConditionDiagnostics diag = condition_check(spec);
  SweepRow row{spec.n(), spec.r_low(), spec.r_up(), spec.dist().to_string(), batch.ratios.size(), batch.master_seed,
               batch.summary, batch.epsilon, diag.a_n, diag.c_n, std::nullopt, std::nullopt, std::nullopt};
  if (spec.is_homogeneous() && spec.r_low() >= 2)
    row.exact_ratio = exact_second_moment_homogeneous(spec.n(), spec.r_low(), spec.dist());
  if (spec.n() >= 2 && bounds_hypothesis_holds(spec)) {
    const SecondMomentBounds b = second_moment_bounds(spec);
    row.bound_low = b.lower;
    row.bound_up = b.upper;
  }
  return row;
}

using ProgressSink = std::function<void(const std::string&)>;

/// One independent batch per n, seeded by plan.seed_for(n).
inline std::vector<SweepRow> concentration_sweep(const SweepPlan& plan, const ProgressSink& progress = {}) {
  std::vector<SweepRow> rows;
  for (const ModelSpec& spec : plan.specs()) {
    if (progress)
      progress("sweep: n = " + std::to_string(spec.n()) + ", r = " + spec.r_text() + ", " +
               std::to_string(plan.trials) + " trials");
    const TrialBatch batch = estimate_moments(spec, plan.trials, plan.seed_for(spec.n()), plan.workers, plan.epsilon);
    rows.push_back(make_row(batch));
  }
  return rows;
}

inline constexpr std::string_view kCsvHeader =
    "n,r_low,r_up,dist,trials,seed,mean_ratio,se_mean,var_ratio,se_var,p_dev,epsilon,a_n,c_n,exact_ratio,bound_low,"
    "bound_up";

namespace detail {

inline std::string csv_field(std::string_view v) {
  if (v.find_first_of(",\"\n") == std::string_view::npos) return std::string(v);
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string csv_real(std::optional<double> v) { return v ? format_g17(*v) : std::string(); }

}  // namespace detail

inline std::string csv_text(const std::vector<SweepRow>& rows) {
  using detail::csv_real;
  std::string out(kCsvHeader);
  out += '\n';
  for (const SweepRow& r : rows) {
    out += std::to_string(r.n) + ',' + std::to_string(r.r_low) + ',' + std::to_string(r.r_up) + ',' +
           detail::csv_field(r.dist) + ',' + std::to_string(r.trials) + ',' + std::to_string(r.seed) + ',' +
           csv_real(r.summary.mean) + ',' + csv_real(r.summary.se_mean) + ',' + csv_real(r.summary.variance) + ',' +
           csv_real(r.summary.se_variance) + ',' + csv_real(r.summary.p_deviation) + ',' + csv_real(r.epsilon) +
           ',' + csv_real(r.a_n) + ',' + csv_real(r.c_n) + ',' + csv_real(r.exact_ratio) + ',' +
           csv_real(r.bound_low) + ',' + csv_real(r.bound_up) + '\n';
  }
  return out;
}

inline void write_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileError("cannot open '" + path + "' for writing");
  out << csv_text(rows);
  out.flush();
  if (!out) throw FileError("write to '" + path + "' failed");
}

inline void write_csv(const TrialBatch& batch, const std::string& path) { write_csv({make_row(batch)}, path); }

}  // namespace permlab
