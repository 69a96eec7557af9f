#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "permlab/dense_matrix.hpp"
#include "permlab/errors.hpp"
#include "permlab/model_spec.hpp"
#include "permlab/rng.hpp"

namespace permlab {

inline constexpr double kEnumerationMaxClassSize = 1e7;

/// Uniform r-subset of {0..n-1}: partial Fisher-Yates, first r slots, sorted.
inline std::vector<std::size_t> sample_row_support(std::size_t n, int r, TrialRng& rng) {
  if (r < 1 || static_cast<std::size_t>(r) > n)
    throw ArgumentError("sample_row_support: need 1 <= r <= n (n = " + std::to_string(n) + ", r = " +
                        std::to_string(r) + ")");
  std::vector<std::size_t> cols(n);
  std::iota(cols.begin(), cols.end(), 0);
  for (std::size_t i = 0; i < static_cast<std::size_t>(r); ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(cols[i], cols[j]);
  }
  cols.resize(static_cast<std::size_t>(r));
  std::sort(cols.begin(), cols.end());
  return cols;
}

/// A draw of the 0-1 support X together with X (.) W, where W = Z / nu holds
/// unit-mean weights.
struct SupportSample {
  DenseMatrix x;
  DenseMatrix weighted;  // X (.) W
};

/// Draw order: rows of X top to bottom, then all n*n entries of W row-major.
inline SupportSample sample_support_and_weights(const ModelSpec& spec, TrialRng& rng) {
  const std::size_t n = spec.n();
  std::vector<double> x(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j : sample_row_support(n, spec.r(i), rng)) x[i * n + j] = 1.0;
  std::vector<double> w(n * n);
  auto u = [&rng] { return rng.uniform01(); };
  for (std::size_t k = 0; k < n * n; ++k) w[k] = spec.dist().sample_unit(u) * x[k];
  return {DenseMatrix(n, std::move(x)), DenseMatrix(n, std::move(w))};
}

struct ConstrainedSample {
  DenseMatrix x;  // 0-1 support, r_i ones in row i
  DenseMatrix y;  // X (.) Z
};

/// Samples X uniformly from the class and Y = X (.) Z with Z i.i.d. from the
/// spec's distribution (Z = nu * W). Deterministic in `seed`.
inline ConstrainedSample sample_constrained_matrix(const ModelSpec& spec, TrialSeed seed) {
  TrialRng rng(seed);
  SupportSample s = sample_support_and_weights(spec, rng);
  const double nu = spec.dist().nu();
  const std::size_t n = spec.n();
  std::vector<double> y(s.weighted.entries().begin(), s.weighted.entries().end());
  for (double& v : y) v *= nu;
  return {std::move(s.x), DenseMatrix(n, std::move(y))};
}

/// log of |class| = sum_i log C(n, r_i).
inline double log_class_size(const ModelSpec& spec) {
  const double n = static_cast<double>(spec.n());
  double acc = 0;
  for (int r : spec.r()) acc += std::lgamma(n + 1) - std::lgamma(r + 1.0) - std::lgamma(n - r + 1);
  return acc;
}

/// Number of matrices in the class; only meaningful when it fits the guard.
inline std::uint64_t class_size(const ModelSpec& spec) {
  std::uint64_t total = 1;
  for (int r : spec.r()) {
    std::uint64_t c = 1;
    for (int k = 1; k <= r; ++k) c = c * (spec.n() - r + k) / k;
    total *= c;
  }
  return total;
}

/// All r-subsets of {0..n-1} as bitmasks, in lexicographic order of their
/// sorted index lists.
inline std::vector<std::uint32_t> row_subsets(std::size_t n, int r) {
  std::vector<std::uint32_t> out;
  std::vector<std::size_t> idx(static_cast<std::size_t>(r));
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    std::uint32_t mask = 0;
    for (std::size_t c : idx) mask |= std::uint32_t{1} << c;
    out.push_back(mask);
    int pos = r - 1;
    while (pos >= 0 && idx[pos] == n - static_cast<std::size_t>(r) + static_cast<std::size_t>(pos)) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (std::size_t k = static_cast<std::size_t>(pos) + 1; k < idx.size(); ++k) idx[k] = idx[k - 1] + 1;
  }
  return out;
}

/// Calls `visit(std::span<const std::uint32_t> row_masks)` once per matrix of
/// the class, rows varying lexicographically with the last row fastest.
template <class Visitor>
void for_each_constraint_support(const ModelSpec& spec, Visitor&& visit) {
  const std::size_t n = spec.n();
  if (n > 32 || log_class_size(spec) > std::log(kEnumerationMaxClassSize) + 1e-9)
    throw SizeLimitError("enumerate_constraint_matrices: class size exceeds 1e7");
  std::vector<std::vector<std::uint32_t>> choices(n);
  for (std::size_t i = 0; i < n; ++i) choices[i] = row_subsets(n, spec.r(i));
  std::vector<std::size_t> odo(n, 0);
  std::vector<std::uint32_t> masks(n);
  for (std::size_t i = 0; i < n; ++i) masks[i] = choices[i][0];
  while (true) {
    visit(std::span<const std::uint32_t>(masks));
    std::size_t i = n;
    while (i > 0) {
      --i;
      if (++odo[i] < choices[i].size()) {
        masks[i] = choices[i][odo[i]];
        break;
      }
      odo[i] = 0;
      masks[i] = choices[i][0];
      if (i == 0) return;
    }
  }
}

/// Streams every 0-1 matrix of the class as a DenseMatrix.
template <class Visitor>
void enumerate_constraint_matrices(const ModelSpec& spec, Visitor&& visit) {
  const std::size_t n = spec.n();
  for_each_constraint_support(spec, [&](std::span<const std::uint32_t> masks) {
    std::vector<double> a(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if ((masks[i] >> j) & 1U) a[i * n + j] = 1.0;
    visit(DenseMatrix(n, std::move(a)));
  });
}

}  // namespace permlab
