#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "permlab/dense_matrix.hpp"
#include "permlab/errors.hpp"
#include "permlab/scaled_value.hpp"

namespace permlab {

inline constexpr std::size_t kNaiveMaxN = 10;
inline constexpr std::size_t kRyserMaxN = 30;

/// True when the bipartite support graph {(i,j) : M(i,j) > 0} has a perfect
/// matching, i.e. when per(M) > 0 for a nonnegative M.
inline bool support_has_perfect_matching(const DenseMatrix& m) {
  const std::size_t n = m.n();
  std::vector<int> match_col(n, -1);  // column -> row
  std::vector<char> seen(n);
  auto augment = [&](auto&& self, std::size_t i) -> bool {
    for (std::size_t j = 0; j < n; ++j) {
      if (m(i, j) <= 0 || seen[j]) continue;
      seen[j] = 1;
      if (match_col[j] < 0 || self(self, static_cast<std::size_t>(match_col[j]))) {
        match_col[j] = static_cast<int>(i);
        return true;
      }
    }
    return false;
  };
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(seen.begin(), seen.end(), 0);
    if (!augment(augment, i)) return false;
  }
  return true;
}

/// Sum over all n! permutations of prod_i M(i, sigma(i)), in double.
inline ScaledValue per_naive(const DenseMatrix& m) {
  const std::size_t n = m.n();
  if (n > kNaiveMaxN)
    throw SizeLimitError("per_naive: n = " + std::to_string(n) + " exceeds limit " + std::to_string(kNaiveMaxN));
  std::vector<std::size_t> sigma(n);
  std::iota(sigma.begin(), sigma.end(), 0);
  double total = 0.0;
  do {
    double prod = 1.0;
    for (std::size_t i = 0; i < n && prod != 0.0; ++i) prod *= m(i, sigma[i]);
    total += prod;
  } while (std::next_permutation(sigma.begin(), sigma.end()));
  return ScaledValue::from_real(total);
}

namespace detail {

// Ryser inclusion-exclusion over column subsets visited in binary-reflected
// Gray-code order: step k toggles column ctz(k), so each step costs one
// add/subtract per row plus the n-fold product. Row sums, products and the
// total are carried in long double; the alternating sum cancels heavily for
// n around 20 and plain double loses ~6 digits there.
inline long double ryser_sum(std::span<const long double> a, std::size_t n) {
  std::vector<long double> row_sum(n, 0.0L);
  long double total = 0.0L;
  std::size_t subset_size = 0;
  const std::uint64_t count = std::uint64_t{1} << n;
  for (std::uint64_t k = 1; k < count; ++k) {
    const auto col = static_cast<std::size_t>(std::countr_zero(k));
    const bool adding = ((k ^ (k >> 1)) >> col) & 1U;
    if (adding) {
      for (std::size_t i = 0; i < n; ++i) row_sum[i] += a[i * n + col];
      ++subset_size;
    } else {
      for (std::size_t i = 0; i < n; ++i) row_sum[i] -= a[i * n + col];
      --subset_size;
    }
    long double prod = 1.0L;
    for (std::size_t i = 0; i < n; ++i) prod *= row_sum[i];
    if ((n - subset_size) & 1U)
      total -= prod;
    else
      total += prod;
  }
  return total;
}

struct ScaledRyser {
  bool zero;
  long double core;       // per(D^{-1} M)
  long double log_scale;  // sum_i log(row_scales[i])
};

inline ScaledRyser scaled_ryser(const DenseMatrix& m, std::span<const double> row_scales) {
  const std::size_t n = m.n();
  if (row_scales.size() != n) throw ArgumentError("per_scaled: need one scale per row");
  if (n > kRyserMaxN)
    throw SizeLimitError("per_scaled: n = " + std::to_string(n) + " exceeds limit " + std::to_string(kRyserMaxN));
  ScaledRyser out{true, 0.0L, 0.0L};
  std::vector<long double> a(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = row_scales[i];
    if (!(s > 0) || !std::isfinite(s)) throw ArgumentError("per_scaled: row scales must be finite and > 0");
    out.log_scale += std::log(static_cast<long double>(s));
    for (std::size_t j = 0; j < n; ++j) a[i * n + j] = static_cast<long double>(m(i, j)) / s;
  }
  if (n == 0 || !support_has_perfect_matching(m)) return out;
  out.zero = false;
  out.core = ryser_sum(a, n);
  return out;
}

}  // namespace detail

/// Ryser's formula, O(2^n n). Returns an exact zero when the support has no
/// perfect matching (zero row or column, Hall violation).
inline ScaledValue per_ryser(const DenseMatrix& m) {
  const std::size_t n = m.n();
  if (n > kRyserMaxN)
    throw SizeLimitError("per_ryser: n = " + std::to_string(n) + " exceeds limit " + std::to_string(kRyserMaxN));
  if (n == 0 || !support_has_perfect_matching(m)) return ScaledValue::zero();
  std::vector<long double> a(m.entries().begin(), m.entries().end());
  return ScaledValue::from_real(detail::ryser_sum(a, n));
}

/// per(M) computed as per_ryser(D^{-1} M) * prod(row_scales), with D the
/// diagonal of row scales and the product restored in log space. Callers
/// pick scales near the row magnitudes so the kernel works on O(1) values.
inline ScaledValue per_scaled(const DenseMatrix& m, std::span<const double> row_scales) {
  const detail::ScaledRyser s = detail::scaled_ryser(m, row_scales);
  if (s.zero) return ScaledValue::zero();
  return ScaledValue::from_real(s.core) * ScaledValue::from_log(static_cast<double>(s.log_scale));
}

}  // namespace permlab
