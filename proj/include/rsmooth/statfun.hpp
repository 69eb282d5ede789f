#pragma once

// Scalar statistics used throughout the certification engine: the standard
// normal CDF and quantile, binomial tails in log space, the two-sided
// binomial test and the one-sided Clopper-Pearson lower bound.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace rsmooth {

/// Phi(z). Delegates to erfc, which is accurate to a few ulps over the whole
/// real line, so the absolute error stays far below 1e-12 and the tails
/// saturate smoothly to 0 and 1.
inline double std_normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

inline double std_normal_pdf(double z) {
  constexpr double inv_sqrt_2pi = 0.3989422804014326779399460599343818684758586311649;
  return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

namespace detail {

// Acklam's rational approximation for the lower half (relative error about
// 1.15e-9), used only as the starting point for Newton refinement.
inline double acklam_lower(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Quantile for p <= 1/2. Working on the lower half keeps the Newton residual
// Phi(z) - p free of cancellation even for p near the underflow limit.
inline double quantile_lower_half(double p) {
  double z = acklam_lower(p);
  for (int i = 0; i < 2; ++i) {
    const double pdf = std_normal_pdf(z);
    if (pdf <= 0.0) break;
    z -= (std_normal_cdf(z) - p) / pdf;
  }
  return z;
}

}  // namespace detail

/// Inverse of Phi on the open interval (0, 1). The endpoints correspond to an
/// infinite quantile and are rejected; callers certifying with p = 1 must
/// treat that case as an unbounded radius themselves.
inline double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("std_normal_quantile: p must lie strictly inside (0, 1)");
  }
  if (p == 0.5) return 0.0;
  if (p < 0.5) return detail::quantile_lower_half(p);
  // 1 - p is exact for p in [1/2, 1).
  return -detail::quantile_lower_half(1.0 - p);
}

namespace detail {

inline double log_binomial_pmf(std::uint64_t i, std::uint64_t n, double log_p, double log_q) {
  const double ni = static_cast<double>(n);
  const double ii = static_cast<double>(i);
  return std::lgamma(ni + 1.0) - std::lgamma(ii + 1.0) - std::lgamma(ni - ii + 1.0) +
         ii * log_p + (ni - ii) * log_q;
}

// log P(lo <= X <= hi) for X ~ Binomial(n, p), 0 < p < 1. The sum starts at
// the largest term in range and walks outward with the pmf ratio recurrence,
// stopping once terms fall below 1e-20 of the peak. Cost is O(sqrt(n)) terms
// rather than O(n).
inline double log_binomial_range(std::uint64_t lo, std::uint64_t hi, std::uint64_t n, double p) {
  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  const double odds = p / (1.0 - p);

  const double mode_real = std::floor((static_cast<double>(n) + 1.0) * p);
  std::uint64_t peak = static_cast<std::uint64_t>(std::clamp(mode_real, 0.0, static_cast<double>(n)));
  peak = std::clamp(peak, lo, hi);

  const double log_peak = log_binomial_pmf(peak, n, log_p, log_q);
  constexpr double cutoff = 1e-20;

  // Terms relative to the peak term; the peak contributes 1.
  double sum = 1.0;
  double term = 1.0;
  for (std::uint64_t i = peak; i > lo; --i) {
    // t(i-1) / t(i) = i / (n - i + 1) / odds
    term *= static_cast<double>(i) / (static_cast<double>(n - i + 1) * odds);
    sum += term;
    if (term < cutoff * sum) break;
  }
  term = 1.0;
  for (std::uint64_t i = peak; i < hi; ++i) {
    // t(i+1) / t(i) = (n - i) / (i + 1) * odds
    term *= static_cast<double>(n - i) / static_cast<double>(i + 1) * odds;
    sum += term;
    if (term < cutoff * sum) break;
  }
  return log_peak + std::log(sum);
}

inline void check_binomial_args(std::uint64_t k, std::uint64_t n, double p, const char* who) {
  if (n < 1 || k > n) throw std::invalid_argument(std::string(who) + ": require 0 <= k <= n, n >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(who) + ": p outside [0, 1]");
}

}  // namespace detail

/// log P(Binomial(n, p) <= k).
inline double log_binomial_cdf(std::uint64_t k, std::uint64_t n, double p) {
  detail::check_binomial_args(k, n, p, "log_binomial_cdf");
  if (k == n || p == 0.0) return 0.0;
  if (p == 1.0) return -std::numeric_limits<double>::infinity();
  return detail::log_binomial_range(0, k, n, p);
}

/// log P(Binomial(n, p) >= k).
inline double log_binomial_sf(std::uint64_t k, std::uint64_t n, double p) {
  detail::check_binomial_args(k, n, p, "log_binomial_sf");
  if (k == 0 || p == 1.0) return 0.0;
  if (p == 0.0) return -std::numeric_limits<double>::infinity();
  return detail::log_binomial_range(k, n, n, p);
}

/// Two-sided binomial test: twice the smaller tail, clamped to 1. At p0 = 1/2
/// this is exactly P(|X - n/2| >= |k - n/2|), which is the only case the
/// smoothing engine uses.
inline double binom_two_sided_pvalue(std::uint64_t k, std::uint64_t n, double p0) {
  detail::check_binomial_args(k, n, p0, "binom_two_sided_pvalue");
  const double lower = log_binomial_cdf(k, n, p0);
  const double upper = log_binomial_sf(k, n, p0);
  return std::min(1.0, 2.0 * std::exp(std::min(lower, upper)));
}

/// One-sided (1 - alpha) Clopper-Pearson lower confidence bound on a binomial
/// proportion after k successes in n trials.
///
/// The returned value is the largest p with P(Binomial(n, p) >= k) <= alpha,
/// found by bisection to 1e-10 and rounded down so the bound stays
/// conservative. k = 0 gives 0 and k = n uses the closed form alpha^(1/n).
inline double clopper_pearson_lower(std::uint64_t k, std::uint64_t n, double alpha) {
  if (n < 1 || k > n) throw std::invalid_argument("clopper_pearson_lower: require 0 <= k <= n, n >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("clopper_pearson_lower: alpha outside (0, 1)");
  if (k == 0) return 0.0;
  if (k == n) return std::pow(alpha, 1.0 / static_cast<double>(n));

  const double log_alpha = std::log(alpha);
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (log_binomial_sf(k, n, mid) <= log_alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

}  // namespace rsmooth
