#pragma once

// Certified l2 radius formulas. cohen_radius is the tight Gaussian smoothing
// bound; lecuyer_radius and li_radius are the earlier differential-privacy and
// Renyi-divergence bounds, kept for comparison. All radii are in input units
// and scale linearly with sigma.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

#include "rsmooth/optimize.hpp"
#include "rsmooth/statfun.hpp"

namespace rsmooth {

/// Lower bound on the top-class probability, upper bound on the runner-up
/// probability, and the smoothing noise level.
struct BoundInputs {
  double pa_lower = 0.5;
  double pb_upper = 0.5;
  double sigma = 1.0;

  void validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("BoundInputs: sigma must be > 0");
    if (!(pb_upper >= 0.0 && pb_upper <= pa_lower && pa_lower <= 1.0)) {
      throw std::invalid_argument("BoundInputs: need 0 <= pb_upper <= pa_lower <= 1");
    }
  }
};

enum class BoundKind { Cohen, Lecuyer, Li };

inline std::string_view to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::Cohen: return "cohen";
    case BoundKind::Lecuyer: return "lecuyer";
    case BoundKind::Li: return "li";
  }
  return "unknown";
}

inline BoundKind parse_bound_kind(std::string_view name) {
  if (name == "cohen") return BoundKind::Cohen;
  if (name == "lecuyer") return BoundKind::Lecuyer;
  if (name == "li") return BoundKind::Li;
  throw std::invalid_argument("unknown bound kind: " + std::string(name));
}

inline constexpr double kUnboundedRadius = std::numeric_limits<double>::infinity();

inline bool is_unbounded(double radius) { return std::isinf(radius) && radius > 0.0; }

/// sigma/2 * (Phi^-1(pa) - Phi^-1(pb)). pa = 1 or pb = 0 yields
/// kUnboundedRadius.
inline double cohen_radius(const BoundInputs& in) {
  in.validate();
  if (in.pa_lower == in.pb_upper) return 0.0;
  if (in.pa_lower == 1.0 || in.pb_upper == 0.0) return kUnboundedRadius;
  const double r = 0.5 * in.sigma * (std_normal_quantile(in.pa_lower) - std_normal_quantile(in.pb_upper));
  return std::max(0.0, r);
}

/// Two-class form sigma * Phi^-1(pa); abstention territory (pa <= 1/2) is a
/// domain error.
inline double cohen_radius_binary(double pa_lower, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("cohen_radius_binary: sigma must be > 0");
  if (!(pa_lower > 0.5)) throw std::domain_error("cohen_radius_binary: pa_lower must exceed 1/2");
  if (pa_lower > 1.0) throw std::invalid_argument("cohen_radius_binary: pa_lower above 1");
  if (pa_lower == 1.0) return kUnboundedRadius;
  return sigma * std_normal_quantile(pa_lower);
}

/// Smallest top-class probability any base classifier with P(top) = pa can
/// have after a shift of length r.
inline double worst_case_top_prob(double pa_lower, double sigma, double r) {
  if (!(pa_lower > 0.0 && pa_lower < 1.0)) throw std::invalid_argument("worst_case_top_prob: pa outside (0, 1)");
  if (!(sigma > 0.0) || !(r >= 0.0)) throw std::invalid_argument("worst_case_top_prob: need sigma > 0, r >= 0");
  return std_normal_cdf(std_normal_quantile(pa_lower) - r / sigma);
}

/// Largest runner-up probability any base classifier with P(runner-up) = pb
/// can have after a shift of length r.
inline double worst_case_runner_prob(double pb_upper, double sigma, double r) {
  if (!(pb_upper > 0.0 && pb_upper < 1.0)) throw std::invalid_argument("worst_case_runner_prob: pb outside (0, 1)");
  if (!(sigma > 0.0) || !(r >= 0.0)) throw std::invalid_argument("worst_case_runner_prob: need sigma > 0, r >= 0");
  return std_normal_cdf(std_normal_quantile(pb_upper) + r / sigma);
}

/// Largest radius CERTIFY can ever return with n samples at confidence
/// 1 - alpha: the all-successes Clopper-Pearson bound alpha^(1/n) pushed
/// through the binary radius.
inline double max_certifiable_radius(std::uint64_t n, double alpha, double sigma) {
  if (n < 1) throw std::invalid_argument("max_certifiable_radius: n must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("max_certifiable_radius: alpha outside (0, 1)");
  const double pa = std::pow(alpha, 1.0 / static_cast<double>(n));
  if (!(pa > 0.5)) throw std::domain_error("max_certifiable_radius: alpha^(1/n) <= 1/2, nothing certifiable");
  return cohen_radius_binary(pa, sigma);
}

namespace detail {

inline double lecuyer_objective(double beta, double pa, double pb) {
  const double gap = pa - std::exp(2.0 * beta) * pb;
  if (!(gap > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double log_arg = std::log(1.25 * (1.0 + std::exp(beta)) / gap);
  if (!(log_arg > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return beta / std::sqrt(2.0 * log_arg);
}

// Upper end of the feasible beta interval: min(1, log(pa/pb)/2), pulled in by
// a 1e-12 margin so that pa - e^(2 beta) pb stays positive.
inline double lecuyer_beta_max(double pa, double pb) {
  if (pb == 0.0) return 1.0;
  return std::min(1.0, 0.5 * std::log(pa / pb)) - 1e-12;
}

// Power mean M_q(pa, pb) with q = 1 - order < 0, computed in log space so that
// large orders do not overflow pb^q.
inline double li_log_power_mean(double order, double pa, double pb) {
  const double q = 1.0 - order;
  const double la = q * std::log(pa);
  const double lb = q * std::log(pb);
  const double hi = std::max(la, lb);
  const double log_sum = hi + std::log1p(std::exp(std::min(la, lb) - hi));
  return (log_sum - std::log(2.0)) / q;
}

inline double li_objective(double order, double pa, double pb) {
  const double mean = std::exp(li_log_power_mean(order, pa, pb));
  const double arg = 1.0 - pa - pb + 2.0 * mean;
  if (!(arg > 0.0 && arg < 1.0)) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(-2.0 / order * std::log(arg));
}

}  // namespace detail

/// Differential-privacy bound: sup over beta in (0, min(1, log(pa/pb)/2)] of
/// sigma*beta / sqrt(2 log(1.25 (1 + e^beta) / (pa - e^(2 beta) pb))).
inline double lecuyer_radius(const BoundInputs& in) {
  in.validate();
  if (in.pa_lower <= in.pb_upper) return 0.0;
  const double beta_max = detail::lecuyer_beta_max(in.pa_lower, in.pb_upper);
  if (!(beta_max > 0.0)) return 0.0;
  const double beta_min = std::min(1e-9, 0.5 * beta_max);
  const ScalarMaximum best = grid_refine_maximize(
      [&](double beta) { return detail::lecuyer_objective(beta, in.pa_lower, in.pb_upper); },
      beta_min, beta_max);
  if (!std::isfinite(best.value)) return 0.0;
  return in.sigma * std::max(0.0, best.value);
}

/// Renyi-divergence bound: sup over orders a > 1 of
/// sigma * sqrt(-(2/a) log(1 - pa - pb + 2 M_{1-a}(pa, pb))), where M_q is the
/// power mean (((pa^q + pb^q)/2)^(1/q)). The search runs over a - 1 in
/// [1e-6, 1e4].
inline double li_radius(const BoundInputs& in) {
  in.validate();
  if (in.pa_lower <= in.pb_upper) return 0.0;
  if (in.pa_lower == 1.0 && in.pb_upper == 0.0) return kUnboundedRadius;
  const ScalarMaximum best = grid_refine_maximize(
      [&](double excess) { return detail::li_objective(1.0 + excess, in.pa_lower, in.pb_upper); },
      1e-6, 1e4);
  if (!std::isfinite(best.value)) return 0.0;
  return in.sigma * std::max(0.0, best.value);
}

inline double radius(BoundKind kind, const BoundInputs& in) {
  switch (kind) {
    case BoundKind::Cohen: return cohen_radius(in);
    case BoundKind::Lecuyer: return lecuyer_radius(in);
    case BoundKind::Li: return li_radius(in);
  }
  throw std::invalid_argument("radius: unknown bound kind");
}

}  // namespace rsmooth
