#pragma once

// Base classifiers whose smoothed behaviour has a closed form. These are the
// ground truth for the statistical tests: halfspaces, the 1-D interval
// counterexample, the worst-case halfspace that makes the radius bound tight,
// and the average-pooling lift that doubles a certified radius.

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rsmooth/bounds.hpp"
#include "rsmooth/classifier.hpp"
#include "rsmooth/models.hpp"
#include "rsmooth/statfun.hpp"

namespace rsmooth {

struct SmoothedProb {
  double value = 0.5;
  bool on_boundary = false;
};

/// Exact probability that the smoothed vote of a halfspace at x agrees with
/// the base label at x: Phi(|w.x + b| / (sigma ||w||)). Exactly 1/2 on the
/// boundary.
inline SmoothedProb exact_smoothed_prob(const LinearModel& model, std::span<const double> x, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("exact_smoothed_prob: sigma must be > 0");
  const double m = model.margin(x);
  if (m == 0.0) return {0.5, true};
  return {std_normal_cdf(std::abs(m) / (sigma * model.weight_norm())), false};
}

/// Distance from x to the decision boundary: the exact l2 robustness radius
/// of both the halfspace and its smoothed version.
inline double true_robust_radius(const LinearModel& model, std::span<const double> x) {
  return std::abs(model.margin(x)) / model.weight_norm();
}

/// A perturbation of length r along -sign(w.x + b) w / ||w|| that crosses the
/// boundary. Only exists for r beyond the true radius.
inline std::vector<double> breaking_perturbation(const LinearModel& model, std::span<const double> x, double r) {
  const double radius = true_robust_radius(model, x);
  if (!(r > radius)) throw std::domain_error("breaking_perturbation: r must exceed the true robust radius");
  const double m = model.margin(x);
  // On the negative side (label 0) move toward +w, otherwise toward -w.
  const double direction = m > 0.0 ? -1.0 : 1.0;
  const double scale = direction * r / model.weight_norm();
  std::vector<double> delta(model.weights().size());
  for (std::size_t j = 0; j < delta.size(); ++j) delta[j] = scale * model.weights()[j];
  return delta;
}

/// 1-D classifier returning the inner label on [-t, t] and the outer label
/// elsewhere.
class IntervalClassifier final : public BaseClassifier {
 public:
  IntervalClassifier(double half_width, Label outer = 0, Label inner = 1)
      : t_(half_width), outer_(outer), inner_(inner) {
    if (!(half_width > 0.0) || !std::isfinite(half_width)) throw std::invalid_argument("IntervalClassifier: t must be > 0");
    if (outer < 0 || inner < 0 || outer == inner) throw std::invalid_argument("IntervalClassifier: bad labels");
  }

  double half_width() const { return t_; }
  Label outer_label() const { return outer_; }
  Label inner_label() const { return inner_; }

  std::size_t input_dim() const override { return 1; }
  std::size_t num_labels() const override { return static_cast<std::size_t>(std::max(outer_, inner_)) + 1; }
  Label classify(std::span<const double> z) const override {
    check_input_dim(*this, z);
    return (z[0] >= -t_ && z[0] <= t_) ? inner_ : outer_;
  }

 private:
  double t_;
  Label outer_;
  Label inner_;
};

/// The interval classifier with t = -Phi^-1(Phi(tau) / 2). At the origin its
/// sigma = 1 smoothed outer-label probability is 2 Phi(-t) = Phi(tau), so the
/// radius bound from exact probabilities is tau, while the smoothed
/// prediction is the outer label everywhere.
inline IntervalClassifier make_interval_counterexample(double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("make_interval_counterexample: tau must be > 0");
  return IntervalClassifier(-std_normal_quantile(0.5 * std_normal_cdf(tau)));
}

/// P(f(x + eps) = inner label) for eps ~ N(0, sigma^2).
inline double exact_interval_prob(const IntervalClassifier& c, double x, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("exact_interval_prob: sigma must be > 0");
  const double t = c.half_width();
  return std_normal_cdf((t - x) / sigma) - std_normal_cdf((-t - x) / sigma);
}

/// The halfspace that attains the smallest possible top-class probability at
/// x + delta among classifiers with P(f(x + eps) = c_A) = pa_lower:
///   f*(x') = c_A  iff  delta.(x' - x) <= sigma ||delta|| Phi^-1(pa_lower),
/// with every other input assigned to c_B.
class WorstCaseClassifier final : public BaseClassifier {
 public:
  WorstCaseClassifier(std::vector<double> anchor, std::vector<double> delta, double threshold, Label top,
                      Label runner_up)
      : anchor_(std::move(anchor)), delta_(std::move(delta)), threshold_(threshold), top_(top), runner_(runner_up) {
    if (anchor_.size() != delta_.size()) throw std::invalid_argument("WorstCaseClassifier: dimension mismatch");
    delta_norm_ = std::sqrt(std::inner_product(delta_.begin(), delta_.end(), delta_.begin(), 0.0));
    if (!(delta_norm_ > 0.0)) throw std::invalid_argument("WorstCaseClassifier: delta must be nonzero");
    if (top < 0 || runner_up < 0 || top == runner_up) throw std::invalid_argument("WorstCaseClassifier: bad labels");
  }

  const std::vector<double>& anchor() const { return anchor_; }
  const std::vector<double>& delta() const { return delta_; }
  double threshold() const { return threshold_; }
  double delta_norm() const { return delta_norm_; }
  Label top_label() const { return top_; }
  Label runner_up_label() const { return runner_; }

  /// delta.(x' - x)
  double projection(std::span<const double> xp) const {
    check_input_dim(*this, xp);
    double s = 0.0;
    for (std::size_t j = 0; j < delta_.size(); ++j) s += delta_[j] * (xp[j] - anchor_[j]);
    return s;
  }

  std::size_t input_dim() const override { return anchor_.size(); }
  std::size_t num_labels() const override { return static_cast<std::size_t>(std::max(top_, runner_)) + 1; }
  Label classify(std::span<const double> xp) const override {
    return projection(xp) <= threshold_ ? top_ : runner_;
  }

 private:
  std::vector<double> anchor_;
  std::vector<double> delta_;
  double threshold_;
  double delta_norm_ = 0.0;
  Label top_;
  Label runner_;
};

inline WorstCaseClassifier make_worst_case(std::vector<double> x, std::vector<double> delta, double pa_lower,
                                           double sigma, Label top = 0, Label runner_up = 1) {
  if (!(pa_lower > 0.0 && pa_lower < 1.0)) throw std::invalid_argument("make_worst_case: pa_lower outside (0, 1)");
  if (!(sigma > 0.0)) throw std::invalid_argument("make_worst_case: sigma must be > 0");
  const double norm = std::sqrt(std::inner_product(delta.begin(), delta.end(), delta.begin(), 0.0));
  const double threshold = sigma * norm * std_normal_quantile(pa_lower);
  return WorstCaseClassifier(std::move(x), std::move(delta), threshold, top, runner_up);
}

/// Exact P(f*(y + eps) = c_A), eps ~ N(0, sigma^2 I). The projection of the
/// noise onto delta is N(0, sigma^2 ||delta||^2), which gives
/// Phi((threshold - delta.(y - x)) / (sigma ||delta||)).
inline double exact_worst_case_prob(const WorstCaseClassifier& f, std::span<const double> y, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("exact_worst_case_prob: sigma must be > 0");
  return std_normal_cdf((f.threshold() - f.projection(y)) / (sigma * f.delta_norm()));
}

/// Mean over consecutive blocks of four coordinates: the flattened analogue
/// of 2x2 average pooling.
inline std::vector<double> avgpool4(std::span<const double> x) {
  if (x.empty() || x.size() % 4 != 0) throw std::invalid_argument("avgpool4: length must be a positive multiple of 4");
  std::vector<double> out(x.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = 0.25 * (x[4 * i] + x[4 * i + 1] + x[4 * i + 2] + x[4 * i + 3]);
  }
  return out;
}

/// f(x) = f_low(avgpool4(x)).
class PooledClassifier final : public BaseClassifier {
 public:
  explicit PooledClassifier(LinearModel low) : low_(std::move(low)) {}

  const LinearModel& low_res() const { return low_; }

  /// The same function written directly as a halfspace on the 4d-dimensional
  /// input: each low-res weight is spread as w/4 over its block.
  LinearModel induced_linear() const {
    std::vector<double> w;
    w.reserve(4 * low_.weights().size());
    for (double v : low_.weights()) w.insert(w.end(), 4, 0.25 * v);
    return LinearModel(std::move(w), low_.bias());
  }

  std::size_t input_dim() const override { return 4 * low_.input_dim(); }
  std::size_t num_labels() const override { return low_.num_labels(); }
  Label classify(std::span<const double> x) const override {
    check_input_dim(*this, x);
    return low_.classify(avgpool4(x));
  }

 private:
  LinearModel low_;
};

/// Lifts a low-resolution model to inputs four times larger. Smoothing the
/// lifted model with sigma = 2 sigma_low produces the same vote distribution
/// as smoothing the low-res model at the pooled input, and twice its radius.
inline std::pair<PooledClassifier, double> avgpool_lift(const LinearModel& model, double sigma_low) {
  if (!(sigma_low > 0.0)) throw std::invalid_argument("avgpool_lift: sigma must be > 0");
  return {PooledClassifier(model), 2.0 * sigma_low};
}

}  // namespace rsmooth
