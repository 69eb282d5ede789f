#pragma once

// PGD against the smoothed classifier: ascend the noise-averaged
// cross-entropy inside an l2 ball with normalized steps, then check the
// result with an independent predict() call.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rsmooth/classifier.hpp"
#include "rsmooth/noise.hpp"
#include "rsmooth/smoothing.hpp"

namespace rsmooth {

struct AttackParams {
  double radius = 0.5;
  double sigma = 0.25;
  std::size_t k = 1000;
  std::size_t steps = 20;
  double step_size = 0.1;
  std::uint64_t seed = 0;
  /// Settings of the predict() call that decides success.
  std::uint64_t check_n = 10000;
  double check_alpha = 0.01;

  void validate() const {
    if (!(radius > 0.0) || !(sigma > 0.0) || !(step_size > 0.0)) {
      throw std::invalid_argument("AttackParams: radius, sigma and step_size must be > 0");
    }
    if (k < 1 || steps < 1 || check_n < 1) throw std::invalid_argument("AttackParams: k, steps, check_n must be >= 1");
    if (!(check_alpha > 0.0 && check_alpha < 1.0)) throw std::invalid_argument("AttackParams: check_alpha outside (0, 1)");
  }
};

struct AttackResult {
  std::vector<double> delta;
  bool success = false;
  /// Label returned by the checking predict() call, empty on abstention.
  std::optional<Label> predicted;
  /// Steps whose Monte Carlo gradient was exactly zero (delta left as is).
  std::size_t zero_gradient_steps = 0;
  /// Largest ||delta|| observed over all iterates.
  double max_norm = 0.0;
};

inline double l2_norm(std::span<const double> v) { return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)); }

/// r z / max(r, ||z||).
inline std::vector<double> project_to_ball(std::span<const double> z, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("project_to_ball: r must be > 0");
  const double norm = l2_norm(z);
  std::vector<double> out(z.begin(), z.end());
  if (norm <= r) return out;
  const double scale = r / norm;
  for (double& v : out) v *= scale;
  return out;
}

/// d/dx of softmax cross-entropy at x for the given label:
///   sum_c (softmax(s)_c - [c = label]) grad s_c.
inline std::vector<double> cross_entropy_input_gradient(const BaseClassifier& model, std::span<const double> x,
                                                        Label label) {
  std::vector<double> s = model.scores(x);
  const double hi = *std::max_element(s.begin(), s.end());
  double sum = 0.0;
  for (double& v : s) {
    v = std::exp(v - hi);
    sum += v;
  }
  std::vector<double> g(x.size(), 0.0);
  for (std::size_t c = 0; c < s.size(); ++c) {
    const double weight = s[c] / sum - (static_cast<Label>(c) == label ? 1.0 : 0.0);
    if (weight == 0.0) continue;
    const std::vector<double> gc = model.score_gradient(x, static_cast<Label>(c));
    for (std::size_t j = 0; j < g.size(); ++j) g[j] += weight * gc[j];
  }
  return g;
}

/// Monte Carlo estimate of E_eps[grad_x CE(f(x + delta + eps), label)] using
/// samples 0..k-1 of the given noise stream.
inline std::vector<double> smoothed_loss_gradient(const BaseClassifier& model, std::span<const double> x,
                                                  std::span<const double> delta, Label label, double sigma,
                                                  std::size_t k, const NoiseStream& noise, std::uint64_t stream) {
  std::vector<double> point(x.size());
  std::vector<double> g(x.size(), 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) point[j] = x[j] + delta[j] + sigma * noise.deviate(stream, i, j);
    const std::vector<double> gi = cross_entropy_input_gradient(model, point, label);
    for (std::size_t j = 0; j < g.size(); ++j) g[j] += gi[j];
  }
  for (double& v : g) v /= static_cast<double>(k);
  return g;
}

/// Runs `steps` iterations of delta <- proj_r(delta + step_size g / ||g||)
/// from delta = 0, drawing k fresh noise samples per step. Success means a
/// fresh predict() at x + delta returns a label other than `label`.
inline AttackResult pgd_attack(const BaseClassifier& model, std::span<const double> x, Label label,
                               const AttackParams& params) {
  params.validate();
  if (!model.differentiable()) throw std::invalid_argument("pgd_attack: model must expose scores and gradients");
  check_input_dim(model, x);

  const NoiseStream root(params.seed);
  const NoiseStream step_noise = root.derive(0x706764);
  AttackResult out;
  out.delta.assign(x.size(), 0.0);

  for (std::size_t t = 0; t < params.steps; ++t) {
    const std::vector<double> g =
        smoothed_loss_gradient(model, x, out.delta, label, params.sigma, params.k, step_noise, t);
    const double norm = l2_norm(g);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      ++out.zero_gradient_steps;
      continue;
    }
    std::vector<double> moved(out.delta);
    for (std::size_t j = 0; j < moved.size(); ++j) moved[j] += params.step_size * g[j] / norm;
    out.delta = project_to_ball(moved, params.radius);
    out.max_norm = std::max(out.max_norm, l2_norm(out.delta));
  }

  std::vector<double> attacked(x.begin(), x.end());
  for (std::size_t j = 0; j < attacked.size(); ++j) attacked[j] += out.delta[j];
  const SmoothingParams check{params.sigma, 1, params.check_n, params.check_alpha};
  const Prediction p = predict(model, check, attacked, root.derive(0x636865636b), 0);
  out.predicted = p.label;
  out.success = p.label.has_value() && *p.label != label;
  return out;
}

}  // namespace rsmooth
