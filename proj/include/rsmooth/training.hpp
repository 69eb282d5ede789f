#pragma once

// Gaussian data augmentation training for desk-scale base classifiers.
// Every epoch perturbs every example with a fresh N(0, sigma_train^2 I) draw
// and runs plain mini-batch gradient descent on softmax cross-entropy.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rsmooth/classifier.hpp"
#include "rsmooth/models.hpp"
#include "rsmooth/noise.hpp"

namespace rsmooth {

struct LabeledExample {
  std::vector<double> features;
  Label label = 0;
};

enum class ModelFamily { Logistic, Mlp };

struct TrainConfig {
  double sigma_train = 0.0;
  std::size_t epochs = 50;
  double learning_rate = 0.1;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  ModelFamily family = ModelFamily::Logistic;
  std::size_t hidden_width = 16;

  void validate() const {
    if (!(sigma_train >= 0.0) || !std::isfinite(sigma_train)) throw std::invalid_argument("sigma_train must be >= 0");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (family == ModelFamily::Mlp && hidden_width < 1) throw std::invalid_argument("hidden_width must be >= 1");
  }
};

struct TrainResult {
  std::unique_ptr<BaseClassifier> model;
  /// Mean cross-entropy over the noisy inputs seen in each epoch.
  std::vector<double> epoch_loss;
};

/// Called once per example per epoch with the augmented input actually used.
using AugmentationObserver =
    std::function<void(std::size_t epoch, std::size_t example, std::span<const double> noisy_input)>;

namespace detail {

inline void softmax_inplace(std::vector<double>& s) {
  const double hi = *std::max_element(s.begin(), s.end());
  double sum = 0.0;
  for (double& v : s) {
    v = std::exp(v - hi);
    sum += v;
  }
  for (double& v : s) v /= sum;
}

inline double cross_entropy_from_scores(std::span<const double> scores, Label label) {
  const double hi = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double v : scores) sum += std::exp(v - hi);
  return hi + std::log(sum) - scores[static_cast<std::size_t>(label)];
}

// Adds d CE / d params for one example into grad and returns the loss.
inline double accumulate_gradient(const LogisticModel& m, std::span<const double> x, Label y,
                                  std::span<double> grad) {
  std::vector<double> s = m.scores(x);
  const double loss = cross_entropy_from_scores(s, y);
  softmax_inplace(s);
  s[static_cast<std::size_t>(y)] -= 1.0;
  const std::size_t d = x.size();
  const std::size_t k = s.size();
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < d; ++j) grad[c * d + j] += s[c] * x[j];
    grad[k * d + c] += s[c];
  }
  return loss;
}

inline double accumulate_gradient(const MlpModel& m, std::span<const double> x, Label y, std::span<double> grad) {
  const std::vector<double> a = m.hidden_activations(x);
  std::vector<double> s = m.scores_from_hidden(a);
  const double loss = cross_entropy_from_scores(s, y);
  softmax_inplace(s);
  s[static_cast<std::size_t>(y)] -= 1.0;

  const std::size_t d = x.size();
  const std::size_t h = a.size();
  const std::size_t k = s.size();
  const auto p = m.params();
  std::vector<double> back(h, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < h; ++i) {
      grad[m.w2_offset() + c * h + i] += s[c] * a[i];
      back[i] += s[c] * p[m.w2_offset() + c * h + i];
    }
    grad[m.b2_offset() + c] += s[c];
  }
  for (std::size_t i = 0; i < h; ++i) {
    const double dz = back[i] * (1.0 - a[i] * a[i]);
    for (std::size_t j = 0; j < d; ++j) grad[m.w1_offset() + i * d + j] += dz * x[j];
    grad[m.b1_offset() + i] += dz;
  }
  return loss;
}

// Fisher-Yates driven by the counter-based hash so the order is identical
// across standard library implementations.
inline std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) {
    const std::uint64_t r = hash_tuple(seed, 0x5348554646ULL, epoch, i);
    std::swap(order[i - 1], order[r % i]);
  }
  return order;
}

template <typename Model>
std::vector<double> run_training(Model& model, std::span<const LabeledExample> data, const TrainConfig& cfg,
                                 const AugmentationObserver& observer) {
  const NoiseStream augmentation = NoiseStream(cfg.seed).derive(0x617567);
  const std::size_t d = data.front().features.size();
  std::vector<double> grad(model.params().size());
  std::vector<double> noisy(d);
  std::vector<double> history;
  history.reserve(cfg.epochs);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = epoch_order(data.size(), cfg.seed, epoch);
    double total_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t pos = start; pos < stop; ++pos) {
        const std::size_t i = order[pos];
        const auto& ex = data[i];
        for (std::size_t j = 0; j < d; ++j) {
          noisy[j] = ex.features[j] + cfg.sigma_train * augmentation.deviate(i, epoch, j);
        }
        if (observer) observer(epoch, i, noisy);
        total_loss += accumulate_gradient(model, noisy, ex.label, grad);
      }
      const double scale = cfg.learning_rate / static_cast<double>(stop - start);
      auto params = model.params();
      for (std::size_t q = 0; q < params.size(); ++q) params[q] -= scale * grad[q];
    }
    const double mean_loss = total_loss / static_cast<double>(data.size());
    if (!std::isfinite(mean_loss)) {
      std::ostringstream msg;
      msg << "training diverged: non-finite loss " << mean_loss << " at epoch " << epoch + 1;
      throw std::runtime_error(msg.str());
    }
    history.push_back(mean_loss);
  }
  return history;
}

}  // namespace detail

/// Number of labels implied by a dataset, checking that they cover
/// 0..K-1 without gaps.
inline std::size_t validate_dataset(std::span<const LabeledExample> data) {
  if (data.empty()) throw std::invalid_argument("dataset is empty");
  const std::size_t d = data.front().features.size();
  if (d == 0) throw std::invalid_argument("examples must have at least one feature");
  Label max_label = 0;
  for (const auto& ex : data) {
    if (ex.features.size() != d) throw std::invalid_argument("examples have inconsistent feature counts");
    if (ex.label < 0) throw std::invalid_argument("labels must be nonnegative");
    for (double v : ex.features) {
      if (!std::isfinite(v)) throw std::invalid_argument("features must be finite");
    }
    max_label = std::max(max_label, ex.label);
  }
  std::vector<bool> seen(static_cast<std::size_t>(max_label) + 1, false);
  for (const auto& ex : data) seen[static_cast<std::size_t>(ex.label)] = true;
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw std::invalid_argument("labels must form a contiguous range starting at 0");
  }
  return std::max<std::size_t>(2, seen.size());
}

/// Trains a logistic or MLP base classifier under Gaussian augmentation.
/// Deterministic given cfg.seed. Throws std::runtime_error if the loss
/// becomes non-finite.
inline TrainResult train_with_noise(std::span<const LabeledExample> data, const TrainConfig& cfg,
                                    const AugmentationObserver& observer = {}) {
  cfg.validate();
  const std::size_t labels = validate_dataset(data);
  const std::size_t d = data.front().features.size();

  TrainResult result;
  if (cfg.family == ModelFamily::Logistic) {
    auto model = std::make_unique<LogisticModel>(d, labels);
    result.epoch_loss = detail::run_training(*model, data, cfg, observer);
    result.model = std::move(model);
  } else {
    auto model = std::make_unique<MlpModel>(d, cfg.hidden_width, labels);
    const NoiseStream init = NoiseStream(cfg.seed).derive(0x696e6974);
    auto p = model->params();
    const double w1_scale = 1.0 / std::sqrt(static_cast<double>(d));
    const double w2_scale = 1.0 / std::sqrt(static_cast<double>(cfg.hidden_width));
    for (std::size_t q = model->w1_offset(); q < model->b1_offset(); ++q) p[q] = w1_scale * init.deviate(0, q, 0);
    for (std::size_t q = model->w2_offset(); q < model->b2_offset(); ++q) p[q] = w2_scale * init.deviate(1, q, 0);
    result.epoch_loss = detail::run_training(*model, data, cfg, observer);
    result.model = std::move(model);
  }
  return result;
}

/// Fraction of examples the base classifier labels correctly (no noise).
inline double clean_accuracy(const BaseClassifier& f, std::span<const LabeledExample> data) {
  if (data.empty()) throw std::invalid_argument("clean_accuracy: empty dataset");
  std::size_t correct = 0;
  for (const auto& ex : data) correct += f.classify(ex.features) == ex.label ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

/// Largest relative gap between score_gradient(x, label) and a central finite
/// difference of scores(x)[label] with step 1e-5. The denominator is floored
/// at 1e-6 so vanishing gradients compare on an absolute scale.
inline double model_gradient_check(const BaseClassifier& model, std::span<const double> x, Label label) {
  if (!model.differentiable()) throw std::invalid_argument("model_gradient_check: model is not differentiable");
  constexpr double h = 1e-5;
  const std::vector<double> analytic = model.score_gradient(x, label);
  std::vector<double> probe(x.begin(), x.end());
  double worst = 0.0;
  for (std::size_t j = 0; j < probe.size(); ++j) {
    const double saved = probe[j];
    probe[j] = saved + h;
    const double up = model.scores(probe)[static_cast<std::size_t>(label)];
    probe[j] = saved - h;
    const double down = model.scores(probe)[static_cast<std::size_t>(label)];
    probe[j] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(analytic[j]), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic[j] - numeric) / scale);
  }
  return worst;
}

/// Diagnostic for the gap between the two training objectives on a batch:
/// `soft` is -log of the noise-averaged softmax probability of the true label
/// and `cross_entropy` the noise-averaged -log softmax. By Jensen soft <=
/// cross_entropy.
struct ObjectiveGap {
  double soft = 0.0;
  double cross_entropy = 0.0;
};

inline ObjectiveGap smoothed_objective_gap(const BaseClassifier& model, std::span<const LabeledExample> batch,
                                           double sigma, std::size_t samples, const NoiseStream& noise) {
  if (!model.differentiable()) throw std::invalid_argument("smoothed_objective_gap: model is not differentiable");
  if (batch.empty() || samples == 0) throw std::invalid_argument("smoothed_objective_gap: empty batch or samples");
  ObjectiveGap gap;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& ex = batch[i];
    std::vector<double> point(ex.features.size());
    double mean_prob = 0.0;
    double mean_ce = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
      for (std::size_t j = 0; j < point.size(); ++j) point[j] = ex.features[j] + sigma * noise.deviate(i, s, j);
      std::vector<double> scores = model.scores(point);
      mean_ce += detail::cross_entropy_from_scores(scores, ex.label);
      detail::softmax_inplace(scores);
      mean_prob += scores[static_cast<std::size_t>(ex.label)];
    }
    gap.soft += -std::log(mean_prob / static_cast<double>(samples));
    gap.cross_entropy += mean_ce / static_cast<double>(samples);
  }
  gap.soft /= static_cast<double>(batch.size());
  gap.cross_entropy /= static_cast<double>(batch.size());
  return gap;
}

}  // namespace rsmooth
