#pragma once

// Concrete base classifiers: a constant classifier, the binary halfspace
// (which doubles as the exact linear oracle), multinomial logistic
// regression and a one-hidden-layer tanh MLP.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rsmooth/classifier.hpp"

namespace rsmooth {

class ConstantClassifier final : public BaseClassifier {
 public:
  ConstantClassifier(Label label, std::size_t num_labels, std::size_t dim = 0)
      : label_(label), num_labels_(num_labels), dim_(dim) {
    if (label < 0 || static_cast<std::size_t>(label) >= num_labels) {
      throw std::invalid_argument("ConstantClassifier: label outside [0, num_labels)");
    }
  }

  std::size_t input_dim() const override { return dim_; }
  std::size_t num_labels() const override { return num_labels_; }
  Label classify(std::span<const double>) const override { return label_; }
  Label label() const { return label_; }

 private:
  Label label_;
  std::size_t num_labels_;
  std::size_t dim_;
};

/// Binary halfspace f(x) = [w.x + b > 0]: label 1 on the positive side,
/// label 0 otherwise (including the boundary itself).
class LinearModel final : public BaseClassifier {
 public:
  LinearModel(std::vector<double> w, double b) : w_(std::move(w)), b_(b) {
    if (w_.empty() || std::all_of(w_.begin(), w_.end(), [](double v) { return v == 0.0; })) {
      throw std::invalid_argument("LinearModel: weight vector must be nonzero");
    }
    if (!std::isfinite(b_) || !std::all_of(w_.begin(), w_.end(), [](double v) { return std::isfinite(v); })) {
      throw std::invalid_argument("LinearModel: parameters must be finite");
    }
  }

  const std::vector<double>& weights() const { return w_; }
  double bias() const { return b_; }

  double weight_norm() const { return std::sqrt(std::inner_product(w_.begin(), w_.end(), w_.begin(), 0.0)); }

  double margin(std::span<const double> x) const {
    check_input_dim(*this, x);
    return std::inner_product(w_.begin(), w_.end(), x.begin(), b_);
  }

  std::size_t input_dim() const override { return w_.size(); }
  std::size_t num_labels() const override { return 2; }
  Label classify(std::span<const double> x) const override { return margin(x) > 0.0 ? 1 : 0; }

  bool differentiable() const override { return true; }
  std::vector<double> scores(std::span<const double> x) const override { return {0.0, margin(x)}; }
  std::vector<double> score_gradient(std::span<const double> x, Label label) const override {
    check_input_dim(*this, x);
    if (label == 1) return w_;
    if (label == 0) return std::vector<double>(w_.size(), 0.0);
    throw std::invalid_argument("LinearModel: label must be 0 or 1");
  }

 private:
  std::vector<double> w_;
  double b_;
};

/// Multinomial logistic regression: scores = W x + b with W stored row-major
/// (num_labels x dim) followed by b in one flat parameter vector.
class LogisticModel final : public BaseClassifier {
 public:
  LogisticModel(std::size_t dim, std::size_t num_labels)
      : dim_(dim), labels_(num_labels), params_(num_labels * dim + num_labels, 0.0) {
    if (dim == 0 || num_labels < 2) throw std::invalid_argument("LogisticModel: need dim >= 1 and >= 2 labels");
  }

  LogisticModel(std::size_t dim, std::size_t num_labels, std::vector<double> params)
      : LogisticModel(dim, num_labels) {
    if (params.size() != params_.size()) throw std::invalid_argument("LogisticModel: wrong parameter count");
    params_ = std::move(params);
  }

  static std::size_t parameter_count(std::size_t dim, std::size_t num_labels) {
    return num_labels * dim + num_labels;
  }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  double weight(std::size_t label, std::size_t j) const { return params_[label * dim_ + j]; }
  double bias(std::size_t label) const { return params_[labels_ * dim_ + label]; }

  std::size_t input_dim() const override { return dim_; }
  std::size_t num_labels() const override { return labels_; }
  Label classify(std::span<const double> x) const override { return argmax_label(scores(x)); }

  bool differentiable() const override { return true; }

  std::vector<double> scores(std::span<const double> x) const override {
    check_input_dim(*this, x);
    std::vector<double> s(labels_);
    for (std::size_t c = 0; c < labels_; ++c) {
      const double* row = params_.data() + c * dim_;
      s[c] = std::inner_product(row, row + dim_, x.begin(), bias(c));
    }
    return s;
  }

  std::vector<double> score_gradient(std::span<const double> x, Label label) const override {
    check_input_dim(*this, x);
    if (label < 0 || static_cast<std::size_t>(label) >= labels_) throw std::invalid_argument("label out of range");
    const double* row = params_.data() + static_cast<std::size_t>(label) * dim_;
    return std::vector<double>(row, row + dim_);
  }

 private:
  std::size_t dim_;
  std::size_t labels_;
  std::vector<double> params_;
};

/// One hidden layer with tanh activation:
///   scores = W2 tanh(W1 x + b1) + b2
/// Flat parameter layout: W1 (hidden x dim, row-major), b1, W2 (labels x
/// hidden, row-major), b2.
class MlpModel final : public BaseClassifier {
 public:
  MlpModel(std::size_t dim, std::size_t hidden, std::size_t num_labels)
      : dim_(dim), hidden_(hidden), labels_(num_labels), params_(parameter_count(dim, hidden, num_labels), 0.0) {
    if (dim == 0 || hidden == 0 || num_labels < 2) {
      throw std::invalid_argument("MlpModel: need dim >= 1, hidden >= 1 and >= 2 labels");
    }
  }

  MlpModel(std::size_t dim, std::size_t hidden, std::size_t num_labels, std::vector<double> params)
      : MlpModel(dim, hidden, num_labels) {
    if (params.size() != params_.size()) throw std::invalid_argument("MlpModel: wrong parameter count");
    params_ = std::move(params);
  }

  static std::size_t parameter_count(std::size_t dim, std::size_t hidden, std::size_t num_labels) {
    return hidden * dim + hidden + num_labels * hidden + num_labels;
  }

  std::size_t hidden_width() const { return hidden_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  // Offsets into the flat parameter vector.
  std::size_t w1_offset() const { return 0; }
  std::size_t b1_offset() const { return hidden_ * dim_; }
  std::size_t w2_offset() const { return b1_offset() + hidden_; }
  std::size_t b2_offset() const { return w2_offset() + labels_ * hidden_; }

  /// tanh(W1 x + b1).
  std::vector<double> hidden_activations(std::span<const double> x) const {
    check_input_dim(*this, x);
    std::vector<double> a(hidden_);
    const double* w1 = params_.data() + w1_offset();
    const double* b1 = params_.data() + b1_offset();
    for (std::size_t h = 0; h < hidden_; ++h) {
      a[h] = std::tanh(std::inner_product(w1 + h * dim_, w1 + (h + 1) * dim_, x.begin(), b1[h]));
    }
    return a;
  }

  std::vector<double> scores_from_hidden(std::span<const double> a) const {
    std::vector<double> s(labels_);
    const double* w2 = params_.data() + w2_offset();
    const double* b2 = params_.data() + b2_offset();
    for (std::size_t c = 0; c < labels_; ++c) {
      s[c] = std::inner_product(w2 + c * hidden_, w2 + (c + 1) * hidden_, a.begin(), b2[c]);
    }
    return s;
  }

  std::size_t input_dim() const override { return dim_; }
  std::size_t num_labels() const override { return labels_; }
  Label classify(std::span<const double> x) const override { return argmax_label(scores(x)); }

  bool differentiable() const override { return true; }

  std::vector<double> scores(std::span<const double> x) const override {
    return scores_from_hidden(hidden_activations(x));
  }

  std::vector<double> score_gradient(std::span<const double> x, Label label) const override {
    if (label < 0 || static_cast<std::size_t>(label) >= labels_) throw std::invalid_argument("label out of range");
    const std::vector<double> a = hidden_activations(x);
    const double* w1 = params_.data() + w1_offset();
    const double* w2row = params_.data() + w2_offset() + static_cast<std::size_t>(label) * hidden_;
    std::vector<double> g(dim_, 0.0);
    for (std::size_t h = 0; h < hidden_; ++h) {
      const double back = w2row[h] * (1.0 - a[h] * a[h]);
      for (std::size_t j = 0; j < dim_; ++j) g[j] += back * w1[h * dim_ + j];
    }
    return g;
  }

 private:
  std::size_t dim_;
  std::size_t hidden_;
  std::size_t labels_;
  std::vector<double> params_;
};

}  // namespace rsmooth
