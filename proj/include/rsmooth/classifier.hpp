#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rsmooth {

/// Class index. Labels are nonnegative and contiguous from zero.
using Label = std::int32_t;

/// The base classifier f that smoothing wraps. Implementations must be safe
/// for concurrent calls to the const interface; the engine never mutates a
/// model while sampling.
///
/// Differentiable models expose per-label scores and the input gradient of a
/// single score; their classify() is the argmax of scores() with ties going
/// to the lowest label.
class BaseClassifier {
 public:
  virtual ~BaseClassifier() = default;

  /// Expected input length, or 0 when any length is accepted.
  virtual std::size_t input_dim() const = 0;
  virtual std::size_t num_labels() const = 0;
  virtual Label classify(std::span<const double> x) const = 0;

  virtual bool differentiable() const { return false; }

  virtual std::vector<double> scores(std::span<const double>) const {
    throw std::logic_error("scores: classifier is not differentiable");
  }

  /// d scores(x)[label] / dx.
  virtual std::vector<double> score_gradient(std::span<const double>, Label) const {
    throw std::logic_error("score_gradient: classifier is not differentiable");
  }
};

inline Label argmax_label(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("argmax_label: empty score vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return static_cast<Label>(best);
}

inline void check_input_dim(const BaseClassifier& f, std::span<const double> x) {
  if (f.input_dim() != 0 && f.input_dim() != x.size()) {
    throw std::invalid_argument("input has dimension " + std::to_string(x.size()) + ", model expects " +
                                std::to_string(f.input_dim()));
  }
}

}  // namespace rsmooth
