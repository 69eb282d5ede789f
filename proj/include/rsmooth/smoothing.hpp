#pragma once

// Monte Carlo prediction and certification for the Gaussian-smoothed
// classifier g(x) = argmax_c P(f(x + eps) = c), eps ~ N(0, sigma^2 I).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "rsmooth/bounds.hpp"
#include "rsmooth/classifier.hpp"
#include "rsmooth/noise.hpp"
#include "rsmooth/statfun.hpp"

namespace rsmooth {

struct SmoothingParams {
  double sigma = 1.0;
  std::uint64_t n0 = 100;
  std::uint64_t n = 100000;
  double alpha = 0.001;

  void validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("sigma must be > 0");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    if (n0 < 1 || n < 1) throw std::invalid_argument("n0 and n must be >= 1");
  }
};

/// How sample_under_noise spreads work. None of these settings change the
/// returned counts.
struct SamplingOptions {
  std::size_t parallelism = 1;
  std::size_t batch_size = 1000;
};

/// Per-label tallies of base-classifier votes under noise.
class ClassCounts {
 public:
  ClassCounts() = default;

  static ClassCounts from_vector(std::vector<std::uint64_t> counts) {
    ClassCounts c;
    c.counts_ = std::move(counts);
    for (auto v : c.counts_) c.total_ += v;
    return c;
  }

  void add(Label label, std::uint64_t k = 1) {
    if (label < 0) throw std::invalid_argument("ClassCounts: negative label");
    const auto idx = static_cast<std::size_t>(label);
    if (idx >= counts_.size()) counts_.resize(idx + 1, 0);
    counts_[idx] += k;
    total_ += k;
  }

  void merge(const ClassCounts& other) {
    for (std::size_t i = 0; i < other.counts_.size(); ++i) {
      if (other.counts_[i] != 0) add(static_cast<Label>(i), other.counts_[i]);
    }
  }

  std::uint64_t count(Label label) const {
    if (label < 0 || static_cast<std::size_t>(label) >= counts_.size()) return 0;
    return counts_[static_cast<std::size_t>(label)];
  }

  std::uint64_t total() const { return total_; }

  /// One past the largest label with a nonzero count.
  std::size_t label_span() const {
    std::size_t n = counts_.size();
    while (n > 0 && counts_[n - 1] == 0) --n;
    return n;
  }

  /// Label with the largest count; ties go to the lowest label.
  Label top() const {
    if (total_ == 0) throw std::logic_error("ClassCounts::top on empty counts");
    std::size_t best = 0;
    for (std::size_t i = 1; i < counts_.size(); ++i) {
      if (counts_[i] > counts_[best]) best = i;
    }
    return static_cast<Label>(best);
  }

  /// Top two labels by count (ties to the lowest label). The runner-up is
  /// the best label other than the top one and may have a zero count.
  std::pair<Label, Label> top_two() const {
    const Label a = top();
    Label b = a == 0 ? 1 : 0;
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      const auto li = static_cast<Label>(i);
      if (li != a && counts_[i] > count(b)) b = li;
    }
    return {a, b};
  }

  bool operator==(const ClassCounts& other) const {
    const std::size_t n = std::max(label_span(), other.label_span());
    for (std::size_t i = 0; i < n; ++i) {
      if (count(static_cast<Label>(i)) != other.count(static_cast<Label>(i))) return false;
    }
    return true;
  }

 private:
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

/// Evaluates f at x + sigma * eps_i for sample indices
/// first_index, ..., first_index + num - 1 of the (noise, example_id) stream.
/// Samples are grouped in batches that are distributed over
/// options.parallelism threads; per-thread tallies are summed, so the result
/// depends only on the sample indices. Any exception thrown by f aborts the
/// whole call.
inline ClassCounts sample_under_noise(const BaseClassifier& f, std::span<const double> x, std::uint64_t num,
                                      double sigma, const NoiseStream& noise, std::uint64_t example_id,
                                      std::uint64_t first_index = 0, const SamplingOptions& options = {}) {
  if (num < 1) throw std::invalid_argument("sample_under_noise: num must be >= 1");
  if (!(sigma > 0.0)) throw std::invalid_argument("sample_under_noise: sigma must be > 0");
  check_input_dim(f, x);

  const std::uint64_t batch = std::max<std::uint64_t>(1, options.batch_size);
  const std::uint64_t num_batches = (num + batch - 1) / batch;
  const std::size_t workers = static_cast<std::size_t>(
      std::clamp<std::uint64_t>(options.parallelism, 1, num_batches));

  std::vector<ClassCounts> partial(workers);
  std::vector<std::exception_ptr> errors(workers);

  auto work = [&](std::size_t w) {
    try {
      std::vector<double> point(x.size());
      ClassCounts local;
      for (std::uint64_t b = w; b < num_batches; b += workers) {
        const std::uint64_t begin = b * batch;
        const std::uint64_t end = std::min(num, begin + batch);
        for (std::uint64_t i = begin; i < end; ++i) {
          const std::uint64_t index = first_index + i;
          for (std::size_t j = 0; j < x.size(); ++j) {
            point[j] = x[j] + sigma * noise.deviate(example_id, index, j);
          }
          local.add(f.classify(point));
        }
      }
      partial[w] = std::move(local);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work, w);
    for (auto& t : threads) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ClassCounts counts;
  for (const auto& p : partial) counts.merge(p);
  return counts;
}

/// Result of predict(): a label, or abstention when the top-two vote split is
/// not significant at level alpha.
struct Prediction {
  std::optional<Label> label;
  ClassCounts counts;
  double pvalue = 1.0;

  bool abstained() const { return !label.has_value(); }
};

/// Decision rule of predict() applied to already-collected counts.
inline Prediction predict_from_counts(ClassCounts counts, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("predict: alpha must lie in (0, 1)");
  const auto [a, b] = counts.top_two();
  const std::uint64_t na = counts.count(a);
  const std::uint64_t nb = counts.count(b);
  Prediction p;
  p.pvalue = binom_two_sided_pvalue(na, na + nb, 0.5);
  if (p.pvalue <= alpha) p.label = a;
  p.counts = std::move(counts);
  return p;
}

/// Draws params.n noisy samples and returns the top label if it beats the
/// runner-up in a two-sided binomial test at level alpha. The returned label
/// differs from g(x) with probability at most alpha.
inline Prediction predict(const BaseClassifier& f, const SmoothingParams& params, std::span<const double> x,
                          const NoiseStream& noise, std::uint64_t example_id, const SamplingOptions& options = {}) {
  params.validate();
  return predict_from_counts(sample_under_noise(f, x, params.n, params.sigma, noise, example_id, 0, options),
                             params.alpha);
}

struct Certificate {
  Label label = 0;
  double radius = 0.0;
  double pa_lower = 0.0;
};

/// Result of certify(). On abstention `certificate` is empty; the candidate
/// label and both count vectors are kept either way.
struct Certification {
  std::optional<Certificate> certificate;
  Label candidate = 0;
  ClassCounts selection_counts;
  ClassCounts estimation_counts;

  bool abstained() const { return !certificate.has_value(); }
};

/// Clopper-Pearson lower bound on P(f(x + eps) = candidate) from the
/// estimation counts, and the certificate if that bound exceeds 1/2.
inline std::optional<Certificate> certificate_from_counts(Label candidate, const ClassCounts& estimation,
                                                          double alpha, double sigma) {
  if (estimation.total() == 0) throw std::invalid_argument("certificate_from_counts: empty counts");
  const double pa_lower = clopper_pearson_lower(estimation.count(candidate), estimation.total(), alpha);
  if (!(pa_lower > 0.5)) return std::nullopt;
  return Certificate{candidate, cohen_radius_binary(pa_lower, sigma), pa_lower};
}

/// n0 selection samples pick the candidate label; n fresh samples (the next
/// segment of the same noise stream) bound its probability. With probability
/// at least 1 - alpha, a returned certificate satisfies g(x + d) = label for
/// every ||d|| < radius.
inline Certification certify(const BaseClassifier& f, const SmoothingParams& params, std::span<const double> x,
                             const NoiseStream& noise, std::uint64_t example_id, const SamplingOptions& options = {}) {
  params.validate();
  Certification out;
  out.selection_counts = sample_under_noise(f, x, params.n0, params.sigma, noise, example_id, 0, options);
  out.candidate = out.selection_counts.top();
  out.estimation_counts = sample_under_noise(f, x, params.n, params.sigma, noise, example_id, params.n0, options);
  out.certificate = certificate_from_counts(out.candidate, out.estimation_counts, params.alpha, params.sigma);
  return out;
}

/// Rescales counts to total n_new keeping class proportions. Each class gets
/// round(n_new * count / total); the top class absorbs the rounding residue.
inline ClassCounts project_counts(const ClassCounts& counts, std::uint64_t n_new) {
  if (counts.total() == 0) throw std::invalid_argument("project_counts: empty counts");
  if (n_new < 1) throw std::invalid_argument("project_counts: n_new must be >= 1");
  const std::size_t span = counts.label_span();
  const Label top = counts.top();
  std::vector<std::uint64_t> scaled(span, 0);
  std::uint64_t others = 0;
  for (std::size_t i = 0; i < span; ++i) {
    if (static_cast<Label>(i) == top) continue;
    const double share = static_cast<double>(n_new) * static_cast<double>(counts.count(static_cast<Label>(i))) /
                         static_cast<double>(counts.total());
    scaled[i] = static_cast<std::uint64_t>(std::llround(share));
    others += scaled[i];
  }
  // Rounding can overshoot when many small classes all round up.
  while (others > n_new) {
    std::size_t biggest = span;
    for (std::size_t i = 0; i < span; ++i) {
      if (static_cast<Label>(i) == top) continue;
      if (biggest == span || scaled[i] > scaled[biggest]) biggest = i;
    }
    --scaled[biggest];
    --others;
  }
  scaled[static_cast<std::size_t>(top)] = n_new - others;
  return ClassCounts::from_vector(std::move(scaled));
}

}  // namespace rsmooth
