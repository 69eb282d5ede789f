#pragma once

// Dataset-level drivers behind the `certify` and `predict` subcommands. Each
// record line is flushed as soon as it is written, so a partially written
// output file is still valid JSONL.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "rsmooth/classifier.hpp"
#include "rsmooth/noise.hpp"
#include "rsmooth/report.hpp"
#include "rsmooth/smoothing.hpp"
#include "rsmooth/training.hpp"

namespace rsmooth {

struct RunConfig {
  SmoothingParams params;
  std::string dataset_path;
  std::string model_path;
  std::string output_path;
  std::uint64_t seed = 0;
  std::size_t parallelism = 1;
  std::size_t batch_size = 1000;
  bool store_counts = false;
  /// When false, wall_time_ms is written as 0 so that reruns are
  /// byte-identical.
  bool record_wall_time = true;

  void validate() const {
    params.validate();
    if (parallelism < 1) throw std::invalid_argument("parallelism must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  }
};

struct RunSummary {
  std::size_t examples = 0;
  std::size_t certified = 0;  // non-abstaining and correct
  std::size_t abstained = 0;
  std::size_t wrong = 0;
  double wall_time_ms = 0.0;
};

inline std::ostream& operator<<(std::ostream& os, const RunSummary& s) {
  return os << "examples=" << s.examples << " correct=" << s.certified << " abstained=" << s.abstained
            << " wrong=" << s.wrong << " wall_time_ms=" << s.wall_time_ms;
}

namespace detail {

inline double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace detail

inline RunSummary certify_dataset(const BaseClassifier& model, std::span<const LabeledExample> data,
                                  const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  const auto run_start = std::chrono::steady_clock::now();
  const NoiseStream noise(cfg.seed);
  const SamplingOptions sampling{cfg.parallelism, cfg.batch_size};

  out << schema_header(kCertifySchema).dump() << '\n' << std::flush;
  RunSummary summary;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    const Certification c = certify(model, cfg.params, data[i].features, noise, i, sampling);
    const double ms = cfg.record_wall_time ? detail::elapsed_ms(start) : 0.0;
    const CertificationRecord rec = make_record(i, data[i].label, c, cfg.params, cfg.seed, ms, cfg.store_counts);
    out << record_to_json(rec).dump() << '\n' << std::flush;

    ++summary.examples;
    if (rec.abstained()) {
      ++summary.abstained;
    } else if (rec.correct()) {
      ++summary.certified;
    } else {
      ++summary.wrong;
    }
  }
  summary.wall_time_ms = detail::elapsed_ms(run_start);
  return summary;
}

inline nlohmann::ordered_json prediction_to_json(std::uint64_t example_index, Label true_label, const Prediction& p,
                                                 const RunConfig& cfg, double wall_time_ms) {
  nlohmann::ordered_json j;
  j["example_index"] = example_index;
  j["true_label"] = true_label;
  j["outcome"] = p.abstained() ? "abstain" : "predicted";
  j["predicted_label"] = json_or_null(p.label);
  j["pvalue"] = p.pvalue;
  if (cfg.store_counts) j["counts"] = counts_to_json(p.counts);
  j["sigma"] = cfg.params.sigma;
  j["n"] = cfg.params.n;
  j["alpha"] = cfg.params.alpha;
  j["seed"] = cfg.seed;
  j["wall_time_ms"] = wall_time_ms;
  return j;
}

/// predict() over a dataset. In the summary `certified` counts correct
/// predictions.
inline RunSummary predict_dataset(const BaseClassifier& model, std::span<const LabeledExample> data,
                                  const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  const auto run_start = std::chrono::steady_clock::now();
  const NoiseStream noise(cfg.seed);
  const SamplingOptions sampling{cfg.parallelism, cfg.batch_size};

  out << schema_header(kPredictSchema).dump() << '\n' << std::flush;
  RunSummary summary;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    const Prediction p = predict(model, cfg.params, data[i].features, noise, i, sampling);
    const double ms = cfg.record_wall_time ? detail::elapsed_ms(start) : 0.0;
    out << prediction_to_json(i, data[i].label, p, cfg, ms).dump() << '\n' << std::flush;

    ++summary.examples;
    if (p.abstained()) {
      ++summary.abstained;
    } else if (*p.label == data[i].label) {
      ++summary.certified;
    } else {
      ++summary.wrong;
    }
  }
  summary.wall_time_ms = detail::elapsed_ms(run_start);
  return summary;
}

}  // namespace rsmooth
