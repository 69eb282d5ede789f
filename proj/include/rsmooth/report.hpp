#pragma once

// Certification records and the certified-accuracy tables built from them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rsmooth/bounds.hpp"
#include "rsmooth/smoothing.hpp"

namespace rsmooth {

inline constexpr const char* kCertifySchema = "rsmooth.certify";
inline constexpr const char* kPredictSchema = "rsmooth.predict";
inline constexpr int kRecordSchemaVersion = 1;

/// One certify() outcome for one test example.
struct CertificationRecord {
  std::uint64_t example_index = 0;
  Label true_label = 0;
  std::optional<Label> predicted_label;
  std::optional<double> radius;
  std::optional<double> pa_lower;
  std::optional<ClassCounts> counts;
  SmoothingParams params;
  std::uint64_t seed = 0;
  double wall_time_ms = 0.0;

  bool abstained() const { return !predicted_label.has_value(); }
  bool correct() const { return predicted_label.has_value() && *predicted_label == true_label; }
};

inline CertificationRecord make_record(std::uint64_t example_index, Label true_label, const Certification& c,
                                       const SmoothingParams& params, std::uint64_t seed, double wall_time_ms,
                                       bool store_counts) {
  CertificationRecord r;
  r.example_index = example_index;
  r.true_label = true_label;
  if (c.certificate) {
    r.predicted_label = c.certificate->label;
    r.radius = c.certificate->radius;
    r.pa_lower = c.certificate->pa_lower;
  }
  if (store_counts) r.counts = c.estimation_counts;
  r.params = params;
  r.seed = seed;
  r.wall_time_ms = wall_time_ms;
  return r;
}

template <typename T>
nlohmann::ordered_json json_or_null(const std::optional<T>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

inline nlohmann::ordered_json counts_to_json(const ClassCounts& counts) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < counts.label_span(); ++i) {
    const auto c = counts.count(static_cast<Label>(i));
    if (c != 0) j[std::to_string(i)] = c;
  }
  return j;
}

inline ClassCounts counts_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("counts must be a JSON object");
  ClassCounts counts;
  for (const auto& [key, value] : j.items()) {
    std::size_t used = 0;
    const long label = std::stol(key, &used);
    if (used != key.size() || label < 0) throw std::invalid_argument("counts key is not a label: " + key);
    counts.add(static_cast<Label>(label), value.get<std::uint64_t>());
  }
  return counts;
}

inline nlohmann::ordered_json schema_header(const char* schema) {
  return nlohmann::ordered_json{{"schema", schema}, {"version", kRecordSchemaVersion}};
}

/// Field order is fixed; unbounded radii are written as the string "inf".
inline nlohmann::ordered_json record_to_json(const CertificationRecord& r) {
  nlohmann::ordered_json j;
  j["example_index"] = r.example_index;
  j["true_label"] = r.true_label;
  j["outcome"] = r.abstained() ? "abstain" : "certified";
  j["predicted_label"] = json_or_null(r.predicted_label);
  if (r.radius) {
    j["radius"] = is_unbounded(*r.radius) ? nlohmann::ordered_json("inf") : nlohmann::ordered_json(*r.radius);
  } else {
    j["radius"] = nullptr;
  }
  j["pa_lower"] = json_or_null(r.pa_lower);
  if (r.counts) j["counts"] = counts_to_json(*r.counts);
  j["sigma"] = r.params.sigma;
  j["n0"] = r.params.n0;
  j["n"] = r.params.n;
  j["alpha"] = r.params.alpha;
  j["seed"] = r.seed;
  j["wall_time_ms"] = r.wall_time_ms;
  return j;
}

inline CertificationRecord record_from_json(const nlohmann::json& j) {
  static const char* required[] = {"example_index", "true_label", "outcome", "predicted_label", "radius",
                                   "pa_lower",      "sigma",      "n0",      "n",               "alpha",
                                   "seed",          "wall_time_ms"};
  for (const char* key : required) {
    if (!j.contains(key)) throw std::invalid_argument(std::string("record is missing field '") + key + "'");
  }
  CertificationRecord r;
  r.example_index = j.at("example_index").get<std::uint64_t>();
  r.true_label = j.at("true_label").get<Label>();
  const auto outcome = j.at("outcome").get<std::string>();
  if (outcome != "certified" && outcome != "abstain") throw std::invalid_argument("unknown outcome: " + outcome);
  if (outcome == "certified") {
    r.predicted_label = j.at("predicted_label").get<Label>();
    const auto& radius = j.at("radius");
    if (radius.is_string()) {
      if (radius.get<std::string>() != "inf") throw std::invalid_argument("radius string must be \"inf\"");
      r.radius = kUnboundedRadius;
    } else {
      r.radius = radius.get<double>();
    }
    r.pa_lower = j.at("pa_lower").get<double>();
    if (*r.radius < 0.0) throw std::invalid_argument("radius must be >= 0");
  }
  if (j.contains("counts")) r.counts = counts_from_json(j.at("counts"));
  r.params.sigma = j.at("sigma").get<double>();
  r.params.n0 = j.at("n0").get<std::uint64_t>();
  r.params.n = j.at("n").get<std::uint64_t>();
  r.params.alpha = j.at("alpha").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.wall_time_ms = j.at("wall_time_ms").get<double>();
  return r;
}

/// Reads a JSONL stream of certification records, skipping the schema header
/// line and blank lines.
inline std::vector<CertificationRecord> read_records(std::istream& in) {
  std::vector<CertificationRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (j.contains("schema")) {
        if (j.at("schema") != kCertifySchema) {
          throw std::invalid_argument("expected schema " + std::string(kCertifySchema));
        }
        if (j.at("version").get<int>() > kRecordSchemaVersion) throw std::invalid_argument("unsupported schema version");
        continue;
      }
      out.push_back(record_from_json(j));
    } catch (const std::exception& e) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

/// Fraction of records certified with the correct label at radius >= r.
inline double certified_accuracy(std::span<const CertificationRecord> records, double r) {
  if (records.empty()) throw std::domain_error("certified_accuracy: no records");
  std::size_t hits = 0;
  for (const auto& rec : records) {
    if (rec.correct() && rec.radius && *rec.radius >= r) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

/// High-probability lower bound on the true certified accuracy given that Y of
/// m certificates (each wrong with probability at most alpha) were reported
/// correct. Holds with probability >= 1 - rho; clamped at 0.
inline double bernstein_lower_bound(std::uint64_t y, std::uint64_t m, double alpha, double rho) {
  if (m < 1 || y > m) throw std::invalid_argument("bernstein_lower_bound: need 0 <= Y <= m, m >= 1");
  if (!(alpha > 0.0 && alpha < 0.5)) throw std::invalid_argument("bernstein_lower_bound: alpha must lie in (0, 1/2)");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("bernstein_lower_bound: rho must lie in (0, 1)");
  const double md = static_cast<double>(m);
  const double log_inv_rho = -std::log(rho);
  const double value = (static_cast<double>(y) / md - alpha - std::sqrt(2.0 * alpha * (1.0 - alpha) * log_inv_rho / md) -
                        log_inv_rho / (3.0 * md)) /
                       (1.0 - alpha);
  return std::max(0.0, value);
}

struct CurveRow {
  double radius = 0.0;
  double approx_accuracy = 0.0;
  double bernstein_lower = 0.0;
};

/// Approximate certified accuracy and its Bernstein lower bound at each
/// radius. The alpha used for the bound is the largest alpha among the
/// records.
inline std::vector<CurveRow> accuracy_curve(std::span<const CertificationRecord> records,
                                            std::span<const double> radii, double rho = 0.001) {
  if (records.empty()) throw std::domain_error("accuracy_curve: no records");
  if (!std::is_sorted(radii.begin(), radii.end())) throw std::invalid_argument("accuracy_curve: radii must be ascending");
  double alpha = 0.0;
  for (const auto& r : records) alpha = std::max(alpha, r.params.alpha);

  std::vector<CurveRow> rows;
  rows.reserve(radii.size());
  for (double r : radii) {
    std::uint64_t hits = 0;
    for (const auto& rec : records) {
      if (rec.correct() && rec.radius && *rec.radius >= r) ++hits;
    }
    CurveRow row;
    row.radius = r;
    row.approx_accuracy = static_cast<double>(hits) / static_cast<double>(records.size());
    row.bernstein_lower = bernstein_lower_bound(hits, records.size(), alpha, rho);
    rows.push_back(row);
  }
  return rows;
}

/// Re-derives one record as if certify() had drawn n_new estimation samples
/// with the same class proportions.
///
/// Abstained records do not carry the selected label. The top label of the
/// counts stands in for it, unless that label would already have certified
/// at the original n; then selection must have picked some other label and
/// the record stays abstained at every n_new.
inline CertificationRecord project_record(const CertificationRecord& rec, std::uint64_t n_new) {
  if (!rec.counts) {
    throw std::invalid_argument("record " + std::to_string(rec.example_index) +
                                " has no 'counts' field; rerun certify with --store-counts");
  }
  const ClassCounts& counts = *rec.counts;
  CertificationRecord out = rec;
  out.params.n = n_new;
  out.counts = project_counts(counts, n_new);
  out.predicted_label.reset();
  out.radius.reset();
  out.pa_lower.reset();

  Label candidate = 0;
  if (rec.predicted_label) {
    candidate = *rec.predicted_label;
  } else {
    candidate = counts.top();
    if (certificate_from_counts(candidate, counts, rec.params.alpha, rec.params.sigma)) return out;
  }
  if (const auto cert = certificate_from_counts(candidate, *out.counts, rec.params.alpha, rec.params.sigma)) {
    out.predicted_label = cert->label;
    out.radius = cert->radius;
    out.pa_lower = cert->pa_lower;
  }
  return out;
}

inline std::vector<CurveRow> projected_curve(std::span<const CertificationRecord> records, std::uint64_t n_new,
                                             std::span<const double> radii, double rho = 0.001) {
  std::vector<CertificationRecord> projected;
  projected.reserve(records.size());
  for (const auto& rec : records) projected.push_back(project_record(rec, n_new));
  return accuracy_curve(projected, radii, rho);
}

/// Pointwise maximum over several curves evaluated on the same radii, e.g.
/// the best noise level per radius.
inline std::vector<CurveRow> max_over_runs(std::span<const std::vector<CurveRow>> curves) {
  if (curves.empty()) return {};
  std::vector<CurveRow> best = curves.front();
  for (const auto& curve : curves.subspan(1)) {
    if (curve.size() != best.size()) throw std::invalid_argument("max_over_runs: curves differ in length");
    for (std::size_t i = 0; i < best.size(); ++i) {
      if (curve[i].radius != best[i].radius) throw std::invalid_argument("max_over_runs: radii differ");
      best[i].approx_accuracy = std::max(best[i].approx_accuracy, curve[i].approx_accuracy);
      best[i].bernstein_lower = std::max(best[i].bernstein_lower, curve[i].bernstein_lower);
    }
  }
  return best;
}

inline void write_curve_tsv(std::ostream& out, std::span<const CurveRow> rows) {
  out << "radius\tapprox_accuracy\tbernstein_lower\n";
  for (const auto& row : rows) {
    out << row.radius << '\t' << row.approx_accuracy << '\t' << row.bernstein_lower << '\n';
  }
}

inline nlohmann::ordered_json curve_to_json(std::span<const CurveRow> rows) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    j.push_back({{"radius", row.radius},
                 {"approx_accuracy", row.approx_accuracy},
                 {"bernstein_lower", row.bernstein_lower}});
  }
  return j;
}

}  // namespace rsmooth
