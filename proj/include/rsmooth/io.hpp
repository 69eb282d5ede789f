#pragma once

// Plain-text model files, CSV datasets and the built-in synthetic dataset
// generators.
//
// Model file: one header line
//   rsmooth-model <version> <kind> <dim> <labels> [<hidden>]
// followed by whitespace-separated parameters in row-major order, written
// with 17 significant digits. Kinds and their parameters:
//   constant   label
//   halfspace  w[dim] b
//   interval   t outer inner            (dim = 1)
//   logistic   W[labels x dim] b[labels]
//   mlp        W1[hidden x dim] b1[hidden] W2[labels x hidden] b2[labels]

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rsmooth/classifier.hpp"
#include "rsmooth/models.hpp"
#include "rsmooth/noise.hpp"
#include "rsmooth/oracles.hpp"
#include "rsmooth/training.hpp"

namespace rsmooth {

inline constexpr const char* kModelMagic = "rsmooth-model";
inline constexpr int kModelFormatVersion = 1;

/// Raised for unreadable or malformed input files (CLI exit status 2).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void write_values(std::ostream& out, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    out << (i == 0 ? "" : " ") << values[i];
  }
  out << '\n';
}

inline std::vector<double> read_values(std::istream& in, std::size_t count, const std::string& what) {
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (!(in >> values[i])) {
      throw InputError(what + ": expected " + std::to_string(count) + " parameters, got " + std::to_string(i));
    }
    if (!std::isfinite(values[i])) throw InputError(what + ": non-finite parameter");
  }
  std::string extra;
  if (in >> extra) throw InputError(what + ": trailing data after parameters");
  return values;
}

}  // namespace detail

inline void save_model(const BaseClassifier& model, std::ostream& out) {
  out << std::setprecision(17);
  const std::size_t dim = model.input_dim();
  const std::size_t labels = model.num_labels();
  const std::string head = std::string(kModelMagic) + " " + std::to_string(kModelFormatVersion) + " ";

  if (const auto* m = dynamic_cast<const ConstantClassifier*>(&model)) {
    out << head << "constant " << dim << ' ' << labels << '\n' << m->label() << '\n';
  } else if (const auto* m = dynamic_cast<const LinearModel*>(&model)) {
    out << head << "halfspace " << dim << ' ' << labels << '\n';
    std::vector<double> p = m->weights();
    p.push_back(m->bias());
    detail::write_values(out, p);
  } else if (const auto* m = dynamic_cast<const IntervalClassifier*>(&model)) {
    out << head << "interval 1 " << labels << '\n'
        << m->half_width() << ' ' << m->outer_label() << ' ' << m->inner_label() << '\n';
  } else if (const auto* m = dynamic_cast<const LogisticModel*>(&model)) {
    out << head << "logistic " << dim << ' ' << labels << '\n';
    detail::write_values(out, m->params());
  } else if (const auto* m = dynamic_cast<const MlpModel*>(&model)) {
    out << head << "mlp " << dim << ' ' << labels << ' ' << m->hidden_width() << '\n';
    detail::write_values(out, m->params());
  } else {
    throw std::invalid_argument("save_model: model kind has no file representation");
  }
  if (!out) throw std::runtime_error("save_model: write failed");
}

inline std::unique_ptr<BaseClassifier> load_model(std::istream& in, const std::string& source = "model") {
  std::string header;
  if (!std::getline(in, header)) throw InputError(source + ": empty model file");
  std::istringstream hs(header);
  std::string magic, kind;
  int version = 0;
  std::size_t dim = 0, labels = 0;
  if (!(hs >> magic >> version >> kind >> dim >> labels) || magic != kModelMagic) {
    throw InputError(source + ": not an rsmooth model file");
  }
  if (version != kModelFormatVersion) throw InputError(source + ": unsupported model format version");

  try {
    if (kind == "constant") {
      const auto p = detail::read_values(in, 1, source);
      return std::make_unique<ConstantClassifier>(static_cast<Label>(p[0]), labels, dim);
    }
    if (kind == "halfspace") {
      auto p = detail::read_values(in, dim + 1, source);
      const double b = p.back();
      p.pop_back();
      return std::make_unique<LinearModel>(std::move(p), b);
    }
    if (kind == "interval") {
      const auto p = detail::read_values(in, 3, source);
      return std::make_unique<IntervalClassifier>(p[0], static_cast<Label>(p[1]), static_cast<Label>(p[2]));
    }
    if (kind == "logistic") {
      auto p = detail::read_values(in, LogisticModel::parameter_count(dim, labels), source);
      return std::make_unique<LogisticModel>(dim, labels, std::move(p));
    }
    if (kind == "mlp") {
      std::size_t hidden = 0;
      if (!(hs >> hidden)) throw InputError(source + ": mlp header lacks hidden width");
      auto p = detail::read_values(in, MlpModel::parameter_count(dim, hidden, labels), source);
      return std::make_unique<MlpModel>(dim, hidden, labels, std::move(p));
    }
  } catch (const std::invalid_argument& e) {
    throw InputError(source + ": " + e.what());
  }
  throw InputError(source + ": unknown model kind '" + kind + "'");
}

inline void save_model_file(const BaseClassifier& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  save_model(model, out);
}

inline std::unique_ptr<BaseClassifier> load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read model file " + path);
  return load_model(in, path);
}

/// CSV with a header row. The `label` column holds nonnegative integer labels
/// and every other column is a real-valued feature.
inline std::vector<LabeledExample> read_dataset_csv(std::istream& in, const std::string& source = "dataset") {
  std::string line;
  if (!std::getline(in, line)) throw InputError(source + ": empty dataset");
  std::vector<std::string> columns;
  {
    std::istringstream hs(line);
    std::string col;
    while (std::getline(hs, col, ',')) {
      while (!col.empty() && (col.back() == '\r' || col.back() == ' ')) col.pop_back();
      while (!col.empty() && col.front() == ' ') col.erase(col.begin());
      columns.push_back(col);
    }
  }
  std::size_t label_col = columns.size();
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == "label") label_col = i;
  }
  if (label_col == columns.size()) throw InputError(source + ": header has no 'label' column");
  if (columns.size() < 2) throw InputError(source + ": need at least one feature column");

  std::vector<LabeledExample> data;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string cell;
    LabeledExample ex;
    std::size_t col = 0;
    while (std::getline(ls, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw InputError(source + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
      if (!std::isfinite(v)) throw InputError(source + ":" + std::to_string(line_no) + ": non-finite value");
      if (col == label_col) {
        if (v < 0.0 || v != std::floor(v)) {
          throw InputError(source + ":" + std::to_string(line_no) + ": label must be a nonnegative integer");
        }
        ex.label = static_cast<Label>(v);
      } else {
        ex.features.push_back(v);
      }
      ++col;
    }
    if (col != columns.size()) {
      throw InputError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(columns.size()) +
                       " columns, got " + std::to_string(col));
    }
    data.push_back(std::move(ex));
  }
  if (data.empty()) throw InputError(source + ": no data rows");
  return data;
}

inline std::vector<LabeledExample> read_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read dataset file " + path);
  return read_dataset_csv(in, path);
}

inline void write_dataset_csv(std::ostream& out, std::span<const LabeledExample> data) {
  if (data.empty()) throw std::invalid_argument("write_dataset_csv: empty dataset");
  out << std::setprecision(17);
  for (std::size_t j = 0; j < data.front().features.size(); ++j) out << 'x' << j << ',';
  out << "label\n";
  for (const auto& ex : data) {
    for (double v : ex.features) out << v << ',';
    out << ex.label << '\n';
  }
}

/// Two isotropic Gaussian classes centred at -(separation, 0, ...) (label 0)
/// and +(separation, 0, ...) (label 1), alternating labels.
inline std::vector<LabeledExample> make_two_gaussians(std::size_t per_class, double separation, double spread,
                                                      std::uint64_t seed, std::size_t dim = 2) {
  if (dim == 0 || !(spread >= 0.0)) throw std::invalid_argument("make_two_gaussians: bad arguments");
  const NoiseStream noise = NoiseStream(seed).derive(0x32676175);
  std::vector<LabeledExample> data;
  data.reserve(2 * per_class);
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    LabeledExample ex;
    ex.label = static_cast<Label>(i % 2);
    ex.features.resize(dim);
    for (std::size_t j = 0; j < dim; ++j) ex.features[j] = spread * noise.deviate(0, i, j);
    ex.features[0] += ex.label == 1 ? separation : -separation;
    data.push_back(std::move(ex));
  }
  return data;
}

/// Four Gaussian blobs at (+-1, +-1); the label is 1 when the signs of the two
/// coordinates of the centre differ.
inline std::vector<LabeledExample> make_xor_grid(std::size_t count, double spread, std::uint64_t seed) {
  if (!(spread >= 0.0)) throw std::invalid_argument("make_xor_grid: spread must be >= 0");
  const NoiseStream noise = NoiseStream(seed).derive(0x786f72);
  std::vector<LabeledExample> data;
  data.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double cx = (i % 2 == 0) ? 1.0 : -1.0;
    const double cy = ((i / 2) % 2 == 0) ? 1.0 : -1.0;
    LabeledExample ex;
    ex.features = {cx + spread * noise.deviate(0, i, 0), cy + spread * noise.deviate(0, i, 1)};
    ex.label = (cx > 0) != (cy > 0) ? 1 : 0;
    data.push_back(std::move(ex));
  }
  return data;
}

}  // namespace rsmooth
