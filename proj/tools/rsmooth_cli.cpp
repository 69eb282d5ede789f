// rsmooth: command-line front end for randomized-smoothing certification.
//
// Exit status: 0 success, 1 runtime failure, 2 usage or input error.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rsmooth/rsmooth.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Output goes to a file when a path is given, otherwise to stdout.
class OutputSink {
 public:
  explicit OutputSink(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path);
      if (!file_) throw rsmooth::InputError("cannot open output file " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

struct SmoothingFlags {
  rsmooth::RunConfig run;
  bool no_wall_time = false;
};

void add_smoothing_flags(CLI::App* cmd, SmoothingFlags& f, bool with_n0) {
  cmd->add_option("--model", f.run.model_path, "Model file")->required();
  cmd->add_option("--data", f.run.dataset_path, "CSV dataset with a 'label' column")->required();
  cmd->add_option("--out", f.run.output_path, "JSONL output path (default: stdout)");
  cmd->add_option("--sigma", f.run.params.sigma, "Noise standard deviation")->capture_default_str();
  if (with_n0) cmd->add_option("--n0", f.run.params.n0, "Selection samples")->capture_default_str();
  cmd->add_option("--n", f.run.params.n, "Estimation samples")->capture_default_str();
  cmd->add_option("--alpha", f.run.params.alpha, "Failure probability")->capture_default_str();
  cmd->add_option("--seed", f.run.seed, "Noise seed")->capture_default_str();
  cmd->add_option("--jobs", f.run.parallelism, "Sampling threads")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--batch", f.run.batch_size, "Samples per batch")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_flag("--store-counts", f.run.store_counts, "Store raw class counts in every record");
  cmd->add_flag("--no-wall-time", f.no_wall_time, "Write wall_time_ms as 0 for byte-identical reruns");
}

int run_smoothing(const SmoothingFlags& flags, bool certify_mode) {
  rsmooth::RunConfig cfg = flags.run;
  cfg.record_wall_time = !flags.no_wall_time;
  const auto model = rsmooth::load_model_file(cfg.model_path);
  const auto data = rsmooth::read_dataset_file(cfg.dataset_path);
  OutputSink sink(cfg.output_path);
  const rsmooth::RunSummary summary = certify_mode ? rsmooth::certify_dataset(*model, data, cfg, sink.stream())
                                                   : rsmooth::predict_dataset(*model, data, cfg, sink.stream());
  std::cerr << (certify_mode ? "certify: " : "predict: ") << summary << '\n';
  return 0;
}

std::vector<double> default_radii(double max_radius, double step) {
  std::vector<double> radii;
  for (int i = 0; i * step <= max_radius + 1e-12; ++i) radii.push_back(i * step);
  return radii;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomized smoothing: certified l2 robustness for arbitrary classifiers"};
  app.set_config("--config", "", "Read options from an INI/TOML file; command-line flags take precedence");
  app.require_subcommand(1);

  // generate
  std::string gen_kind = "two-gaussians";
  std::size_t gen_count = 500;
  double gen_separation = 2.0;
  double gen_spread = 0.5;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  auto* generate = app.add_subcommand("generate", "Write a synthetic CSV dataset");
  generate->add_option("--kind", gen_kind, "two-gaussians | xor-grid")
      ->check(CLI::IsMember({"two-gaussians", "xor-grid"}))
      ->capture_default_str();
  generate->add_option("--count", gen_count, "Points per class (two-gaussians) or in total (xor-grid)")
      ->capture_default_str();
  generate->add_option("--separation", gen_separation, "Distance of each class centre from the origin")
      ->capture_default_str();
  generate->add_option("--spread", gen_spread, "Per-coordinate standard deviation")->capture_default_str();
  generate->add_option("--seed", gen_seed)->capture_default_str();
  generate->add_option("--out", gen_out, "Output CSV (default: stdout)");

  // train
  std::string train_data, train_out, train_family = "logistic";
  rsmooth::TrainConfig train_cfg;
  auto* train = app.add_subcommand("train", "Train a base classifier with Gaussian data augmentation");
  train->add_option("--data", train_data, "Training CSV")->required();
  train->add_option("--out", train_out, "Model file to write")->required();
  train->add_option("--model", train_family, "logistic | mlp")
      ->check(CLI::IsMember({"logistic", "mlp"}))
      ->capture_default_str();
  train->add_option("--width", train_cfg.hidden_width, "MLP hidden width")->capture_default_str();
  train->add_option("--sigma-train", train_cfg.sigma_train, "Augmentation noise level")->capture_default_str();
  train->add_option("--epochs", train_cfg.epochs)->capture_default_str();
  train->add_option("--lr", train_cfg.learning_rate)->capture_default_str();
  train->add_option("--batch-size", train_cfg.batch_size)->capture_default_str();
  train->add_option("--seed", train_cfg.seed)->capture_default_str();

  // certify / predict
  SmoothingFlags certify_flags;
  auto* certify_cmd = app.add_subcommand("certify", "Certify every example of a dataset");
  add_smoothing_flags(certify_cmd, certify_flags, true);

  SmoothingFlags predict_flags;
  auto* predict_cmd = app.add_subcommand("predict", "Predict with abstention for every example of a dataset");
  add_smoothing_flags(predict_cmd, predict_flags, false);

  // bounds
  double b_pa = 0.8, b_pb = 0.2, b_sigma = 1.0;
  std::string b_kind = "all";
  std::optional<std::uint64_t> b_samples;
  double b_alpha = 0.001;
  auto* bounds = app.add_subcommand("bounds", "Evaluate certified radius formulas");
  bounds->add_option("--pa", b_pa, "Lower bound on the top-class probability")->capture_default_str();
  bounds->add_option("--pb", b_pb, "Upper bound on the runner-up probability")->capture_default_str();
  bounds->add_option("--sigma", b_sigma)->capture_default_str();
  bounds->add_option("--kind", b_kind, "all | cohen | lecuyer | li")
      ->check(CLI::IsMember({"all", "cohen", "lecuyer", "li"}))
      ->capture_default_str();
  bounds->add_option("--max-radius-n", b_samples, "Instead print the largest radius certifiable with this many samples");
  bounds->add_option("--alpha", b_alpha, "Failure probability for --max-radius-n")->capture_default_str();

  // attack
  std::string a_model, a_data, a_out;
  rsmooth::AttackParams a_params;
  auto* attack = app.add_subcommand("attack", "PGD attack on the smoothed classifier");
  attack->add_option("--model", a_model)->required();
  attack->add_option("--data", a_data)->required();
  attack->add_option("--out", a_out, "JSONL output (default: stdout)");
  attack->add_option("--radius", a_params.radius)->capture_default_str();
  attack->add_option("--sigma", a_params.sigma)->capture_default_str();
  attack->add_option("--k", a_params.k, "Noise samples per gradient step")->capture_default_str();
  attack->add_option("--steps", a_params.steps)->capture_default_str();
  attack->add_option("--step-size", a_params.step_size)->capture_default_str();
  attack->add_option("--seed", a_params.seed)->capture_default_str();
  attack->add_option("--check-n", a_params.check_n, "Samples for the success check")->capture_default_str();
  attack->add_option("--check-alpha", a_params.check_alpha)->capture_default_str();

  // report
  std::string r_records, r_format = "tsv";
  std::vector<double> r_radii;
  double r_max = 2.0, r_step = 0.25, r_rho = 0.001;
  std::optional<std::uint64_t> r_project;
  auto* report = app.add_subcommand("report", "Certified accuracy table from certify records");
  report->add_option("--records", r_records, "JSONL written by certify")->required();
  report->add_option("--radii", r_radii, "Explicit ascending radii");
  report->add_option("--max-radius", r_max, "Largest radius of the default grid")->capture_default_str();
  report->add_option("--step", r_step, "Spacing of the default grid")->capture_default_str()->check(CLI::PositiveNumber);
  report->add_option("--rho", r_rho, "Failure probability of the Bernstein bound")->capture_default_str();
  report->add_option("--project-n", r_project, "Project to this many samples (needs stored counts)");
  report->add_option("--format", r_format, "tsv | json")->check(CLI::IsMember({"tsv", "json"}))->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*generate) {
      const auto data = gen_kind == "two-gaussians"
                            ? rsmooth::make_two_gaussians(gen_count, gen_separation, gen_spread, gen_seed)
                            : rsmooth::make_xor_grid(gen_count, gen_spread, gen_seed);
      OutputSink sink(gen_out);
      rsmooth::write_dataset_csv(sink.stream(), data);
    } else if (*train) {
      train_cfg.family = train_family == "mlp" ? rsmooth::ModelFamily::Mlp : rsmooth::ModelFamily::Logistic;
      const auto data = rsmooth::read_dataset_file(train_data);
      const auto result = rsmooth::train_with_noise(data, train_cfg);
      rsmooth::save_model_file(*result.model, train_out);
      std::cerr << "train: final_loss=" << result.epoch_loss.back()
                << " clean_accuracy=" << rsmooth::clean_accuracy(*result.model, data) << '\n';
    } else if (*certify_cmd) {
      return run_smoothing(certify_flags, true);
    } else if (*predict_cmd) {
      return run_smoothing(predict_flags, false);
    } else if (*bounds) {
      std::cout << std::setprecision(10);
      if (b_samples) {
        std::cout << "n\talpha\tsigma\tmax_radius\n"
                  << *b_samples << '\t' << b_alpha << '\t' << b_sigma << '\t'
                  << rsmooth::max_certifiable_radius(*b_samples, b_alpha, b_sigma) << '\n';
      } else {
        const rsmooth::BoundInputs in{b_pa, b_pb, b_sigma};
        std::cout << "bound\tpa_lower\tpb_upper\tsigma\tradius\n";
        for (auto kind : {rsmooth::BoundKind::Cohen, rsmooth::BoundKind::Lecuyer, rsmooth::BoundKind::Li}) {
          if (b_kind != "all" && b_kind != rsmooth::to_string(kind)) continue;
          const double r = rsmooth::radius(kind, in);
          std::cout << rsmooth::to_string(kind) << '\t' << b_pa << '\t' << b_pb << '\t' << b_sigma << '\t';
          if (rsmooth::is_unbounded(r)) {
            std::cout << "inf\n";
          } else {
            std::cout << r << '\n';
          }
        }
      }
    } else if (*attack) {
      const auto model = rsmooth::load_model_file(a_model);
      const auto data = rsmooth::read_dataset_file(a_data);
      OutputSink sink(a_out);
      std::size_t successes = 0;
      for (std::size_t i = 0; i < data.size(); ++i) {
        rsmooth::AttackParams p = a_params;
        p.seed = rsmooth::detail::hash_tuple(a_params.seed, i, 0, 0);
        const auto result = rsmooth::pgd_attack(*model, data[i].features, data[i].label, p);
        successes += result.success ? 1 : 0;
        nlohmann::ordered_json j;
        j["example_index"] = i;
        j["true_label"] = data[i].label;
        j["success"] = result.success;
        j["predicted_label"] = rsmooth::json_or_null(result.predicted);
        j["delta_norm"] = rsmooth::l2_norm(result.delta);
        j["delta"] = result.delta;
        j["zero_gradient_steps"] = result.zero_gradient_steps;
        j["radius"] = p.radius;
        j["sigma"] = p.sigma;
        sink.stream() << j.dump() << '\n' << std::flush;
      }
      std::cerr << "attack: examples=" << data.size() << " successes=" << successes << '\n';
    } else if (*report) {
      std::ifstream in(r_records);
      if (!in) throw rsmooth::InputError("cannot read records file " + r_records);
      std::vector<rsmooth::CertificationRecord> records;
      try {
        records = rsmooth::read_records(in);
      } catch (const std::invalid_argument& e) {
        throw rsmooth::InputError(r_records + ": " + e.what());
      }
      if (records.empty()) throw rsmooth::InputError(r_records + ": no records");
      const std::vector<double> radii = r_radii.empty() ? default_radii(r_max, r_step) : r_radii;
      const auto rows = r_project ? rsmooth::projected_curve(records, *r_project, radii, r_rho)
                                  : rsmooth::accuracy_curve(records, radii, r_rho);
      if (r_format == "json") {
        std::cout << rsmooth::curve_to_json(rows).dump(2) << '\n';
      } else {
        std::cout << std::setprecision(10);
        rsmooth::write_curve_tsv(std::cout, rows);
      }
    }
  } catch (const rsmooth::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
