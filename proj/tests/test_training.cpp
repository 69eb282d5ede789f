#include <cmath>
#include <cstring>
#include <map>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "rsmooth/io.hpp"
#include "rsmooth/models.hpp"
#include "rsmooth/training.hpp"

using namespace rsmooth;

namespace {

std::vector<LabeledExample> separable_data(std::uint64_t seed = 1) { return make_two_gaussians(500, 2.0, 0.5, seed); }

std::vector<double> params_of(const BaseClassifier& m) {
  if (const auto* l = dynamic_cast<const LogisticModel*>(&m)) return {l->params().begin(), l->params().end()};
  if (const auto* p = dynamic_cast<const MlpModel*>(&m)) return {p->params().begin(), p->params().end()};
  return {};
}

TrainConfig config(ModelFamily family, double sigma, std::uint64_t seed = 0) {
  TrainConfig c;
  c.family = family;
  c.sigma_train = sigma;
  c.seed = seed;
  c.epochs = 30;
  return c;
}

}  // namespace

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.epochs = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.sigma_train = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(ValidateDataset, RejectsBadData) {
  EXPECT_THROW(validate_dataset({}), std::invalid_argument);
  const std::vector<LabeledExample> gap{{{1.0}, 0}, {{2.0}, 2}};
  EXPECT_THROW(validate_dataset(gap), std::invalid_argument);
  const std::vector<LabeledExample> ragged{{{1.0}, 0}, {{2.0, 3.0}, 1}};
  EXPECT_THROW(validate_dataset(ragged), std::invalid_argument);
  const std::vector<LabeledExample> nan{{{std::nan("")}, 0}, {{2.0}, 1}};
  EXPECT_THROW(validate_dataset(nan), std::invalid_argument);
  const std::vector<LabeledExample> single{{{1.0}, 0}};
  EXPECT_EQ(validate_dataset(single), 2u);
  const std::vector<LabeledExample> three{{{1.0}, 0}, {{2.0}, 2}, {{0.0}, 1}};
  EXPECT_EQ(validate_dataset(three), 3u);
}

TEST(TrainWithNoise, SeparableBaseline) {
  const auto data = separable_data();
  for (auto family : {ModelFamily::Logistic, ModelFamily::Mlp}) {
    const auto r = train_with_noise(data, config(family, 0.0));
    EXPECT_GE(clean_accuracy(*r.model, data), 0.99);
    EXPECT_GE(clean_accuracy(*r.model, separable_data(2)), 0.99);
  }
}

TEST(TrainWithNoise, MatchedNoiseStillLearns) {
  const auto data = separable_data();
  for (auto family : {ModelFamily::Logistic, ModelFamily::Mlp}) {
    const auto r = train_with_noise(data, config(family, 0.5));
    EXPECT_GE(clean_accuracy(*r.model, data), 0.99);
  }
}

// A single run at sigma_train = 1000 lands on an essentially random
// hyperplane, so its accuracy is anywhere in [0, 1]. The signal loss shows in
// the average over seeds, which sits at chance.
TEST(TrainWithNoise, OverwhelmingNoiseDestroysSignal) {
  const auto data = separable_data();
  for (auto family : {ModelFamily::Logistic, ModelFamily::Mlp}) {
    double total = 0.0;
    const int seeds = 20;
    for (int s = 0; s < seeds; ++s) {
      total += clean_accuracy(*train_with_noise(data, config(family, 1000.0, s)).model, data);
    }
    EXPECT_LE(total / seeds, 0.7);
  }
}

TEST(TrainWithNoise, LossDecreases) {
  const auto data = separable_data();
  for (auto family : {ModelFamily::Logistic, ModelFamily::Mlp}) {
    for (double sigma : {0.0, 0.5}) {
      const auto r = train_with_noise(data, config(family, sigma));
      ASSERT_EQ(r.epoch_loss.size(), 30u);
      EXPECT_LE(r.epoch_loss.back(), r.epoch_loss.front());
    }
  }
}

TEST(TrainWithNoise, Deterministic) {
  const auto data = make_xor_grid(400, 0.3, 4);
  for (auto family : {ModelFamily::Logistic, ModelFamily::Mlp}) {
    const auto a = train_with_noise(data, config(family, 0.25, 9));
    const auto b = train_with_noise(data, config(family, 0.25, 9));
    const auto pa = params_of(*a.model);
    const auto pb = params_of(*b.model);
    ASSERT_EQ(pa.size(), pb.size());
    EXPECT_EQ(std::memcmp(pa.data(), pb.data(), pa.size() * sizeof(double)), 0);
    EXPECT_EQ(a.epoch_loss, b.epoch_loss);
    const auto c = train_with_noise(data, config(family, 0.25, 10));
    EXPECT_NE(params_of(*c.model), pa);
  }
}

TEST(TrainWithNoise, FreshNoiseEveryEpoch) {
  const auto data = make_two_gaussians(20, 1.0, 0.5, 3);
  std::map<std::size_t, std::vector<std::vector<double>>> seen;
  std::size_t calls = 0;
  auto cfg = config(ModelFamily::Logistic, 0.3);
  cfg.epochs = 4;
  train_with_noise(data, cfg, [&](std::size_t, std::size_t example, std::span<const double> noisy) {
    ++calls;
    seen[example].emplace_back(noisy.begin(), noisy.end());
  });
  EXPECT_EQ(calls, 4 * data.size());
  for (const auto& [example, inputs] : seen) {
    ASSERT_EQ(inputs.size(), 4u);
    std::set<std::vector<double>> distinct(inputs.begin(), inputs.end());
    EXPECT_EQ(distinct.size(), 4u) << example;
  }
}

TEST(TrainWithNoise, ZeroSigmaSeesCleanInputs) {
  const auto data = make_two_gaussians(5, 1.0, 0.5, 3);
  auto cfg = config(ModelFamily::Logistic, 0.0);
  cfg.epochs = 2;
  train_with_noise(data, cfg, [&](std::size_t, std::size_t example, std::span<const double> noisy) {
    EXPECT_EQ(std::vector<double>(noisy.begin(), noisy.end()), data[example].features);
  });
}

TEST(TrainWithNoise, MultiClassMlp) {
  // Three blobs on a line: not separable by the two-label default.
  std::vector<LabeledExample> data;
  const auto base = make_two_gaussians(150, 0.0, 0.3, 8);
  for (std::size_t i = 0; i < base.size(); ++i) {
    LabeledExample ex = base[i];
    ex.label = static_cast<Label>(i % 3);
    ex.features[0] += 3.0 * (ex.label - 1);
    data.push_back(ex);
  }
  auto cfg = config(ModelFamily::Mlp, 0.1);
  cfg.epochs = 60;
  const auto r = train_with_noise(data, cfg);
  EXPECT_EQ(r.model->num_labels(), 3u);
  EXPECT_GE(clean_accuracy(*r.model, data), 0.95);
}

TEST(TrainWithNoise, DivergenceIsReported) {
  auto cfg = config(ModelFamily::Logistic, 0.0);
  cfg.learning_rate = 1e308;
  try {
    train_with_noise(make_two_gaussians(50, 2.0, 0.5, 1), cfg);
    FAIL() << "expected divergence";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("non-finite loss"), std::string::npos);
  }
}

TEST(GradientCheck, Examples) {
  const LinearModel lin({0.3, -2.0, 5.0}, 0.7);
  for (Label y : {0, 1}) EXPECT_LE(model_gradient_check(lin, std::vector<double>{0.1, 0.2, -0.3}, y), 1e-7);

  const auto mlp_result = train_with_noise(make_xor_grid(8, 0.3, 1), [] {
    auto c = config(ModelFamily::Mlp, 0.0);
    c.epochs = 1;
    c.hidden_width = 12;
    return c;
  }());
  const NoiseStream noise(31);
  for (int t = 0; t < 50; ++t) {
    const std::vector<double> x{noise.deviate(0, t, 0), noise.deviate(0, t, 1)};
    for (Label y : {0, 1}) EXPECT_LE(model_gradient_check(*mlp_result.model, x, y), 1e-4) << t;
  }
  const double at_zero = model_gradient_check(*mlp_result.model, std::vector<double>{0.0, 0.0}, 1);
  EXPECT_TRUE(std::isfinite(at_zero));
  EXPECT_LE(at_zero, 1e-4);

  const LogisticModel logistic(3, 4, std::vector<double>{1, 2, 3, -1, 0.5, 0, 0, 0, 1, 2, 2, 2, 0.1, 0.2, 0.3, 0.4});
  for (Label y = 0; y < 4; ++y) EXPECT_LE(model_gradient_check(logistic, std::vector<double>{0.0, 0.0, 0.0}, y), 1e-7);
  EXPECT_THROW(model_gradient_check(ConstantClassifier(0, 2), std::vector<double>{0.0}, 0), std::invalid_argument);
}

TEST(ObjectiveGap, JensenOrdering) {
  const auto data = separable_data();
  const auto r = train_with_noise(data, config(ModelFamily::Mlp, 0.5));
  const std::span<const LabeledExample> batch(data.data(), 64);
  for (double sigma : {0.1, 0.5, 2.0}) {
    const auto gap = smoothed_objective_gap(*r.model, batch, sigma, 200, NoiseStream(4));
    EXPECT_LE(gap.soft, gap.cross_entropy + 1e-12) << sigma;
    EXPECT_GE(gap.soft, 0.0);
  }
}
