#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "dpaf/objective/losses.hpp"
#include "dpaf/train/evaluate.hpp"
#include "dpaf/train/trainer.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace dpaf;
using namespace dpaf::train;
using dpaf::oracle::random_tensor;

namespace {

net::ModelConfig micro_config() {
  net::ModelConfig c;
  c.base_channels = 4;
  c.stages = 1;
  c.patch = 2;
  c.vit_depth = 1;
  c.vit_heads = 2;
  c.vit_dim = 8;
  c.pos_grid = 4;
  c.fusion_reduction = 2;
  return c;
}

std::vector<rain::Sample> toy_samples(std::size_t n, std::size_t size = 16) {
  std::vector<rain::Sample> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto clean = random_tensor<float>({3, size, size}, 100 + i, 0.1, 0.7);
    auto rainy = clean;
    for (std::size_t p = 0; p < rainy.size(); p += 7) rainy[p] = std::min(1.0f, rainy[p] + 0.3f);
    out.push_back({"pair" + std::to_string(i), rainy, clean});
  }
  return out;
}

TrainConfig toy_train_config() {
  TrainConfig c;
  c.batch = 2;
  c.patch = 8;
  c.seed = 3;
  c.schedule.total_epochs = 4;
  c.schedule.warmup_steps = 2;
  c.weights = {1.0, 0.2, 0.04};
  c.perceptual.widths = {4, 4, 4};
  c.ssim.window = 7;
  return c;
}

std::vector<double> totals(const std::vector<StepRecord>& rs) {
  std::vector<double> t;
  for (const auto& r : rs) t.push_back(r.loss.total);
  return t;
}

}  // namespace

TEST(Adam, ZeroGradientLeavesParametersAlone) {
  nn::ParamStore<float> store;
  auto& p = store.add("p", {3});
  p.value = Tensor<float>({3}, std::vector<float>{1, -2, 3});
  Adam<float> adam(store);
  adam.step(store, 1e-3);
  EXPECT_EQ(p.value, (Tensor<float>({3}, std::vector<float>{1, -2, 3})));
  EXPECT_EQ(adam.steps(), 1u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  nn::ParamStore<double> store;
  auto& p = store.add("p", {1});
  p.value[0] = 0.5;
  p.grad[0] = 1.0;
  Adam<double> adam(store);
  adam.step(store, 2e-4);
  // m_hat = 1, v_hat = 1: the update is lr / (1 + eps).
  EXPECT_NEAR(p.value[0], 0.5 - 2e-4 / (1.0 + 1e-8), 1e-15);
}

TEST(Adam, DeterministicAndResumable) {
  auto run = [](std::size_t steps, nn::Container* snapshot, const nn::Container* resume) {
    nn::ParamStore<float> store;
    auto& p = store.add("w", {4});
    p.value = random_tensor<float>({4}, 1);
    Adam<float> adam(store);
    if (resume) {
      p.value = resume->tensor<float>("w");
      adam.restore(*resume, store);
    }
    for (std::size_t s = adam.steps(); s < steps; ++s) {
      for (std::size_t i = 0; i < 4; ++i) p.grad[i] = std::sin(static_cast<float>(s + i)) * p.value[i];
      adam.step(store, 1e-2);
      if (snapshot && s + 1 == 40) {
        snapshot->add_tensor("w", p.value);
        adam.save(*snapshot, store);
      }
    }
    return p.value;
  };
  nn::Container snap;
  const auto a = run(100, &snap, nullptr);
  EXPECT_EQ(a, run(100, nullptr, nullptr));
  EXPECT_EQ(a, run(100, nullptr, &snap));

  nn::ParamStore<float> s1, s2;
  s1.add("w", {4});
  s2.add("w", {5});
  Adam<float> adam(s1);
  EXPECT_THROW(adam.step(s2, 1e-3), ShapeError);
}

TEST(Schedule, Endpoints) {
  const Schedule s{2e-4, 1e-6, 10, 9};
  const std::size_t spe = 11, last = 10 * 11 - 1;
  EXPECT_EQ(lr_at(s, 0, spe), 0.0);
  EXPECT_EQ(lr_at(s, 9, spe), 2e-4);
  EXPECT_EQ(lr_at(s, last, spe), 1e-6);
  EXPECT_EQ(lr_at(s, last + 50, spe), 1e-6);
  const double mid = 1e-6 + (2e-4 - 1e-6) * std::pow(std::cos(std::numbers::pi / 4), 2);
  EXPECT_NEAR(lr_at(s, 9 + 50, spe), mid, 1e-18);
}

TEST(Schedule, MonotoneAfterWarmupAndValidated) {
  const Schedule s{1e-3, 1e-5, 3, 7};
  for (std::size_t t = 0; t < 7; ++t) EXPECT_LT(lr_at(s, t, 13), lr_at(s, t + 1, 13));
  for (std::size_t t = 7; t < 60; ++t) EXPECT_LE(lr_at(s, t + 1, 13), lr_at(s, t, 13));
  EXPECT_EQ(lr_at(Schedule{1e-3, 1e-5, 3, 0}, 0, 13), 1e-3);
  EXPECT_THROW((Schedule{1e-5, 1e-3, 3, 0}.validate()), ConfigError);
  EXPECT_EQ(schedule_from_json(to_json(s)), s);
}

TEST(Trainer, OnePairOneEpochIsOneStep) {
  net::Model<float> model(micro_config(), 0);
  auto cfg = toy_train_config();
  cfg.batch = 1;
  cfg.schedule.total_epochs = 1;
  Trainer t(model, toy_samples(1), cfg);
  const auto records = run_training(t);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].step, 0u);
  EXPECT_TRUE(t.done());
  EXPECT_THROW(t.train_step(), TrainingError);
}

TEST(Trainer, DropsTheIncompleteBatch) {
  net::Model<float> model(micro_config(), 0);
  Trainer t(model, toy_samples(5), toy_train_config());
  EXPECT_EQ(t.steps_per_epoch(), 2u);
  EXPECT_EQ(t.total_steps(), 8u);
  EXPECT_THROW(Trainer(model, toy_samples(1), toy_train_config()), ParameterError);
  auto cfg = toy_train_config();
  cfg.patch = 32;
  EXPECT_THROW(Trainer(model, toy_samples(2), cfg), ConfigError);
}

TEST(Trainer, ShuffleIsAPureFunctionOfSeedAndEpoch) {
  net::Model<float> model(micro_config(), 0);
  Trainer a(model, toy_samples(9), toy_train_config());
  Trainer b(model, toy_samples(9), toy_train_config());
  for (std::size_t e = 0; e < 4; ++e) {
    auto order = a.epoch_order(e);
    EXPECT_EQ(order, b.epoch_order(e));
    std::sort(order.begin(), order.end());
    for (std::size_t i = 0; i < order.size(); ++i) EXPECT_EQ(order[i], i);
  }
  EXPECT_NE(a.epoch_order(0), a.epoch_order(1));
  EXPECT_EQ(a.batch(5), b.batch(5));
}

TEST(Trainer, IdenticalRunsGiveIdenticalTraces) {
  auto run = [] {
    net::Model<float> model(micro_config(), 1);
    Trainer t(model, toy_samples(4), toy_train_config());
    return totals(run_training(t));
  };
  const auto a = run();
  EXPECT_EQ(a.size(), 8u);
  EXPECT_EQ(a, run());
  for (double v : a) EXPECT_TRUE(std::isfinite(v));
}

TEST(Trainer, ResumeEqualsUninterrupted) {
  const auto samples = toy_samples(4);
  net::Model<float> full_model(micro_config(), 2);
  Trainer full(full_model, samples, toy_train_config());
  const auto reference = totals(run_training(full));

  net::Model<float> first_model(micro_config(), 2);
  Trainer first(first_model, samples, toy_train_config());
  for (int i = 0; i < 3; ++i) first.train_step();
  const auto path = fs::temp_directory_path() / "dpaf_resume.ckpt";
  first.checkpoint().write(path);

  net::Model<float> second_model(micro_config(), 99);
  Trainer second(second_model, samples, toy_train_config());
  second.restore(nn::Container::read(path));
  EXPECT_EQ(second.step(), 3u);
  std::vector<double> resumed(reference.begin(), reference.begin() + 3);
  for (const auto& r : run_training(second)) resumed.push_back(r.loss.total);
  EXPECT_EQ(resumed, reference);
  for (std::size_t i = 0; i < full_model.params().entries(); ++i) {
    EXPECT_EQ(second_model.params().at(i).value, full_model.params().at(i).value);
  }

  auto other = toy_train_config();
  other.seed = 4;
  Trainer mismatched(second_model, samples, other);
  EXPECT_THROW(mismatched.restore(nn::Container::read(path)), ConfigError);
}

TEST(Trainer, NonFiniteLossNamesTheStep) {
  net::Model<float> model(micro_config(), 0);
  model.params().get("head.bias").value[0] = std::numeric_limits<float>::quiet_NaN();
  Trainer t(model, toy_samples(2), toy_train_config());
  try {
    t.train_step();
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("step 0"), std::string::npos) << e.what();
  }
}

TEST(Trainer, CheckpointsAndTraceFiles) {
  const auto dir = fs::temp_directory_path() / "dpaf_train_files";
  fs::remove_all(dir);
  net::Model<float> model(micro_config(), 0);
  auto cfg = toy_train_config();
  cfg.checkpoint_every = 2;
  Trainer t(model, toy_samples(4), cfg);
  std::ostringstream trace;
  TrainHooks hooks;
  hooks.checkpoint_dir = dir;
  hooks.on_step = [&](const StepRecord& r) { write_trace_line(trace, r); };
  const auto records = run_training(t, hooks);
  EXPECT_TRUE(fs::exists(dir / "last.ckpt"));
  EXPECT_TRUE(fs::exists(dir / "epoch_0002.ckpt"));
  EXPECT_TRUE(fs::exists(dir / "epoch_0004.ckpt"));
  std::ofstream(dir / "trace.jsonl") << trace.str();
  const auto back = read_trace(dir / "trace.jsonl");
  ASSERT_EQ(back.size(), records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].loss.total, records[i].loss.total);
    EXPECT_EQ(back[i].lr, records[i].lr);
    EXPECT_EQ(back[i].epoch, records[i].epoch);
  }
}

TEST(Evaluate, OracleAndPassthrough) {
  const auto samples = toy_samples(3, 16);
  const auto perfect = evaluate(samples, [](const rain::Sample& s) { return s.clean; });
  for (const auto& r : perfect.rows) {
    EXPECT_EQ(r.psnr_db, objective::kPsnrInfinity);
    EXPECT_NEAR(r.ssim, 1.0, 1e-9);
  }
  const auto ident = evaluate(samples, identity_predictor());
  ASSERT_EQ(ident.rows.size(), 3u);
  double mean = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(ident.rows[i].pair_id, samples[i].id);
    EXPECT_EQ(ident.rows[i].psnr_db, objective::psnr(samples[i].rainy, samples[i].clean));
    EXPECT_EQ(ident.rows[i].ssim, objective::ssim(samples[i].rainy, samples[i].clean));
    mean += ident.rows[i].psnr_db / 3.0;
  }
  EXPECT_NEAR(ident.mean_psnr, mean, 1e-12);
  EXPECT_THROW(evaluate({}, identity_predictor()), ParameterError);
}

TEST(Evaluate, ReportJsonRoundTripKeepsInfinity) {
  MetricReport r;
  r.rows = {{"a", objective::kPsnrInfinity, 1.0}, {"b", 30.0, 0.9}, {"c", 20.0, 0.5}};
  summarize(r);
  EXPECT_EQ(r.median_psnr, 30.0);
  EXPECT_NEAR(r.mean_ssim, 0.8, 1e-15);
  const auto j = to_json(r);
  EXPECT_EQ(j["pairs"][0]["psnr_db"], "inf");
  const auto back = metric_report_from_json(j);
  EXPECT_EQ(back.rows[0].psnr_db, objective::kPsnrInfinity);
  EXPECT_EQ(back.median_psnr, 30.0);
}

TEST(Derain, PadsOnlyWhenNeededAndKeepsSize) {
  const net::Model<float> model(micro_config(), 0);
  bool padded = true;
  const auto even = random_tensor<float>({3, 8, 6}, 1, 0, 1);
  EXPECT_EQ(derain(model, even, &padded).shape(), even.shape());
  EXPECT_FALSE(padded);
  for (auto [h, w] : {std::pair<std::size_t, std::size_t>{7, 9}, {5, 4}, {1, 3}}) {
    const auto odd = random_tensor<float>({3, h, w}, h * w, 0, 1);
    EXPECT_EQ(derain(model, odd, &padded).shape(), odd.shape());
    EXPECT_TRUE(padded);
  }
  const Tensor<float> img({3, 1, 3}, std::vector<float>{1, 2, 3, 4, 5, 6, 7, 8, 9});
  const auto p = pad_reflect(img, 4);
  ASSERT_EQ(p.shape(), (Shape{3, 4, 4}));
  // Mirror without repeating the edge: columns 1 2 3 -> 1 2 3 2.
  EXPECT_EQ(p[3], 2.0f);
}
