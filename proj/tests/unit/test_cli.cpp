#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "dpaf/image_io.hpp"
#include "dpaf/train/evaluate.hpp"
#include "dpaf/train/trainer.hpp"
#include "oracles.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dpaf;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "dpaf");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("dpaf_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    json cfg = {{"seed", 5},
                {"data", {{"seed", 11}, {"n_pairs", 4}, {"height", 16}, {"width", 16}, {"holdout", 0.25}}},
                {"model",
                 {{"base_channels", 4}, {"stages", 1}, {"vit_depth", 1}, {"vit_heads", 2}, {"vit_dim", 8},
                  {"pos_grid", 4}, {"fusion_reduction", 2}}},
                {"loss", {{"ssim", {{"window", 7}}}, {"perceptual", {{"widths", {4, 4, 4}}}}}},
                {"schedule", {{"total_epochs", 2}, {"warmup_steps", 2}}},
                {"train", {{"batch", 1}, {"patch", 0}}}};
    std::ofstream(config()) << cfg.dump(2);
  }
  std::string config() const { return (dir_ / "config.json").string(); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string make_data(const std::string& name = "data") {
    const auto r = run({"gen-data", "--config", config(), "--out", path(name)});
    EXPECT_EQ(r.code, 0) << r.err;
    return path(name) + "/manifest.json";
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, HelpAndUsageErrors) {
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({"train", "--help"}).code, 0);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"nonsense"}).code, 2);
  EXPECT_EQ(run({"gen-data", "--bogus-flag"}).code, 2);
}

TEST_F(CliTest, GenDataIsDeterministicAndCounts) {
  const auto r = run({"gen-data", "--config", config(), "--out", path("a"), "--n-pairs", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, path("a") + "/manifest.json\n");
  ASSERT_EQ(run({"gen-data", "--config", config(), "--out", path("b"), "--n-pairs", "5"}).code, 0);
  EXPECT_EQ(slurp(path("a/manifest.json")), slurp(path("b/manifest.json")));
  const auto m = json::parse(slurp(path("a/manifest.json")));
  ASSERT_EQ(m["pairs"].size(), 5u);
  for (const auto& p : m["pairs"]) {
    EXPECT_EQ(slurp(path("a/") + p["rainy"].get<std::string>()), slurp(path("b/") + p["rainy"].get<std::string>()));
  }
  const auto eff = cli::load_run_config(path("a/effective_config.json"));
  EXPECT_EQ(eff.data.spec.n_pairs, 5u);
  EXPECT_EQ(cli::to_json(eff), json::parse(slurp(path("a/effective_config.json"))));
}

TEST_F(CliTest, ConfigErrorsExitWithTwo) {
  std::ofstream(path("bad.json")) << R"({"model": {"base_channels": 4, "wings": 2}})";
  EXPECT_EQ(run({"gen-data", "--config", path("bad.json"), "--out", path("x")}).code, 2);
  std::ofstream(path("broken.json")) << "{ not json";
  EXPECT_EQ(run({"gen-data", "--config", path("broken.json"), "--out", path("x")}).code, 2);
  EXPECT_EQ(run({"gen-data", "--config", path("missing.json"), "--out", path("x")}).code, 2);
}

TEST_F(CliTest, TrainNeedsADataset) {
  const auto r = run({"train", "--config", config(), "--out", path("run")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--data"), std::string::npos);
  EXPECT_EQ(run({"train", "--config", config(), "--data", path("nowhere/manifest.json"), "--out", path("run")}).code, 2);
}

TEST_F(CliTest, SmokeTrainAndResume) {
  const auto data = make_data();
  const auto full = run({"train", "--config", config(), "--data", data, "--out", path("full"), "--max-steps", "5"});
  ASSERT_EQ(full.code, 0) << full.err;
  const auto trace = train::read_trace(path("full/loss_trace.jsonl"));
  ASSERT_EQ(trace.size(), 5u);
  for (const auto& r : trace) EXPECT_TRUE(std::isfinite(r.loss.total));
  EXPECT_TRUE(fs::exists(path("full/model.ckpt")));
  EXPECT_TRUE(fs::exists(path("full/effective_config.json")));

  ASSERT_EQ(run({"train", "--config", config(), "--data", data, "--out", path("part"), "--max-steps", "2"}).code, 0);
  const auto resumed = run({"train", "--config", config(), "--data", data, "--out", path("part"), "--max-steps", "5",
                            "--resume", path("part/checkpoints/last.ckpt")});
  ASSERT_EQ(resumed.code, 0) << resumed.err;
  EXPECT_EQ(slurp(path("part/loss_trace.jsonl")), slurp(path("full/loss_trace.jsonl")));
  EXPECT_EQ(slurp(path("part/model.ckpt")), slurp(path("full/model.ckpt")));
}

TEST_F(CliTest, EvalReportsEveryPair) {
  const auto data = make_data();
  ASSERT_EQ(run({"train", "--config", config(), "--data", data, "--out", path("run"), "--max-steps", "2"}).code, 0);
  const auto r = run({"eval", "--checkpoint", path("run/model.ckpt"), "--data", data, "--out", path("report.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  auto report = train::metric_report_from_json(json::parse(slurp(path("report.json"))));
  EXPECT_EQ(report.rows.size(), 4u);
  const auto stored = report;
  train::summarize(report);
  EXPECT_EQ(report.mean_psnr, stored.mean_psnr);
  EXPECT_EQ(report.median_ssim, stored.median_ssim);
  EXPECT_TRUE(fs::exists(path("report.json.config.json")));

  ASSERT_EQ(run({"eval", "--identity", "--data", data, "--out", path("ident.json")}).code, 0);
  const auto ident = train::metric_report_from_json(json::parse(slurp(path("ident.json"))));
  const auto samples = rain::load_samples(rain::read_manifest(data));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    EXPECT_EQ(ident.rows[i].psnr_db, objective::psnr(samples[i].rainy, samples[i].clean));
  }
  EXPECT_EQ(run({"eval", "--data", data, "--out", path("x.json")}).code, 2);
}

TEST_F(CliTest, DerainKeepsArbitrarySizes) {
  const auto data = make_data();
  ASSERT_EQ(run({"train", "--config", config(), "--data", data, "--out", path("run"), "--max-steps", "1"}).code, 0);
  write_png(path("odd.png"), oracle::random_tensor<float>({3, 13, 7}, 1, 0, 1));
  auto r = run({"derain", "--checkpoint", path("run/model.ckpt"), "--input", path("odd.png"), "--output", path("o1.png")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("padding applied"), std::string::npos);
  EXPECT_EQ(read_png(path("o1.png")).shape(), (Shape{3, 13, 7}));
  write_png(path("even.png"), oracle::random_tensor<float>({3, 12, 8}, 2, 0, 1));
  r = run({"derain", "--checkpoint", path("run/model.ckpt"), "--input", path("even.png"), "--output", path("o2.png")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("padding not needed"), std::string::npos);
  EXPECT_NE(r.out.find("PSNR"), std::string::npos);
  EXPECT_EQ(read_png(path("o2.png")).shape(), (Shape{3, 12, 8}));
  EXPECT_TRUE(fs::exists(path("o2.png.config.json")));
  EXPECT_EQ(run({"derain", "--checkpoint", path("run/model.ckpt"), "--input", path("none.png"), "--output", path("o3.png")}).code, 2);
}

TEST_F(CliTest, GradCheckScopes) {
  const auto a = run({"grad-check", "--scope", "layer_norm"});
  EXPECT_EQ(a.code, 0) << a.err;
  EXPECT_NE(a.out.find("all gradients match"), std::string::npos);
  EXPECT_EQ(run({"grad-check", "--scope", "layer_norm"}).out, a.out);
  EXPECT_EQ(run({"grad-check", "--scope", "warp_drive"}).code, 2);
  ASSERT_EQ(run({"grad-check", "--scope", "linear", "--out", path("gc.json")}).code, 0);
  EXPECT_FALSE(json::parse(slurp(path("gc.json"))).empty());
}

TEST_F(CliTest, AblateSmoke) {
  const auto data = make_data();
  auto r = run({"ablate", "--config", config(), "--data", data, "--out", path("abl"), "--variants", "OnlyCNN,Full",
                "--seeds", "0", "--max-steps", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto table = json::parse(slurp(path("abl/ablation.json")));
  EXPECT_EQ(table["rows"].size(), 2u);
  EXPECT_TRUE(fs::exists(path("abl/ablation.md")));
  EXPECT_TRUE(fs::exists(path("abl/effective_config.json")));

  r = run({"ablate", "--config", config(), "--data", data, "--out", path("twice"), "--variants", "Full,Full",
           "--seeds", "1", "--max-steps", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  table = json::parse(slurp(path("twice/ablation.json")));
  ASSERT_EQ(table["rows"].size(), 2u);
  EXPECT_EQ(table["rows"][0]["runs"], table["rows"][1]["runs"]);

  EXPECT_EQ(run({"ablate", "--config", config(), "--data", data, "--out", path("one"), "--variants", "Full"}).code, 2);
  EXPECT_EQ(run({"ablate", "--config", config(), "--data", data, "--out", path("bad"), "--variants", "Full,Nope"}).code, 2);
  r = run({"ablate", "--config", config(), "--data", data, "--out", path("losses"), "--variants", "Full",
           "--loss-sets", "1,0,0;1,0.2,0.04", "--seeds", "0", "--max-steps", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(slurp(path("losses/ablation.json")))["rows"].size(), 2u);
}
