#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GANAD_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("ganad_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& gan_epochs) {
    const fs::path p = dir_ / "run.yaml";
    std::ofstream(p) << "seed: 3\n"
                        "paths:\n  output_dir: " << (dir_ / "out").string() << "\n"
                        "preprocess:\n  window_length: 40\n  train_shift: 10\n  test_shift: 40\n"
                        "  downsample_factor: 10\n  holdout_fraction: 0.25\n"
                        "pca:\n  components: 2\n"
                        "gan:\n  epochs: " << gan_epochs << "\n  batch_size: 8\n  g_steps: 1\n  latent_dim: 3\n"
                        "  generator_depth: 1\n  generator_hidden: 4\n  discriminator_hidden: 4\n  mmd_samples: 8\n"
                        "inversion:\n  max_iterations: 5\n  restarts: 1\n"
                        "synth:\n  normal_rows: 800\n  attack_rows: 600\n";
    return p;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, UsageErrorsExitWithOne) {
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("frobnicate"), 1);
  EXPECT_EQ(run_cli("train --config " + (dir_ / "missing.yaml").string()), 1);
  EXPECT_EQ(run_cli("--help"), 0);
}

TEST_F(Cli, ConfigErrorsExitWithOne) {
  const fs::path p = dir_ / "bad.yaml";
  std::ofstream(p) << "gan:\n  epochz: 2\n";
  EXPECT_EQ(run_cli("train --config " + p.string()), 1);
}

TEST_F(Cli, MissingArtifactExitsWithTwo) {
  EXPECT_EQ(run_cli("detect --config " + write_config("1").string()), 2);
}

TEST_F(Cli, FullPipelineOnTinyData) {
  const std::string cfg = write_config("2").string();
  ASSERT_EQ(run_cli("synth --config " + cfg), 0);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "normal.csv"));
  ASSERT_EQ(run_cli("run --config " + cfg + " --workers 1"), 0);
  for (const char* f : {"history.csv", "scores.csv", "detection.json", "metrics.json"})
    EXPECT_TRUE(fs::exists(dir_ / "out" / f)) << f;
  ASSERT_EQ(run_cli("generate --config " + cfg + " --count 4"), 0);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "samples.csv"));

  std::ifstream in(dir_ / "out" / "metrics.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_FALSE(j.empty());
}

TEST_F(Cli, TrainingWithZeroEpochsSucceeds) {
  const std::string cfg = write_config("0").string();
  ASSERT_EQ(run_cli("synth --config " + cfg), 0);
  ASSERT_EQ(run_cli("ingest --config " + cfg), 0);
  EXPECT_EQ(run_cli("train --config " + cfg), 0);
  EXPECT_EQ(run_cli("detect --config " + cfg), 0);
}
