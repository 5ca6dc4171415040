#include <gtest/gtest.h>

#include "cli_util.hpp"

using namespace tda::test;
namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fresh_dir("tda_cli_unit");
    model_ = (dir_ / "m.bin").string();
    ASSERT_EQ(run_cli("make-toy-model --layers 2 --d-model 32 --d-ff 96 --heads 4 --seed 5 --out " + model_), 0);
    std::ofstream(dir_ / "cal.txt") << "first calibration line\nsecond line of calibration text\n";
    ASSERT_EQ(run_cli("search-thresholds --model " + model_ + " --calibration " + (dir_ / "cal.txt").string() +
                      " --out " + (dir_ / "p.json").string()),
              0);
  }

  static inline fs::path dir_;
  static inline std::string model_;
};

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("no-such-command"), 2);
  EXPECT_EQ(run_cli("generate --model " + model_ + " --prompt hi --strategy tda"), 2);
  EXPECT_EQ(run_cli("generate --model " + model_ + " --prompt hi --strategy griffin"), 2);
  EXPECT_EQ(run_cli("generate --model " + model_ + " --prompt hi --strategy griffin --sparsity 1.5"), 2);
  EXPECT_EQ(run_cli("generate --model " + model_ + " --prompt hi --strategy warp"), 2);
  EXPECT_EQ(run_cli("generate --model /nonexistent.bin --prompt hi"), 2);
  EXPECT_EQ(run_cli("make-toy-model --d-model 30 --heads 4 --out " + (dir_ / "x.bin").string()), 2);
}

TEST_F(Cli, DataErrorsExitThree) {
  std::ofstream(dir_ / "junk.bin") << "not a tensor file";
  fs::copy_file(model_ + ".config.json", dir_ / "junk.bin.config.json", fs::copy_options::overwrite_existing);
  EXPECT_EQ(run_cli("generate --model " + (dir_ / "junk.bin").string() + " --prompt hi"), 3);
  EXPECT_EQ(run_cli("generate --model " + model_ + " --prompt hi --max-new-tokens 100000"), 3);
}

TEST_F(Cli, DivergenceExitsFour) {
  EXPECT_EQ(run_cli("emergence --variant swiglu --steps 300 --lr 1e6 --out " + (dir_ / "div").string()), 4);
}

TEST_F(Cli, GenerateIsReproducible) {
  const std::string args = "generate --model " + model_ + " --prompt 'Hello there' --strategy tda --profile " +
                           (dir_ / "p.json").string() + " --max-new-tokens 16 --temperature 0.8 --seed 3";
  ASSERT_EQ(run_cli(args + " --dump-masks " + (dir_ / "m1.hex").string(), dir_ / "g1.txt"), 0);
  ASSERT_EQ(run_cli(args + " --dump-masks " + (dir_ / "m2.hex").string(), dir_ / "g2.txt"), 0);
  EXPECT_EQ(without_timing_lines(slurp(dir_ / "g1.txt")), without_timing_lines(slurp(dir_ / "g2.txt")));
  EXPECT_EQ(slurp(dir_ / "m1.hex"), slurp(dir_ / "m2.hex"));
  EXPECT_FALSE(slurp(dir_ / "m1.hex").empty());
}

TEST_F(Cli, OutputDirFromEnvironment) {
  const fs::path out = dir_ / "env_out";
  const std::string cmd = "TDA_OUTPUT_DIR='" + out.string() + "' '" + cli_path() + "' emergence --steps 10 >/dev/null";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(out / "trajectory_relu.csv"));
  EXPECT_TRUE(fs::exists(out / "trajectory_swiglu.csv"));
}
