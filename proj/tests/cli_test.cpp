/*
 * Copyright 2026 The DFCL Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "dfcl/cli.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace dfcl {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("dfcl_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string Path(const std::string& name) const { return (dir_ / name).string(); }

  // Runs the installed binary; returns its exit code. stderr goes to err.txt.
  int Cli(const std::string& args) {
    const std::string cmd = std::string(DFCL_CLI_PATH) + " " + args + " > " +
                            Path("out.txt") + " 2> " + Path("err.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string Read(const std::string& path) const {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void WriteText(const std::string& path, const std::string& text) const {
    std::ofstream(path) << text;
  }

  fs::path dir_;
};

TEST_F(CliTest, EndToEndSmoke) {
  const auto start = std::chrono::steady_clock::now();
  WriteText(Path("cfg.txt"),
            "generate.n=10000\ngenerate.m=5\ngenerate.d=10\ngenerate.noise=0.1\nseed=7\n"
            "train.epochs=10\ntrain.batch_size=512\ntrain.lr=0.003\n");
  ASSERT_EQ(Cli("generate -c " + Path("cfg.txt") + " -o " + Path("d.csv") + " --truth " +
                Path("t.csv")),
            0)
      << Read(Path("err.txt"));
  ASSERT_EQ(Cli("train -c " + Path("cfg.txt") + " -d " + Path("d.csv") +
                " --backend two-stage --checkpoint " + Path("m.bin") + " --log " + Path("log.txt")),
            0)
      << Read(Path("err.txt"));
  ASSERT_EQ(Cli("evaluate -d " + Path("d.csv") + " --checkpoint " + Path("m.bin") + " --truth " +
                Path("t.csv") + " -o " + Path("curve.csv") + " --oracle-out " + Path("oracle.csv") +
                " --summary " + Path("summary.txt")),
            0)
      << Read(Path("err.txt"));
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LT(seconds, 60.0);
  EXPECT_TRUE(fs::exists(Path("m.bin.manifest")));
  std::istringstream curve(Read(Path("curve.csv")));
  CostCurve c = ParseCurveCsv(curve);
  EXPECT_EQ(c.points.size(), 12u);
  EXPECT_NE(Read(Path("summary.txt")).find("mean_per_capita_revenue="), std::string::npos);
  std::istringstream log(Read(Path("log.txt")));
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) ++lines;
  EXPECT_EQ(lines, 10);
}

TEST_F(CliTest, SolveZeroBudgetGivesControl) {
  ASSERT_EQ(Cli("generate --set n=300 m=4 d=3 -o " + Path("d.csv") + " --truth " + Path("t.csv")), 0);
  ASSERT_EQ(Cli("solve --predictions " + Path("t.csv") + " --budget 0 -o " + Path("a.csv")), 0)
      << Read(Path("err.txt"));
  std::istringstream in(Read(Path("a.csv")));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "id,choice");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(line.substr(line.find(',') + 1), "0");
  }
  EXPECT_EQ(rows, 300);
}

TEST_F(CliTest, SolveWithCheckpointAndTrace) {
  ASSERT_EQ(Cli("generate --set n=200 m=3 d=4 -o " + Path("d.csv") + " --truth " + Path("t.csv")), 0);
  ASSERT_EQ(Cli("train --set train.epochs=2 -d " + Path("d.csv") + " --checkpoint " + Path("m.bin") +
                " --log " + Path("log.txt")),
            0)
      << Read(Path("err.txt"));
  ASSERT_EQ(Cli("solve -d " + Path("d.csv") + " --checkpoint " + Path("m.bin") +
                " --budget 20 --trace " + Path("trace.txt") + " -o " + Path("a.csv")),
            0)
      << Read(Path("err.txt"));
  EXPECT_EQ(Read(Path("trace.txt")).rfind("iter=0 lambda=0 ", 0), 0u);
}

TEST_F(CliTest, ReportMatchesGolden) {
  std::string args = "report";
  for (const char* name : {"TwoStage", "PLL", "MERL", "IFD"}) {
    args += std::string(" --curve ") + name + "=" + DFCL_TEST_DATA_DIR + "/curve_" + name + ".csv";
  }
  ASSERT_EQ(Cli(args + " -o " + Path("table.txt")), 0) << Read(Path("err.txt"));
  EXPECT_EQ(Read(Path("table.txt")), Read(std::string(DFCL_TEST_DATA_DIR) + "/report_golden.txt"));
  ASSERT_EQ(Cli(args), 0);
  EXPECT_EQ(Read(Path("out.txt")), Read(Path("table.txt")));
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(Cli("frobnicate"), 1);
  EXPECT_EQ(Cli(""), 1);
  EXPECT_EQ(Cli("evaluate -d " + Path("missing.csv") + " --predictions x -o " + Path("c.csv")), 2);
  const std::string err = Read(Path("err.txt"));
  EXPECT_EQ(std::count(err.begin(), err.end(), '\n'), 1) << err;
  EXPECT_EQ(Cli("generate --set n=0 -o " + Path("d.csv") + " --truth " + Path("t.csv")), 2);
  // Every treatment costs at least 1 per individual: budget 1 is infeasible.
  WriteText(Path("p.csv"), "id,r0,r1,c0,c1\n0,1,2,1,2\n1,1,3,1,3\n");
  EXPECT_EQ(Cli("solve --predictions " + Path("p.csv") + " --budget 1 -o " + Path("a.csv")), 3);
  EXPECT_EQ(Cli("solve --predictions " + Path("p.csv") + " -o " + Path("a.csv")), 1);
  EXPECT_EQ(Cli("train --backend dpm -d x --checkpoint y --log z"), 2);
}

TEST_F(CliTest, RefusesToClobberWithoutForce) {
  const std::string gen =
      "generate --set n=50 m=2 d=2 -o " + Path("d.csv") + " --truth " + Path("t.csv");
  ASSERT_EQ(Cli(gen), 0);
  const std::string before = Read(Path("d.csv"));
  EXPECT_EQ(Cli(gen + " --set seed=3"), 1);
  EXPECT_EQ(Read(Path("d.csv")), before);
  EXPECT_EQ(Cli(gen + " --set seed=3 --force"), 0);
  EXPECT_NE(Read(Path("d.csv")), before);
}

TEST_F(CliTest, RerunsAreByteIdentical) {
  for (const char* tag : {"a", "b"}) {
    const std::string t(tag);
    ASSERT_EQ(Cli("--threads 1 generate --set n=400 m=3 d=3 seed=5 -o " + Path(t + ".csv") +
                  " --truth " + Path(t + "_t.csv")),
              0);
    ASSERT_EQ(Cli("train --set train.epochs=3 train.backend=ifd seed=2 -d " + Path(t + ".csv") +
                  " --checkpoint " + Path(t + ".bin") + " --log " + Path(t + ".log")),
              0)
        << Read(Path("err.txt"));
    ASSERT_EQ(Cli("evaluate -d " + Path(t + ".csv") + " --checkpoint " + Path(t + ".bin") +
                  " -o " + Path(t + "_curve.csv")),
              0);
  }
  EXPECT_EQ(Read(Path("a.csv")), Read(Path("b.csv")));
  EXPECT_EQ(Read(Path("a_t.csv")), Read(Path("b_t.csv")));
  EXPECT_EQ(Read(Path("a.bin")), Read(Path("b.bin")));
  EXPECT_EQ(Read(Path("a_curve.csv")), Read(Path("b_curve.csv")));
}

TEST(CliInProcess, HelpExitsZero) {
  const char* argv[] = {"dfcl", "--help"};
  std::ostringstream out, err;
  EXPECT_EQ(cli::Run(2, argv, out, err), 0);
  EXPECT_NE(out.str().find("generate"), std::string::npos);
}

}  // namespace
}  // namespace dfcl
