// Copyright 2026 The leuda Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "tiny_config.hpp"

namespace {

namespace fs = std::filesystem;

struct Result {
  int status = -1;
  std::string output;
};

Result run(const std::string& args, const std::string& env = "") {
  const std::string command = env + " " LEUDA_CLI_PATH " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buffer{};
  while (std::fgets(buffer.data(), buffer.size(), pipe)) r.output += buffer.data();
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = leuda::testing::scratch_dir(
        std::string("cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    config_ = dir_ / "tiny.json";
    std::ofstream(config_) << leuda::testing::tiny_flat_config().dump(2);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string common() const {
    return "--config " + config_.string() + " --out " + (dir_ / "runs").string();
  }

  fs::path dir_;
  fs::path config_;
};

TEST_F(CliTest, HelpListsSubcommands) {
  const auto r = run("--help");
  EXPECT_EQ(r.status, 0);
  for (const char* sub : {"stage1", "stage2", "ablate", "evaluate", "report"}) {
    EXPECT_NE(r.output.find(sub), std::string::npos) << sub;
  }
}

TEST_F(CliTest, RejectsBadArguments) {
  EXPECT_NE(run("").status, 0);
  EXPECT_NE(run("stage1 --config /no/such/file.json").status, 0);
  EXPECT_NE(run("stage1 " + common() + " --label-ratio 1.5").status, 0);
  EXPECT_NE(run("stage1 " + common() + " --direction up").status, 0);
}

TEST_F(CliTest, InvalidConfigExitsWithTwo) {
  EXPECT_EQ(run("stage1 " + common() + " --set no_such_key=1").status, 2);
  EXPECT_EQ(run("stage2 " + common() + " --method magic").status, 2);
  EXPECT_EQ(run("stage1 " + common(), "LEUDA_T_MAX=oops").status, 2);
}

TEST_F(CliTest, StagesEvaluateAndReport) {
  const auto s1 = run("stage1 " + common());
  ASSERT_EQ(s1.status, 0) << s1.output;
  EXPECT_TRUE(fs::exists(dir_ / "runs" / "seed-0" / "stage1" / "translators.pt"));

  const auto s2 = run("stage2 " + common() + " --method dual_adversarial_teacher");
  ASSERT_EQ(s2.status, 0) << s2.output;
  EXPECT_NE(s2.output.find("dual_adversarial_teacher"), std::string::npos);
  const auto record_path = dir_ / "runs" / "seed-0" / "dual_adversarial_teacher" / "record.json";
  ASSERT_TRUE(fs::exists(record_path));
  const auto record = nlohmann::json::parse(std::ifstream(record_path));
  EXPECT_EQ(record.at("method"), "dual_adversarial_teacher");

  const auto ev = run("evaluate " + common() + " --method dual_adversarial_teacher");
  EXPECT_EQ(ev.status, 0) << ev.output;

  const auto rep = run("report --out " + (dir_ / "runs").string());
  EXPECT_EQ(rep.status, 0) << rep.output;
  EXPECT_TRUE(fs::exists(dir_ / "runs" / "report" / "ablation.md"));
}

TEST_F(CliTest, SetOverridesAndEnvironmentLayering) {
  const auto r = run("stage2 " + common() + " --method no_adaptation --set t_max=1",
                     "LEUDA_T_MAX=2");
  ASSERT_EQ(r.status, 0) << r.output;
  std::ifstream schedule(dir_ / "runs" / "seed-0" / "no_adaptation" / "schedule.jsonl");
  int lines = 0;
  for (std::string line; std::getline(schedule, line);) lines += !line.empty();
  EXPECT_EQ(lines, 1);
}

TEST_F(CliTest, StageTwoWithoutStageOneFails) {
  EXPECT_EQ(run("stage2 " + common() + " --method dual_teacher").status, 2);
}

TEST_F(CliTest, ReportWithoutRecordsFails) {
  EXPECT_EQ(run("report --out " + (dir_ / "empty").string()).status, 1);
}

}  // namespace
