#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string output; // stdout and stderr interleaved
};

CommandResult run_command(const std::string& cmd) {
  CommandResult r;
  FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
  if (!pipe) return r;
  std::array<char, 512> buf{};
  while (fgets(buf.data(), static_cast<int>(buf.size()), pipe)) r.output += buf.data();
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class CliTest : public ::testing::Test {
protected:
  void SetUp() override {
    std::random_device rd;
    dir_ = fs::temp_directory_path() / ("transop_cli_" + std::to_string(rd()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  static json shipped(const std::string& name) {
    std::ifstream in(std::string(TRANSOP_CONFIG_DIR) + "/" + name + ".json");
    return json::parse(in);
  }

  fs::path write_config(const std::string& text) const {
    const auto p = dir_ / "config.json";
    std::ofstream(p) << text;
    return p;
  }

  CommandResult cli(const fs::path& config, const fs::path& out, const std::string& extra = {}, const std::string& env = {}) const {
    return run_command(env + " " + TRANSOP_CLI_PATH + " run --config " + config.string() + " --out " + out.string() +
                       " --threads 1 " + extra);
  }

  fs::path dir_;
};

} // namespace

TEST_F(CliTest, SuccessfulRunWritesReportAndSeries) {
  const auto out = dir_ / "out";
  const auto r = cli(fs::path(TRANSOP_CONFIG_DIR) / "theorem1_case1.json", out);
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("PASS "), std::string::npos);
  ASSERT_TRUE(fs::exists(out / "report.json"));
  EXPECT_TRUE(fs::exists(out / "traces.csv"));
  EXPECT_TRUE(fs::exists(out / "traces.svg"));
  std::ifstream in(out / "report.json");
  const auto report = json::parse(in);
  EXPECT_EQ(report["verdict"], "pass");
  EXPECT_EQ(report["provenance"]["config"], shipped("theorem1_case1"));
}

TEST_F(CliTest, NoPlotsFlagSkipsSvg) {
  const auto out = dir_ / "out";
  EXPECT_EQ(cli(fs::path(TRANSOP_CONFIG_DIR) / "corollary2.json", out, "--no-plots").exit_code, 0);
  EXPECT_TRUE(fs::exists(out / "traces.csv"));
  EXPECT_FALSE(fs::exists(out / "traces.svg"));
}

TEST_F(CliTest, EnvironmentOverridesOutputDirectory) {
  const auto ignored = dir_ / "ignored", chosen = dir_ / "chosen";
  const auto r = cli(fs::path(TRANSOP_CONFIG_DIR) / "corollary2.json", ignored, {}, "TRANSOP_OUT_DIR=" + chosen.string());
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_TRUE(fs::exists(chosen / "report.json"));
  EXPECT_FALSE(fs::exists(ignored));
}

TEST_F(CliTest, MalformedJsonReportsPosition) {
  const auto r = cli(write_config("{\n  \"scenario\": \"theorem1_case1\",\n  \"grid\": {\n}"), dir_ / "out");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("line 4"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("column"), std::string::npos) << r.output;
}

TEST_F(CliTest, UnknownScenarioIsConfigError) {
  auto j = shipped("corollary2");
  j["scenario"] = "theorem42";
  const auto r = cli(write_config(j.dump()), dir_ / "out");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("unknown scenario"), std::string::npos) << r.output;
}

TEST_F(CliTest, SingularInitialDataIsConfigError) {
  auto j = shipped("theorem1_case1_system");
  j["data"]["initial"] = {{1.0, 2.0}, {0.5, 1.0}};
  const auto r = cli(write_config(j.dump()), dir_ / "out");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("determinant condition"), std::string::npos) << r.output;
  EXPECT_FALSE(fs::exists(dir_ / "out" / "report.json"));
}

TEST_F(CliTest, FailedAssertionExitsWithTwo) {
  auto j = shipped("theorem1_case1");
  j["assertions"]["noise_factor"] = 1e12;
  const auto out = dir_ / "out";
  const auto r = cli(write_config(j.dump()), out);
  EXPECT_EQ(r.exit_code, 2) << r.output;
  EXPECT_NE(r.output.find("FAIL "), std::string::npos);
  std::ifstream in(out / "report.json");
  EXPECT_EQ(json::parse(in)["verdict"], "fail");
}

TEST_F(CliTest, MissingOptionsAndFiles) {
  EXPECT_EQ(run_command(std::string(TRANSOP_CLI_PATH) + " run --out " + dir_.string()).exit_code, 1);
  EXPECT_EQ(run_command(std::string(TRANSOP_CLI_PATH)).exit_code, 1);
  const auto r = cli(dir_ / "does_not_exist.json", dir_ / "out");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("cannot open"), std::string::npos);
  EXPECT_EQ(run_command(std::string(TRANSOP_CLI_PATH) + " --help").exit_code, 0);
}
