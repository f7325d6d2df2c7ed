#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "oracles.hpp"

namespace {

struct CliResult {
  int code = -1;
  std::string output;
};

CliResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  const char* binary = std::getenv("SPOS_CLI_PATH");
  if (binary == nullptr) {
    ADD_FAILURE() << "SPOS_CLI_PATH is not set";
    return {};
  }
  const std::string command = (env_prefix.empty() ? "" : env_prefix + " ") + "\"" +
                              std::string(binary) + "\" " + args + " 2>&1";
  FILE* pipe = popen(command.c_str(), "r");
  if (pipe == nullptr) {
    ADD_FAILURE() << "popen failed for: " << command;
    return {};
  }
  CliResult result;
  char buffer[4096];
  while (std::fgets(buffer, sizeof(buffer), pipe) != nullptr) result.output += buffer;
  const int status = pclose(pipe);
  result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string fresh_dir() {
  static std::atomic<int> counter{0};
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() /
      ("spos_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::create_directories(dir);
  return dir.string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

long long count_lines(const std::string& path) {
  std::ifstream in(path);
  long long lines = 0;
  std::string line;
  while (std::getline(in, line)) ++lines;
  return lines;
}

spos::Json base_config(const std::string& dir) {
  spos::Json document;
  document["schema_version"] = 1;
  document["target"] = {{"type", "gaussian"}, {"mean", {0.0}}, {"cov", {{1.0}}}};
  document["sampler"] = {{"kind", "spos"},
                         {"step_size", {{"h0", 0.05}}},
                         {"total_steps", 10},
                         {"seed", 7}};
  document["particles"] = 6;
  document["init"] = {{"mean", {0.0}}, {"scale", 0.5}};
  document["outputs"] = {{"trace_path", dir + "/trace.csv"},
                         {"summary_path", dir + "/summary.json"},
                         {"snapshot_every", 5}};
  return document;
}

std::string write_config(const spos::Json& document, const std::string& dir) {
  const std::string path = dir + "/config.json";
  std::ofstream(path) << spos::dump_json_17g(document) << "\n";
  return path;
}

TEST(Cli, RunWritesTraceAndSummary) {
  const std::string dir = fresh_dir();
  const std::string config = write_config(base_config(dir), dir);
  const CliResult result = run_cli("run " + config);
  EXPECT_EQ(result.code, 0) << result.output;
  EXPECT_NE(result.output.find("wrote"), std::string::npos);
  EXPECT_EQ(count_lines(dir + "/trace.csv"), 1 + 3 * 6);
  const std::string summary = read_file(dir + "/summary.json");
  ASSERT_FALSE(summary.empty());
  EXPECT_EQ(spos::Json::parse(summary)["final_step"], 10);
}

TEST(Cli, MalformedConfigFieldExitsTwoAndNamesIt) {
  const std::string dir = fresh_dir();
  spos::Json document = base_config(dir);
  document["sampler"]["beta"] = -1.0;
  const CliResult result = run_cli("run " + write_config(document, dir));
  EXPECT_EQ(result.code, 2) << result.output;
  EXPECT_NE(result.output.find("sampler.beta"), std::string::npos) << result.output;
}

TEST(Cli, MissingConfigFileExitsTwo) {
  const CliResult result = run_cli("run /nonexistent/config.json");
  EXPECT_EQ(result.code, 2) << result.output;
  EXPECT_NE(result.output.find("cannot open"), std::string::npos) << result.output;
}

TEST(Cli, DivergenceExitsThreeAndReportsStep) {
  const std::string dir = fresh_dir();
  spos::Json document = base_config(dir);
  document["sampler"]["kind"] = "sgld";
  document["sampler"]["step_size"]["h0"] = 1e160;
  const CliResult result = run_cli("run " + write_config(document, dir));
  EXPECT_EQ(result.code, 3) << result.output;
  EXPECT_NE(result.output.find("divergence at step"), std::string::npos) << result.output;
}

TEST(Cli, TraceBytesAreIdenticalAcrossRunsAndThreadCounts) {
  std::vector<std::string> traces;
  for (int invocation = 0; invocation < 3; ++invocation) {
    const std::string dir = fresh_dir();
    const std::string config = write_config(base_config(dir), dir);
    const std::string thread_flag = invocation == 2 ? " --threads 4" : " --threads 1";
    const CliResult result = run_cli("run " + config + thread_flag);
    ASSERT_EQ(result.code, 0) << result.output;
    traces.push_back(read_file(dir + "/trace.csv"));
    ASSERT_FALSE(traces.back().empty());
  }
  EXPECT_EQ(traces[0], traces[1]);
  EXPECT_EQ(traces[0], traces[2]);
}

TEST(Cli, CompareMultimodeZeroStepsReportsEqualCoverage) {
  const std::string dir = fresh_dir() + "/compare";
  const CliResult result =
      run_cli("compare-multimode --seed 5 --steps 0 --particles 40 --out " + dir);
  EXPECT_EQ(result.code, 0) << result.output;
  EXPECT_NE(result.output.find("coverage_spos="), std::string::npos);
  const spos::Json report = spos::Json::parse(read_file(dir + "/compare.json"));
  EXPECT_EQ(report["schema_version"], 1);
  EXPECT_EQ(report["coverage_spos"], report["coverage_svgd"]);
  EXPECT_EQ(report["modes"]["locations"].size(), 5u);
  EXPECT_EQ(count_lines(dir + "/spos_trace.csv"), 1 + 40);
  EXPECT_EQ(count_lines(dir + "/svgd_trace.csv"), 1 + 40);
}

TEST(Cli, CompareMultimodeUnwritableOutExitsTwo) {
  const std::string dir = fresh_dir();
  std::ofstream(dir + "/block") << "file";
  const CliResult result = run_cli("compare-multimode --steps 0 --particles 4 --out " +
                                   dir + "/block/out");
  EXPECT_EQ(result.code, 2) << result.output;
}

TEST(Cli, ValidateUnwritableOutExitsTwo) {
  const std::string dir = fresh_dir();
  std::ofstream(dir + "/block") << "file";
  const CliResult result = run_cli("validate --out " + dir + "/block/out");
  EXPECT_EQ(result.code, 2) << result.output;
}

TEST(Cli, ValidateWithCorruptedToleranceFailsNamingTheCriterion) {
  const std::string dir = fresh_dir() + "/validation";
  const CliResult result = run_cli("validate --out " + dir,
                                   "SPOS_VALIDATE_GAUSSIAN_SGLD_MEAN_TOL=1e-18");
  EXPECT_EQ(result.code, 1) << result.output;
  EXPECT_NE(result.output.find("gaussian_sgld: FAIL"), std::string::npos) << result.output;
  EXPECT_NE(result.output.find("criterion failed: gaussian_sgld"), std::string::npos);
  const spos::Json card = spos::Json::parse(read_file(dir + "/validate.json"));
  EXPECT_FALSE(card["all_passed"].get<bool>());
  EXPECT_EQ(card["criteria"][0]["name"], "gaussian_sgld");
  EXPECT_FALSE(card["criteria"][0]["passed"].get<bool>());
}

TEST(Cli, ArgumentErrorsExitTwoAndHelpExitsZero) {
  EXPECT_EQ(run_cli("--bogus").code, 2);
  EXPECT_EQ(run_cli("").code, 2);
  EXPECT_EQ(run_cli("run").code, 2);
  EXPECT_EQ(run_cli("--help").code, 0);
}

}  // namespace
