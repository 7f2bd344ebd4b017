#include "oracles.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace ebstab;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(EBSTAB_CLI_PATH) + " " + args + " 2>" +
                          (std::filesystem::temp_directory_path() / "ebstab_cli_err.txt").string();
  CliRun r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t got = 0;
  while ((got = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, got);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string last_stderr() {
  std::ifstream in(std::filesystem::temp_directory_path() / "ebstab_cli_err.txt");
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string sys(const std::string& name) { return "--system " + oracle::data_path(name); }

Json strip_clock(Json j) {
  j["provenance"].erase("wall_clock_ms");
  return j;
}

}  // namespace

TEST(Cli, LocalVerdicts) {
  CliRun r = run("analyze-local " + sys("example1.json") + " --point 1,0 --samples 300");
  EXPECT_EQ(r.code, 0);
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["command"], "analyze-local");
  EXPECT_EQ(j["results"]["verdict"]["classification"], "Stable");
  EXPECT_TRUE(j["provenance"].contains("library_version"));

  r = run("analyze-local " + sys("example2.json") + " --point 0,0 --samples 300 --budget 20");
  EXPECT_EQ(r.code, 2);

  r = run("analyze-local " + sys("example1.json") + " --point 0,0");
  EXPECT_EQ(r.code, 65);
  EXPECT_NE(last_stderr().find("point not on boundary (f=-1)"), std::string::npos);
}

TEST(Cli, GlobalVerdicts) {
  EXPECT_EQ(run("analyze-global " + sys("example1.json") + " --samples 400").code, 0);
  EXPECT_EQ(run("analyze-global " + sys("infeasible_pair.json") + " --samples 200").code, 3);
}

TEST(Cli, HoffmanExitCodes) {
  EXPECT_EQ(run("hoffman " + sys("example1.json") + " --samples 400").code, 0);
  EXPECT_EQ(run("hoffman " + sys("example2.json") + " --samples 400").code, 2);
  EXPECT_EQ(run("hoffman " + sys("parametric200.json") + " --mode all").code, 65);
  EXPECT_NE(last_stderr().find("--mode realizable"), std::string::npos);
  EXPECT_EQ(run("hoffman " + sys("remark32.json")).code, 65);
}

TEST(Cli, PerturbRejectsLongDirection) {
  EXPECT_EQ(run("perturb " + sys("example2.json") + " --point 0,0 --ustar 1,1").code, 65);
  const CliRun r = run("perturb " + sys("example2.json") + " --point 0,0 --ustar 0,1 --samples 400");
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(Json::parse(r.out)["results"].contains("comparison"));
}

TEST(Cli, OracleFlagsIllConditionedInput) {
  EXPECT_EQ(run("oracle " + sys("example1.json") + " --point 0,0 --eta 1.5 --samples 300").code, 0);
  EXPECT_EQ(run("oracle " + sys("ill_conditioned.json") + " --point 0,0 --samples 200").code, 2);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run("analyze-local " + sys("example1.json") + " --point 1,0 --no-such-flag").code, 64);
  EXPECT_EQ(run("repro example9").code, 64);
  EXPECT_EQ(run("analyze-local --system /nonexistent/file.json --point 1,0").code, 65);
  const Json err = Json::parse(last_stderr());
  EXPECT_EQ(err["error"]["kind"], "data");
}

TEST(Cli, RepeatedRunsMatchApartFromClock) {
  const std::string args = "analyze-global " + sys("example1.json") + " --samples 300 --seed 5";
  const CliRun a = run(args);
  const CliRun b = run(args);
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(strip_clock(Json::parse(a.out)).dump(), strip_clock(Json::parse(b.out)).dump());
}

TEST(Cli, WritesCsvFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "ebstab_cli_csv";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  ASSERT_EQ(run("hoffman " + sys("example1.json") + " --samples 300 --csv " + dir.string()).code, 0);
  std::ifstream in(dir / "subsets.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "subset,theta,direction,branch,realizable");
  EXPECT_TRUE(std::filesystem::exists(dir / "trials.csv"));
}
