#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "remest/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args, const std::string& env = "") {
  std::string cmd = env.empty() ? "" : env + " ";
  cmd += std::string(REMEST_CLI_PATH) + " " + args + " 2>/dev/null";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

remest::io::CsvFile parse_csv(const std::string& text) {
  std::istringstream in(text);
  return remest::io::read_csv(in);
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("remest_cli_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

TEST(Cli, StageJson) {
  const Result r = run("stage --lambda 1 --gamma 1 --c1 0.1 --c2 1 --format json");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["beta1"].get<double>(), 0.5839, 1e-4);
  EXPECT_NEAR(j["beta2"].get<double>(), 2.6199, 1e-4);
  EXPECT_LT(std::abs(j["foc_residuals"][0].get<double>()), 1e-10);
  EXPECT_LT(std::abs(j["foc_residuals"][1].get<double>()), 1e-10);
}

TEST(Cli, StageCheapPerfectChannelBranch) {
  const Result r = run("stage --lambda 1 --gamma 1 --c1 1 --c2 0.5");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("beta1 0.707106781187"), std::string::npos);
  EXPECT_NE(r.out.find("beta2 0.707106781187"), std::string::npos);
  EXPECT_NE(r.out.find("noisy channel unused"), std::string::npos);
}

TEST(Cli, BadArgumentsExitTwo) {
  EXPECT_EQ(run("stage --lambda -1 --gamma 1 --c1 0.1 --c2 1").code, 2);
  EXPECT_EQ(run("dp --T 0").code, 2);
  EXPECT_EQ(run("counterexample --L 1 --gamma 1 --c1 0.03 --c2 0.05").code, 2);
  EXPECT_EQ(run("simulate --table missing.json").code, 2);
  EXPECT_EQ(run("nonsense").code, 2);
  EXPECT_EQ(run("").code, 2);
}

TEST(Cli, Counterexample) {
  const Result r = run("counterexample --L 1 --gamma 1 --c1 0.01 --c2 0.05 --samples 200000 --format json");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["gap"].get<double>(), -0.00282843, 1e-8);
  EXPECT_LT(j["replay"]["mean_gap"].get<double>() + 4.0 * j["replay"]["std_err"].get<double>(), 0.0);
}

TEST(Cli, DpJsonAndSlice) {
  const Result j = run("dp --T 2 --N1 0 --N2 1");
  ASSERT_EQ(j.code, 0);
  const auto table = remest::io::table_from_json(nlohmann::json::parse(j.out));
  EXPECT_NEAR(table.value(1, 0, 1), 0.826128565, 1e-9);

  const Result c = run("dp --T 6 --N1 2 --N2 2 --format csv --slice-t 2 --verify");
  ASSERT_EQ(c.code, 0);
  const auto f = parse_csv(c.out);
  EXPECT_EQ(f.rows.size(), 9u);
  EXPECT_EQ(f.meta.at("T"), "6");
}

TEST(Cli, SweepPerfectAxisReachesZero) {
  const Result r = run("sweep --axis n2 --n1 0 --T 100 --verify");
  ASSERT_EQ(r.code, 0);
  const auto f = parse_csv(r.out);
  ASSERT_EQ(f.rows.size(), 101u);
  EXPECT_EQ(remest::io::parse_double(f.rows.back()[f.column("J")]), 0.0);
  EXPECT_EQ(remest::io::parse_double(f.rows.front()[f.column("J")]), 200.0);
  EXPECT_EQ(f.meta.at("axis"), "n2");
}

TEST(Cli, SweepNoisyAxisPlateaus) {
  const Result r = run("sweep --axis n1 --n2 0,10,20 --T 100");
  ASSERT_EQ(r.code, 0);
  const auto f = parse_csv(r.out);
  ASSERT_EQ(f.rows.size(), 303u);
  EXPECT_NO_THROW(remest::io::verify_sweep_csv(f));
  const std::size_t cj = f.column("J");
  for (int block = 0; block < 3; ++block) {
    const auto& last = f.rows[block * 101 + 100][cj];
    EXPECT_EQ(f.rows[block * 101 + 99][cj], last);
    EXPECT_NE(f.rows[block * 101][cj], last);
  }
}

TEST(Cli, SimulateIsByteIdentical) {
  const std::string args = "simulate --T 30 --N1 5 --N2 3 --episodes 400 --seed 9";
  const Result a = run(args);
  const Result b = run(args + " --threads 3");
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  const auto j = nlohmann::json::parse(a.out);
  EXPECT_EQ(j["summary"]["episodes"], 400);
  EXPECT_EQ(j["meta"]["seed"], 9);
}

TEST(Cli, SimulateWritesVerifiedFilesUnderOutDir) {
  const fs::path d = scratch("sim");
  const std::string env = "REMEST_OUT_DIR=" + d.string();
  const std::string args = "simulate --T 40 --N1 6 --N2 4 --episodes 50 --seed 3 --out s.json --trace t.csv --path p.csv --verify";
  ASSERT_EQ(run(args, env).code, 0);
  ASSERT_TRUE(fs::exists(d / "s.json"));
  ASSERT_TRUE(fs::exists(d / "t.csv"));
  ASSERT_TRUE(fs::exists(d / "p.csv"));
  const std::string first = slurp(d / "t.csv");
  EXPECT_NO_THROW(remest::io::verify_trace_csv(remest::io::read_csv_file((d / "t.csv").string())));
  const auto path = remest::io::read_csv_file((d / "p.csv").string());
  ASSERT_EQ(path.rows.size(), 41u);
  EXPECT_EQ(path.rows.front()[path.column("e_n")], "6");

  ASSERT_EQ(run(args, env).code, 0);
  EXPECT_EQ(slurp(d / "t.csv"), first);
  fs::remove_all(d);
}

TEST(Cli, SimulateFromExportedTable) {
  const fs::path d = scratch("table");
  const std::string env = "REMEST_OUT_DIR=" + d.string();
  ASSERT_EQ(run("dp --T 12 --N1 3 --N2 2 --out tab.json", env).code, 0);
  const Result r = run("simulate --table tab.json --episodes 20 --seed 1", env);
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(nlohmann::json::parse(r.out)["config"]["T"], 12);
  EXPECT_EQ(run("simulate --table tab.json --T 5", env).code, 2);
  fs::remove_all(d);
}

}  // namespace
