#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "skewdrift/cli.hpp"

using namespace skewdrift;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome cli(std::vector<std::string> args) {
  args.insert(args.begin(), "skewdrift");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("skewdrift_cli_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::filesystem::path write_config(const std::filesystem::path& dir, const std::string& text) {
  const auto path = dir / "config.json";
  std::ofstream(path) << text;
  return path;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

nlohmann::json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

const char* kQuarticConfig = R"({
  "experiment": "quartic_moments",
  "master_seed": 11,
  "overrides": {"dt_grid": [0.2, 0.1], "n_kept": 2000, "burn_in": 10, "n_replicates": 2},
  "output_dir": "out"
})";

}  // namespace

TEST(CliList, PrintsEverything) {
  const auto r = cli({"list"});
  EXPECT_EQ(r.code, kExitOk);
  for (const char* name : {"ou", "mult_vol", "quartic_langevin", "poisson_re", "soft_spheres", "skew", "em",
                           "tamed", "semi_implicit", "logistic", "gaussian", "quartic_moments", "poisson_mse"}) {
    EXPECT_NE(r.out.find(std::string("  ") + name + "\n"), std::string::npos) << name;
  }
}

TEST(CliSimulate, ElevenRowsForTenSteps) {
  const auto r = cli({"simulate", "--model", "quartic_langevin", "--scheme", "skew", "--dt", "0.1", "--steps",
                      "10", "--seed", "7"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 12u);
  EXPECT_EQ(ls[0], "step,t,x1,exploded");
  EXPECT_EQ(ls[1], "0,0,0,false");
  EXPECT_EQ(ls[11].substr(0, 5), "10,1,");
}

TEST(CliSimulate, EulerMaruyamaExplodesBeforeStepHundred) {
  const auto r = cli({"simulate", "--model", "quartic_langevin", "--scheme", "em", "--dt", "0.5", "--steps",
                      "1000", "--x0", "10"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto ls = lines(r.out);
  EXPECT_LT(ls.size(), 102u);
  EXPECT_NE(ls.back().find(",true"), std::string::npos);
  EXPECT_NE(ls[ls.size() - 2].find(",false"), std::string::npos);
}

TEST(CliSimulate, InvalidFlagsExitTwo) {
  EXPECT_EQ(cli({"simulate", "--model", "ou", "--dt", "0.1", "--steps", "0"}).code, kExitConfigError);
  EXPECT_EQ(cli({"simulate", "--model", "ou", "--dt", "-0.1", "--steps", "3"}).code, kExitConfigError);
  EXPECT_EQ(cli({"simulate", "--model", "nope", "--dt", "0.1", "--steps", "3"}).code, kExitConfigError);
  EXPECT_EQ(cli({"simulate", "--model", "mult_vol", "--dt", "0.1", "--steps", "3"}).code, kExitConfigError);
  EXPECT_EQ(cli({"simulate", "--model", "ou", "--dt", "0.1", "--steps", "3", "--x0", "1,2"}).code,
            kExitConfigError);
  EXPECT_EQ(cli({"simulate", "--model", "ou", "--dt", "0.1", "--steps", "3", "--bogus"}).code, kExitConfigError);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitConfigError);
}

TEST(CliSimulate, ParamsAndVectorStart) {
  const auto r = cli({"simulate", "--model", "soft_spheres", "--param", "B=1", "--param", "N=2", "--dt", "0.1",
                      "--steps", "2", "--x0", "0.1,0.2,0.3,0.4"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto ls = lines(r.out);
  EXPECT_EQ(ls[0], "step,t,x1,x2,x3,x4,exploded");
  EXPECT_EQ(ls[1], "0,0,0.1,0.2,0.3,0.4,false");
}

TEST(CliSimulate, OutputFileNeedsForce) {
  const auto dir = fresh_dir("sim");
  const auto out = (dir / "path.csv").string();
  const std::vector<std::string> args{"simulate", "--model", "ou", "--dt", "0.1", "--steps", "3", "--out", out};
  EXPECT_EQ(cli(args).code, kExitOk);
  EXPECT_EQ(cli(args).code, kExitConfigError);
  auto forced = args;
  forced.push_back("--force");
  EXPECT_EQ(cli(forced).code, kExitOk);
}

TEST(CliRun, WritesCsvAndSummary) {
  const auto dir = fresh_dir("run");
  const auto config = write_config(dir, kQuarticConfig);
  const auto r = cli({"run", config.string(), "--threads", "2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "moments.csv"));
  const auto summary = read_json(dir / "out" / "summary.json");
  EXPECT_EQ(summary["experiment"], "quartic_moments");
  EXPECT_EQ(summary["master_seed"], 11);
  EXPECT_EQ(summary["reproducibility_hash"].get<std::string>().size(), 64u);
  EXPECT_EQ(summary["parameters"]["n_kept"], 2000);
  EXPECT_TRUE(summary.contains("wall_time_seconds"));
  EXPECT_TRUE(summary.contains("version"));
  EXPECT_EQ(summary["csv_files"][0]["rows"], 6);
}

TEST(CliRun, RerunGivesIdenticalHashAndNeedsForce) {
  const auto dir = fresh_dir("rerun");
  const auto config = write_config(dir, kQuarticConfig);
  ASSERT_EQ(cli({"run", config.string()}).code, kExitOk);
  const auto first = read_json(dir / "out" / "summary.json")["reproducibility_hash"];
  const auto refused = cli({"run", config.string()});
  EXPECT_EQ(refused.code, kExitConfigError);
  EXPECT_NE(refused.err.find("--force"), std::string::npos);
  ASSERT_EQ(cli({"run", config.string(), "--force", "--threads", "8"}).code, kExitOk);
  EXPECT_EQ(read_json(dir / "out" / "summary.json")["reproducibility_hash"], first);
}

TEST(CliRun, UnknownKeyIsNamed) {
  const auto dir = fresh_dir("typo");
  const auto config = write_config(dir, R"({"experiment": "quartic_moments", "scheem": "skew"})");
  const auto r = cli({"run", config.string()});
  EXPECT_EQ(r.code, kExitConfigError);
  EXPECT_NE(r.err.find("scheem"), std::string::npos);
}

TEST(CliRun, UnknownOverrideIsNamed) {
  const auto dir = fresh_dir("typo2");
  const auto config =
      write_config(dir, R"({"experiment": "quartic_moments", "overrides": {"scheem": "skew"}})");
  const auto r = cli({"run", config.string()});
  EXPECT_EQ(r.code, kExitConfigError);
  EXPECT_NE(r.err.find("scheem"), std::string::npos);
}

TEST(CliRun, ConfigErrors) {
  const auto dir = fresh_dir("bad");
  EXPECT_EQ(cli({"run", (dir / "missing.json").string()}).code, kExitConfigError);
  EXPECT_EQ(cli({"run", write_config(dir, "{not json").string()}).code, kExitConfigError);
  EXPECT_EQ(cli({"run", write_config(dir, R"({"experiment": "nope"})").string()}).code, kExitConfigError);
  EXPECT_EQ(cli({"run", write_config(dir, R"({"experiment": "quartic_moments", "master_seed": -1})").string()}).code,
            kExitConfigError);
  EXPECT_EQ(cli({"run", write_config(dir, R"({"master_seed": 1})").string()}).code, kExitConfigError);
}

TEST(CliRun, RuntimeFailureExitsThreeWithCell) {
  const auto dir = fresh_dir("runtime");
  const auto config = write_config(dir, R"({"experiment": "mult_vol_weak_error", "output_dir": "o",
    "overrides": {"x0_list": [0.0], "a_list": [0.5], "dt_grid": [0.1], "n_samples": 10, "schemes": ["skew"]}})");
  const auto r = cli({"run", config.string()});
  EXPECT_EQ(r.code, kExitRuntimeError);
  EXPECT_NE(r.err.find("x0=0"), std::string::npos);
}
