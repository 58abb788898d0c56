#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cohortshap/cli/commands.hpp"
#include "cohortshap/subprocess.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kData = COHORTSHAP_DATA_DIR;

struct Run {
  int code;
  std::string out;
  std::string log;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "cohortshap");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, log;
  const int code = cohortshap::cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, log);
  return {code, out.str(), log.str()};
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("cohortshap_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  fs::path write(const std::string& name, const json& j) const {
    std::ofstream(path_ / name) << j.dump(2);
    return path_ / name;
  }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json t8_config() {
  return {{"data", (kData / "t8.csv").string()},
          {"schema", {{{"name", "x1"}, {"kind", "binary"}},
                      {{"name", "x2"}, {"kind", "binary"}},
                      {{"name", "x3"}, {"kind", "binary"}}}},
          {"predictions", {{"column", "y"}}}};
}

}  // namespace

TEST(Cli, LocalCohortShapleyOnT8) {
  TempDir dir;
  auto c = t8_config();
  c["targets"] = "8";
  const auto r = run({"local", "--config", dir.write("c.json", c).string()});
  ASSERT_EQ(r.code, 0) << r.log;
  const auto j = json::parse(r.out);
  ASSERT_EQ(j["attributions"].size(), 1u);
  const auto& a = j["attributions"][0];
  EXPECT_EQ(a["target"], 8);
  EXPECT_EQ(a["method"], "cs");
  EXPECT_DOUBLE_EQ(a["phi"]["x1"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(a["phi"]["x2"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(a["phi"]["x3"].get<double>(), 0.0);
  EXPECT_DOUBLE_EQ(a["total"].get<double>(), 1.5);
}

TEST(Cli, GlobalVarianceOnT8WritesFiles) {
  TempDir dir;
  auto c = t8_config();
  c["per_subject"] = true;
  const auto r = run({"global", "--config", dir.write("c.json", c).string(), "--out",
                      (dir.path() / "out").string()});
  ASSERT_EQ(r.code, 0) << r.log;
  const auto j = json::parse(slurp(dir.path() / "out" / "global.json"));
  EXPECT_EQ(j["method"], "var");
  EXPECT_DOUBLE_EQ(j["phi"]["x1"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(j["phi"]["x2"].get<double>(), 0.25);
  EXPECT_DOUBLE_EQ(j["phi"]["x3"].get<double>(), 0.0);
  EXPECT_DOUBLE_EQ(j["total"].get<double>(), 1.25);
  EXPECT_LE(j["disaggregation_residual"].get<double>(), 1e-12);
  const auto csv = slurp(dir.path() / "out" / "per_subject.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "rank,subject,x1,x2,x3,overlay");
  EXPECT_NE(r.log.find("time "), std::string::npos);
}

TEST(Cli, CubeProduct) {
  TempDir dir;
  const json c = {{"cube", {{"d", 2}, {"values", {0, 0, 0, 1}}}}};
  const auto r = run({"cube", "--config", dir.write("c.json", c).string()});
  ASSERT_EQ(r.code, 0) << r.log;
  const auto j = json::parse(r.out);
  EXPECT_DOUBLE_EQ(j["phi_anchored"][0].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(j["phi_anchored"][1].get<double>(), 0.5);
  EXPECT_EQ(j["discrepancy"].get<double>(), 0.0);
  EXPECT_DOUBLE_EQ(j["anova"]["total_variance"].get<double>(), 0.1875);
}

TEST(Cli, AuditOnFullFactorial) {
  TempDir dir;
  auto c = t8_config();
  c["audit"] = {{"thresholds", {0.1, 1.0}}, {"runs", 3}, {"fractions", {0.25}}};
  const auto r = run({"audit", "--config", dir.write("c.json", c).string()});
  ASSERT_EQ(r.code, 0) << r.log;
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "threshold,source,fraction,rate");
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    // Every combination is observed once: marginal samples always have a
    // witness, a held-out row never has one among the rest.
    const bool marginal = line.find(",marginal,") != std::string::npos;
    EXPECT_EQ(line.substr(line.rfind(',') + 1), marginal ? "1" : "0") << line;
  }
  EXPECT_EQ(rows, 4);
}

TEST(Cli, ConfigErrorsExitTwo) {
  TempDir dir;
  auto c = t8_config();
  c["unknown_key"] = 1;
  EXPECT_EQ(run({"local", "--config", dir.write("a.json", c).string()}).code, 2);
  c = t8_config();
  c["method"] = "shapley";
  EXPECT_EQ(run({"local", "--config", dir.write("b.json", c).string()}).code, 2);
  c = t8_config();
  c["targets"] = "9";
  EXPECT_EQ(run({"local", "--config", dir.write("c.json", c).string()}).code, 2);
  EXPECT_EQ(run({"local", "--config", (dir.path() / "missing.json").string()}).code, 2);
  EXPECT_EQ(run({"nonsense"}).code, 2);
  EXPECT_EQ(run({"local", "--config", dir.write("d.json", t8_config()).string(),
                 "--engine", "magic"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, MissingDataExitsOne) {
  TempDir dir;
  auto c = t8_config();
  c["data"] = (dir.path() / "nowhere.csv").string();
  const auto r = run({"local", "--config", dir.write("c.json", c).string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.log.find("error:"), std::string::npos);
}

TEST(Cli, RepeatRunsAreByteIdentical) {
  TempDir dir;
  auto c = t8_config();
  c["engine"] = {{"kind", "mc"}, {"permutations", 500}, {"seed", 11}};
  const auto cfg = dir.write("c.json", c).string();
  const auto a = run({"local", "--config", cfg, "--threads", "1"});
  const auto b = run({"local", "--config", cfg, "--threads", "4"});
  ASSERT_EQ(a.code, 0) << a.log;
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out.find("std_error"), std::string::npos);
}

TEST(Cli, PanelWrittenForAllTargets) {
  TempDir dir;
  const auto r = run({"local", "--config", dir.write("c.json", t8_config()).string(), "--out",
                      (dir.path() / "o").string()});
  ASSERT_EQ(r.code, 0) << r.log;
  EXPECT_TRUE(r.out.empty());
  const auto j = json::parse(slurp(dir.path() / "o" / "attributions.json"));
  EXPECT_EQ(j["attributions"].size(), 8u);
  const auto panel = slurp(dir.path() / "o" / "panel.csv");
  EXPECT_EQ(std::count(panel.begin(), panel.end(), '\n'), 9);
}

TEST(Cli, BinaryRunsEndToEnd) {
  TempDir dir;
  auto c = t8_config();
  c["targets"] = "1-2";
  const auto cfg = dir.write("c.json", c).string();
  const auto r = cohortshap::run_command(
      std::string(COHORTSHAP_CLI) + " local --config '" + cfg + "'", "");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["attributions"].size(), 2u);
  const auto bad = cohortshap::run_command(std::string(COHORTSHAP_CLI) + " local --bogus", "");
  EXPECT_EQ(bad.exit_code, 2);
}
