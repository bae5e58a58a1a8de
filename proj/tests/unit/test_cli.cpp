#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "cpodem/archive.hpp"
#include "cpodem/grid.hpp"
#include "service.hpp"
#include "test_support.hpp"

namespace cpodem {
namespace {

namespace fs = std::filesystem;
using testing::read_file;
using testing::TempDir;

struct RunResult {
  int code = 0;
  std::string out, err;
};

RunResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "cpodem");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// One small corpus and model shared by the tests below.
class CliWorkflow : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("cli");
    const auto doe = run({"doe", "--n", "10", "--seed", "2", "--restarts", "1", "--iters", "30", "--out",
                          path("design.tsv")});
    ASSERT_EQ(doe.code, 0) << doe.err;
    const auto sim = run({"simulate", "--designs", path("design.tsv"), "--out", path("corpus"), "--nx", "24",
                          "--nr", "16", "--steps", "8", "--seed", "3"});
    ASSERT_EQ(sim.code, 0) << sim.err;
    const auto tr = run({"train", "--corpus", path("corpus"), "--out", path("model"), "--variables", "temperature",
                         "density", "pressure", "--starts", "2"});
    ASSERT_EQ(tr.code, 0) << tr.err;
    train_out_ = new std::string(tr.out);
  }
  static void TearDownTestSuite() {
    delete dir_;
    delete train_out_;
  }
  static std::string path(const std::string& name) { return (dir_->path() / name).string(); }

  static TempDir* dir_;
  static std::string* train_out_;
};

TempDir* CliWorkflow::dir_ = nullptr;
std::string* CliWorkflow::train_out_ = nullptr;

TEST(Cli, DoeWritesANormalizedTable) {
  TempDir dir("cli-doe");
  const auto r = run({"doe", "--n", "30", "--p", "5", "--seed", "1", "--out", (dir / "d.tsv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("wrote 30 points"), std::string::npos);
  std::istringstream in(read_file(dir / "d.tsv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("# maxpro n=30 p=5", 0), 0u) << line;
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    double v;
    int cols = 0;
    while (ls >> v) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      ++cols;
    }
    EXPECT_EQ(cols, 5);
    ++rows;
  }
  EXPECT_EQ(rows, 30);
  // Same seed, same file.
  ASSERT_EQ(run({"doe", "--n", "30", "--p", "5", "--seed", "1", "--out", (dir / "e.tsv").string()}).code, 0);
  EXPECT_EQ(read_file(dir / "d.tsv"), read_file(dir / "e.tsv"));
}

TEST(Cli, UsageErrorsExitOne) {
  const auto unknown = run({"doe", "--bogus", "3", "--out", "x.tsv"});
  EXPECT_EQ(unknown.code, 1);
  EXPECT_NE(unknown.err.find("--bogus"), std::string::npos);
  EXPECT_NE(unknown.err.find("Usage"), std::string::npos);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"doe"}).code, 1);  // --out is required
  EXPECT_EQ(run({"classify", "--design", "60,3.5,45,1.25,2.5"}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, RuntimeErrorsExitTwo) {
  TempDir dir("cli-rt");
  const auto r = run({"predict", "--model", (dir / "missing").string(), "--design", "60,3.5,45,1.25,2.5"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
  EXPECT_EQ(run({"simulate", "--out", (dir / "c").string()}).code, 2);
}

TEST(Cli, OracleSensitivityTable) {
  const auto r = run({"sensitivity", "--response", "angle", "--n", "1024", "--no-pairs"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("theta"), std::string::npos);
  EXPECT_EQ(run({"sensitivity", "--response", "speed"}).code, 1);
}

TEST_F(CliWorkflow, TrainIsDeterministic) {
  EXPECT_NE(train_out_->find("model "), std::string::npos);
  const auto again = run({"train", "--corpus", path("corpus"), "--out", path("model2"), "--variables", "temperature",
                          "density", "pressure", "--starts", "2"});
  ASSERT_EQ(again.code, 0) << again.err;
  EXPECT_EQ(read_file(fs::path(path("model")) / "manifest.json"), read_file(fs::path(path("model2")) / "manifest.json"));
  EXPECT_EQ(model_hash(path("model")), model_hash(path("model2")));
  EXPECT_NE(train_out_->find(model_hash(path("model"))), std::string::npos);
}

TEST_F(CliWorkflow, PredictMatchesTheServiceBody) {
  const std::string design = "55,3.2,50,1.1,2.8";
  const auto r = run({"predict", "--model", path("model"), "--design", design, "--out", path("pred")});
  ASSERT_EQ(r.code, 0) << r.err;
  auto svc = service::ModelService::from_archive(path("model"));
  const auto http = svc->handle("POST", "/api/predict", R"({"design":[55,3.2,50,1.1,2.8],"units":"physical"})");
  ASSERT_EQ(http.status, 200) << http.body;
  EXPECT_EQ(r.out, http.body + "\n");
  EXPECT_EQ(read_file(fs::path(path("pred")) / "prediction.json"), r.out);
  const auto stored = read_case(path("pred"));
  EXPECT_EQ(stored.series.variables.size(), 3u);
  EXPECT_TRUE(fs::exists(fs::path(path("pred")) / "variance_temperature.bin"));

  // Normalized input names the same physical design.
  const auto n = run({"predict", "--model", path("model"), "--design", "0.5,0.5,0.5,0.5,0.5", "--normalized"});
  ASSERT_EQ(n.code, 0) << n.err;
  const auto j = nlohmann::json::parse(n.out);
  EXPECT_EQ(j["design"], nlohmann::json::parse("[60.0,3.5,60.0,1.25,2.5]"));
}

TEST_F(CliWorkflow, OutOfBoundsDesignReportsTheBounds) {
  const auto r = run({"predict", "--model", path("model"), "--design", "120,3.5,45,1.25,2.5"});
  EXPECT_EQ(r.code, 2);
  const auto brace = r.err.find('{');
  ASSERT_NE(brace, std::string::npos) << r.err;
  const auto report = nlohmann::json::parse(r.err.substr(brace, r.err.find('}') - brace + 1));
  EXPECT_EQ(report, nlohmann::json::parse(R"({"param":"L","lo":20,"hi":100})"));
}

TEST_F(CliWorkflow, ClassifyWithTheModelTree) {
  const auto r = run({"classify", "--model", path("model"), "--design", "60,3.5,45,1.25,2.5", "--rules"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.find("jet") != std::string::npos || r.out.find("swirl") != std::string::npos);
  EXPECT_NE(r.out.find(" -> "), std::string::npos);
}

TEST_F(CliWorkflow, ReportWritesItsTables) {
  const auto truth = list_cases(path("corpus")).at(4);
  const auto r = run({"report", "--model", path("model"), "--truth", truth.string(), "--out", path("report")});
  ASSERT_EQ(r.code, 0) << r.err;
  const fs::path out(path("report"));
  for (const char* f : {"rmsre.tsv", "metrics.tsv", "psd_probe1.tsv", "psd_probe8.tsv", "field_temperature.tsv",
                        "field_pressure.tsv"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const auto rm = read_file(out / "rmsre.tsv");
  EXPECT_EQ(rm.rfind("variable\toverall\tupstream\tdownstream\n", 0), 0u);
  EXPECT_NE(rm.find("\ntemperature\t"), std::string::npos);
  EXPECT_NE(read_file(out / "metrics.tsv").find("angle_deg\t"), std::string::npos);
  EXPECT_EQ(read_file(out / "psd_probe1.tsv").rfind("# probe x=", 0), 0u);
}

}  // namespace
}  // namespace cpodem
