#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <mineseek/io.hpp>

namespace fs = std::filesystem;
using namespace mineseek;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("mineseek_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(const std::string& args, std::string* out = nullptr) const {
    const std::string log = path("stdout.txt");
    const std::string cmd = std::string("\"") + MINESEEK_CLI + "\" " + args + " > \"" + log + "\" 2> \"" +
                            path("stderr.txt") + "\"";
    const int status = std::system(cmd.c_str());
    if (out) *out = slurp(log);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, GenerateIsDeterministic) {
  std::string a, b;
  ASSERT_EQ(run("generate --N 3 --nd 2 --nc 2 --seed 11 --out " + path("a.json"), &a), 0);
  ASSERT_EQ(run("generate --N 3 --nd 2 --nc 2 --seed 11 --out " + path("b.json"), &b), 0);
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
  EXPECT_EQ(a.substr(0, 71), b.substr(0, 71));
  EXPECT_EQ(a.rfind("sha256 ", 0), 0u);
  const auto g = game_from_json(read_json_file(path("a.json")));
  EXPECT_EQ(g.agents(), 3u);
  ASSERT_TRUE(g.generation.has_value());
  EXPECT_EQ(g.generation->seed, 11u);
}

TEST_F(Cli, GenerateRejectsBadDimensions) {
  EXPECT_EQ(run("generate --N -1 --out " + path("x.json")), 2);
  EXPECT_EQ(run("generate --N 2 --nd 0 --nc 0 --out " + path("x.json")), 2);
  EXPECT_EQ(run("generate"), 2);
  EXPECT_EQ(run("no-such-command"), 2);
}

TEST_F(Cli, RunWritesTracesAndVerifies) {
  ASSERT_EQ(run("generate --N 3 --nd 2 --nc 2 --seed 5 --out " + path("g.json")), 0);
  ASSERT_EQ(run("run --instance " + path("g.json") + " --alg 1 --out " + path("out")), 0);
  const auto summary = read_json_file(path("out/summary.json"));
  EXPECT_EQ(summary["aggregate"]["verified"], 1);
  const std::string trace = slurp(path("out/trace_rep0.csv"));
  EXPECT_EQ(trace.rfind("k,tau,d_rho,potential,dist_to_ref,agent_id,rho_i,cert_gap_i,kept_i,br_time_s\n", 0), 0u);
  EXPECT_EQ(run("verify --instance " + path("g.json") + " --profile " + path("out/profile_rep0.json") +
                " --eps 1e-6"),
            0);

  // a second run reproduces the same bytes
  ASSERT_EQ(run("run --instance " + path("g.json") + " --alg 1 --out " + path("out2")), 0);
  EXPECT_EQ(slurp(path("out2/trace_rep0.csv")), trace);
}

TEST_F(Cli, ManifestBatchOverSeeds) {
  {
    std::ofstream m(path("manifest.json"));
    m << R"({"params": {"N": 2, "n_d": 2, "n_c": 1}, "seeds": [3, 4, 9], "algorithm": 2, "out": "res"})";
  }
  ASSERT_EQ(run("run --manifest " + path("manifest.json")), 0);
  const auto summary = read_json_file(path("res/summary.json"));
  EXPECT_EQ(summary["runs"].size(), 3u);
  EXPECT_EQ(summary["algorithm"], 2);
  for (const char* tag : {"seed3", "seed4", "seed9"})
    EXPECT_TRUE(fs::exists(path(std::string("res/trace_") + tag + ".csv"))) << tag;
}

TEST_F(Cli, ManifestRejectsDuplicateSeedsAndUnknownKeys) {
  {
    std::ofstream m(path("dup.json"));
    m << R"({"params": {"N": 2, "n_d": 1, "n_c": 1}, "seeds": [3, 3]})";
  }
  EXPECT_EQ(run("run --manifest " + path("dup.json") + " --out " + path("o")), 2);
  {
    std::ofstream m(path("typo.json"));
    m << R"({"sedes": [1]})";
  }
  EXPECT_EQ(run("run --manifest " + path("typo.json") + " --out " + path("o")), 2);
}

TEST_F(Cli, VerifyExitCodes) {
  ASSERT_EQ(run("generate --N 2 --nd 2 --nc 2 --seed 8 --out " + path("g.json")), 0);
  const auto g = game_from_json(read_json_file(path("g.json")));
  StrategyProfile zero;
  for (const auto& s : g.sets) zero.push_back(Eigen::VectorXd::Zero(s.size()));
  write_text_file(path("zero.json"), dump_json(profile_to_json(zero)));
  EXPECT_EQ(run("verify --instance " + path("g.json") + " --profile " + path("zero.json") + " --eps 0"), 1);
  EXPECT_EQ(run("verify --instance " + path("g.json") + " --profile " + path("zero.json") + " --eps 1e12"), 0);

  StrategyProfile bad = zero;
  bad[0][0] = 0.5;
  write_text_file(path("bad.json"), dump_json(profile_to_json(bad)));
  std::string out;
  EXPECT_EQ(run("verify --instance " + path("g.json") + " --profile " + path("bad.json") + " --eps 1e12"), 5);
  EXPECT_NE(slurp(path("stderr.txt")).find("agent 0"), std::string::npos);
}

TEST_F(Cli, AlgorithmTwoRefusesNonPotentialGame) {
  ASSERT_EQ(run("generate --N 2 --nd 1 --nc 1 --seed 2 --out " + path("g.json")), 0);
  auto j = read_json_file(path("g.json"));
  auto& block = j["C"][0][1]["data"];
  block[0] = block[0].get<double>() + 1.0;
  write_text_file(path("asym.json"), dump_json(j));
  EXPECT_EQ(run("run --instance " + path("asym.json") + " --alg 2 --out " + path("o")), 4);
  EXPECT_FALSE(fs::exists(path("o/summary.json")));
  EXPECT_NE(run("run --instance " + path("asym.json") + " --alg 2 --force --max-iter 5 --out " + path("o")), 4);
}

TEST_F(Cli, NonConvergedBatchExitsThree) {
  ASSERT_EQ(run("generate --N 3 --nd 2 --nc 2 --seed 5 --out " + path("g.json")), 0);
  EXPECT_EQ(run("run --instance " + path("g.json") + " --alg 1 --max-iter 1 --literal-stop --out " + path("o")), 3);
  const auto summary = read_json_file(path("o/summary.json"));
  EXPECT_EQ(summary["runs"][0]["reason"], "max_iterations");
}
