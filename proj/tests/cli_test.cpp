#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "tokenwalk/harness.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = TOKENWALK_CLI;
const std::string kData = TOKENWALK_TEST_DATA;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("tokenwalk_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(const std::string& args) {
    const std::string cmd = kCli + " " + args + " > " + path("stdout.txt") + " 2> " + path("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(path(name));
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

  fs::path dir_;
};

const std::string kQuadFlags = "--graph " + kData + "/synthetic62.edges --objective quad --features 2 --data-seed 3";

}  // namespace

TEST_F(Cli, GraphInfo) {
  ASSERT_EQ(run("graph-info " + kData + "/synthetic62.edges"), 0);
  const auto out = read("stdout.txt");
  EXPECT_NE(out.find("nodes 62\n"), std::string::npos);
  EXPECT_NE(out.find("edges 159\n"), std::string::npos);
  EXPECT_NE(out.find("connected true\n"), std::string::npos);
  ASSERT_EQ(run("graph info " + kData + "/synthetic62.edges"), 0);
  EXPECT_EQ(read("stdout.txt"), out);
}

TEST_F(Cli, GraphInfoReportsComponents) {
  write("two.edges", "0 1\n1 2\n5 6\n");
  ASSERT_EQ(run("graph-info " + path("two.edges")), 0);
  const auto out = read("stdout.txt");
  EXPECT_NE(out.find("connected false\n"), std::string::npos);
  EXPECT_NE(out.find("largest_component_nodes 3\n"), std::string::npos);
}

TEST_F(Cli, RunIsByteIdenticalAcrossInvocations) {
  const std::string args = "run " + kQuadFlags + " --alpha 2 --steps 2000 --replicas 8 --seed 5 --record 5 --case 1";
  ASSERT_EQ(run(args + " --threads 1 --out " + path("a.csv") + " --raw " + path("raw.csv")), 0);
  ASSERT_EQ(run(args + " --threads 3 --out " + path("b.csv")), 0);
  const auto a = read("a.csv");
  EXPECT_EQ(a, read("b.csv"));
  EXPECT_EQ(a.rfind("# ", 0), 0u);
  EXPECT_NE(a.find("config_hash="), std::string::npos);
  EXPECT_NE(a.find("\nn,mse_mean,mse_stderr,replicas\n"), std::string::npos);

  std::istringstream in(a);
  const auto s = tokenwalk::read_mse_csv(in);
  EXPECT_EQ(s.indices.back(), 2000u);
  EXPECT_EQ(s.replicas, 8u);
  EXPECT_NE(read("raw.csv").find("replica,seed,n,sq_error\n"), std::string::npos);
}

TEST_F(Cli, RunWithConfigFile) {
  write("run.toml", "[run]\nalpha = 1\nsteps = 500\nreplicas = 4\nrecord = 3\n");
  ASSERT_EQ(run("run " + kQuadFlags + " --config " + path("run.toml") + " --out " + path("c.csv")), 0);
  std::istringstream in(read("c.csv"));
  const auto s = tokenwalk::read_mse_csv(in);
  EXPECT_EQ(s.indices.back(), 500u);
  EXPECT_EQ(s.replicas, 4u);
  EXPECT_NE(read("c.csv").find("alpha=1"), std::string::npos);
  ASSERT_EQ(run("run " + kQuadFlags + " --config " + path("run.toml") + " --steps 300 --out " + path("d.csv")), 0);
  std::istringstream d(read("d.csv"));
  EXPECT_EQ(tokenwalk::read_mse_csv(d).indices.back(), 300u);
}

TEST_F(Cli, Theory) {
  ASSERT_EQ(run("theory " + kQuadFlags + " --alphas 0,1,5,20 --case 1 --out " + path("t.csv") + " --dump-dir " +
                dir_.string()),
            0);
  std::ifstream in(path("t.csv"));
  const auto t = tokenwalk::read_csv(in);
  ASSERT_EQ(t.rows.size(), 4u);
  EXPECT_EQ(t.columns, (std::vector<std::string>{"alpha", "case", "trace_v_x", "trace_v_theta", "lambda_min_gap"}));
  const auto cv = t.column("trace_v_theta"), cg = t.column("lambda_min_gap");
  for (std::size_t r = 1; r < 4; ++r) {
    EXPECT_LT(t.rows[r][cv], t.rows[r - 1][cv]);
    EXPECT_GE(t.rows[r][cg], -1e-12);
  }
  EXPECT_EQ(t.rows[0][t.column("case")], 1.0);
  EXPECT_TRUE(fs::exists(path("v_theta_alpha5.csv")));
  EXPECT_TRUE(fs::exists(path("v_x_alpha20.csv")));
}

TEST_F(Cli, FitRoundTrip) {
  std::ostringstream csv;
  csv << "alpha,value\n";
  for (double a : {0.0, 1.0, 2.0, 5.0, 10.0, 20.0}) csv << a << ',' << tokenwalk::format_double(2.0 / ((a + 1.0) * (a + 1.0)) + 0.5) << '\n';
  write("pts.csv", csv.str());
  ASSERT_EQ(run("fit --in " + path("pts.csv") + " --out " + path("fit.csv")), 0);
  std::ifstream in(path("fit.csv"));
  const auto t = tokenwalk::read_csv(in);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_NEAR(t.rows[0][t.column("c1")], 2.0, 1e-4);
  EXPECT_NEAR(t.rows[0][t.column("c2")], 1.0, 1e-4);
  EXPECT_NEAR(t.rows[0][t.column("c3")], 0.5, 1e-6);
  EXPECT_NE(read("stderr.txt").find("R^2"), std::string::npos);
}

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run("run --out " + path("x.csv")), 1);
  EXPECT_EQ(run("run " + kQuadFlags + " --out " + path("x.csv") + " --bogus 3"), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("run " + kQuadFlags + " --variant adam --out " + path("x.csv")), 1);
  EXPECT_EQ(run("graph-info /nonexistent/file.edges"), 1);
}

TEST_F(Cli, ParseErrorsExitOne) {
  write("bad.edges", "0 1\n1 two\n");
  EXPECT_EQ(run("graph-info " + path("bad.edges")), 1);
  EXPECT_NE(read("stderr.txt").find("line 2"), std::string::npos);
  write("bad.libsvm", "1 1:0.5\n3 1:1\n");
  EXPECT_EQ(run("theory --graph " + kData + "/synthetic62.edges --dataset " + path("bad.libsvm") + " --out " +
                path("t.csv")),
            1);
}

TEST_F(Cli, PeriodicChainExitsTwo) {
  write("c4.edges", "0 1\n1 2\n2 3\n3 0\n");
  EXPECT_EQ(run("theory --graph " + path("c4.edges") + " --objective quad --out " + path("t.csv")), 2);
  EXPECT_NE(read("stderr.txt").find("periodic"), std::string::npos);
  EXPECT_EQ(run("theory --graph " + path("c4.edges") + " --objective quad --lazy 0.5 --out " + path("t.csv")), 0);
}

TEST_F(Cli, VerifyQuick) {
  EXPECT_EQ(run("verify --quick --only 1,2,3"), 0);
  const auto out = read("stdout.txt");
  EXPECT_NE(out.find("PASS criterion 1:"), std::string::npos);
  EXPECT_NE(out.find("PASS criterion 3:"), std::string::npos);
  EXPECT_EQ(out.find("FAIL"), std::string::npos);
}
