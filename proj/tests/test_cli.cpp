#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "cli_support.hpp"
#include "sparseho/csv.hpp"
#include "sparseho_cli.hpp"

using namespace sparseho;
namespace fs = std::filesystem;

namespace {

using Table = std::vector<std::vector<std::string>>;

Table read_table(const fs::path& path) {
  std::istringstream in(csv::read_file(path));
  Table rows;
  std::string line;
  while (std::getline(in, line)) rows.push_back(csv::split_line(line));
  return rows;
}

std::size_t column(const Table& t, const std::string& name) {
  for (std::size_t i = 0; i < t[0].size(); ++i) {
    if (t[0][i] == name) return i;
  }
  ADD_FAILURE() << "no column " << name;
  return 0;
}

int run_cli(std::vector<std::string> args, const fs::path& out) {
  args.push_back("--out");
  args.push_back(out.string());
  return sparseho::cli::run(args);
}

}  // namespace

TEST(Generate, WritesCsvDirectory) {
  const fs::path out = fixtures::scratch_dir("gen");
  ASSERT_EQ(run_cli({"generate", "--n", "100", "--p", "200", "--snr", "3", "--k", "5", "--seed", "0"}, out), 0);
  for (const char* f : {"X.csv", "y.csv", "meta.csv"}) EXPECT_TRUE(fs::exists(out / f)) << f;
  const Table x = read_table(out / "X.csv");
  EXPECT_EQ(x.size(), 101u);
  EXPECT_EQ(x[0].size(), 200u);
  EXPECT_EQ(x[0][0], "j0");
}

TEST(Generate, ToeplitzAndNonunique) {
  const fs::path a = fixtures::scratch_dir("gen_toep");
  ASSERT_EQ(run_cli({"generate", "--n", "30", "--p", "10", "--design", "toeplitz", "--rho", "0.9"}, a), 0);
  const Table meta = read_table(a / "meta.csv");
  EXPECT_EQ(meta[1][column(meta, "design")], "toeplitz");
  EXPECT_EQ(std::stod(meta[1][column(meta, "rho")]), 0.9);

  const fs::path b = fixtures::scratch_dir("gen_nonunique");
  ASSERT_EQ(run_cli({"generate", "--n", "30", "--p", "10", "--nonunique"}, b), 0);
  const Table m2 = read_table(b / "meta.csv");
  EXPECT_EQ(m2[1][column(m2, "design")], "nonunique");
}

TEST(Solve, SparseOutputs) {
  const fs::path out = fixtures::scratch_dir("solve");
  ASSERT_EQ(run_cli({"solve", "--n", "50", "--p", "80", "--jacobian", "implicit", "--tol", "1e-10"}, out), 0);
  const Table beta = read_table(out / "beta.csv");
  EXPECT_EQ(beta[0], (std::vector<std::string>{"index", "value"}));
  const Table summary = read_table(out / "solve.csv");
  EXPECT_EQ(std::to_string(beta.size() - 1), summary[1][column(summary, "s_hat")]);
  const Table jac = read_table(out / "jacobian.csv");
  EXPECT_EQ(jac[0], (std::vector<std::string>{"row", "col", "value"}));
  // Lasso Jacobian is zero off the support.
  EXPECT_EQ(jac.size(), beta.size());
  for (std::size_t i = 1; i < jac.size(); ++i) {
    EXPECT_EQ(jac[i][0], beta[i][0]);
    EXPECT_EQ(jac[i][1], "0");
  }
}

TEST(Solve, McpAndSvmlightDropsZeroColumns) {
  const fs::path dir = fixtures::scratch_dir("svm");
  {
    std::ofstream f(dir / "d.svm");
    f << "1.0 1:1.0 3:2.0\n-1.0 1:-0.5 3:1.0\n0.5 1:2.0 3:-1.0\n2.0 1:1.5 3:0.5\n";
  }
  const fs::path out = dir / "out";
  ASSERT_EQ(run_cli({"solve", "--svmlight", (dir / "d.svm").string(), "--model", "mcp", "--jacobian", "forward"}, out), 0);
  const Table summary = read_table(out / "solve.csv");
  EXPECT_EQ(summary[1][column(summary, "p")], "2");
}

TEST(Gradcheck, EnginesAndReference) {
  const fs::path out = fixtures::scratch_dir("gradcheck");
  ASSERT_EQ(run_cli({"gradcheck", "--n", "60", "--p", "80", "--iters", "5,20,100,400,1000"}, out), 0);
  const Table t = read_table(out / "gradcheck.csv");
  EXPECT_EQ(t[0], (std::vector<std::string>{"engine", "n_inner_iters", "wall_ms", "grad", "dist_to_implicit"}));
  EXPECT_EQ(t[1][0], "implicit");
  EXPECT_EQ(std::stod(t[1][column(t, "dist_to_implicit")]), 0.0);
  std::set<std::string> engines;
  std::vector<double> ifw;
  for (std::size_t i = 1; i < t.size(); ++i) {
    engines.insert(t[i][0]);
    if (t[i][0] == "implicit_forward") ifw.push_back(std::stod(t[i][column(t, "dist_to_implicit")]));
  }
  for (const char* e : {"forward", "implicit_forward", "backward", "implicit"}) EXPECT_TRUE(engines.count(e)) << e;
  // Past support identification the distance only shrinks.
  ASSERT_EQ(ifw.size(), 5u);
  for (std::size_t i = 3; i < ifw.size(); ++i) EXPECT_LE(ifw[i], ifw[i - 1] + 1e-12);
}

TEST(Gradcheck, WlassoHasOneColumnPerFeature) {
  const fs::path out = fixtures::scratch_dir("gradcheck_w");
  ASSERT_EQ(run_cli({"gradcheck", "--model", "wlasso", "--n", "30", "--p", "6", "--iters", "10"}, out), 0);
  const Table t = read_table(out / "gradcheck.csv");
  EXPECT_EQ(t[0].size(), 3u + 6u + 1u);
  EXPECT_EQ(t[0][3], "grad0");
}

TEST(Gradcheck, McpRejected) {
  const fs::path out = fixtures::scratch_dir("gradcheck_mcp");
  EXPECT_EQ(run_cli({"gradcheck", "--model", "mcp"}, out), 2);
}

TEST(Tune, LassoMethodsAndOptimum) {
  const fs::path out = fixtures::scratch_dir("tune");
  ASSERT_EQ(run_cli({"tune", "--n", "60", "--p", "80", "--budget", "8"}, out), 0);
  for (const char* m : {"grid", "random", "implicit", "implicit_forward", "forward"}) {
    EXPECT_TRUE(fs::exists(out / (std::string("trace_") + m + ".csv"))) << m;
  }
  const Table s = read_table(out / "summary.csv");
  EXPECT_EQ(s[0], (std::vector<std::string>{"method", "best_criterion", "optimum", "mse", "total_wall_ms", "seed",
                                            "status"}));
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < s.size(); ++i) best = std::min(best, std::stod(s[i][1]));
  for (std::size_t i = 1; i < s.size(); ++i) {
    EXPECT_EQ(std::stod(s[i][2]), best);
    EXPECT_EQ(s[i][6], "ok");
  }
}

TEST(Tune, WlassoWritesInitPhase) {
  const fs::path out = fixtures::scratch_dir("tune_w");
  ASSERT_EQ(run_cli({"tune", "--model", "wlasso", "--criterion", "sure", "--n", "40", "--p", "20", "--budget", "3",
                 "--methods", "implicit_forward"},
                out),
            0);
  EXPECT_TRUE(fs::exists(out / "init_implicit_forward.csv"));
  EXPECT_TRUE(fs::exists(out / "trace_implicit_forward.csv"));
}

TEST(Tune, ConfigErrors) {
  const fs::path out = fixtures::scratch_dir("tune_bad");
  EXPECT_EQ(run_cli({"tune", "--model", "wlasso", "--methods", "grid"}, out), 2);
  EXPECT_EQ(run_cli({"tune", "--criterion", "cv"}, out), 2);
  EXPECT_EQ(run_cli({"tune", "--methods", "newton"}, out), 2);
  EXPECT_EQ(run_cli({"tune", "--model", "mcp", "--methods", "implicit"}, out), 2);
}

TEST(Tune, FailedMethodGivesNonzeroExit) {
  const fs::path out = fixtures::scratch_dir("tune_fail");
  // A concavity below 1 makes the MCP prox undefined, so every inner solve throws.
  EXPECT_EQ(run_cli({"tune", "--model", "mcp", "--gamma", "-3", "--n", "30", "--p", "10", "--budget", "2"}, out), 1);
  const Table s = read_table(out / "summary.csv");
  EXPECT_EQ(s[1][column(s, "status")], "failed");
}

TEST(Determinism, RepeatedRunsMatchWithoutTimings) {
  const std::vector<std::string> args{"tune", "--n", "50", "--p", "60", "--budget", "5", "--seed", "7"};
  const fs::path a = fixtures::scratch_dir("det_a");
  const fs::path b = fixtures::scratch_dir("det_b");
  ASSERT_EQ(run_cli(args, a), 0);
  ASSERT_EQ(run_cli(args, b), 0);
  EXPECT_EQ(fixtures::snapshot(a), fixtures::snapshot(b));
}

TEST(Determinism, StripTimingColumns) {
  EXPECT_EQ(fixtures::strip_timing_columns("a,wall_ms,b\n1,2.5,3\n"), "a,b\n1,3\n");
  EXPECT_EQ(fixtures::strip_timing_columns("total_wall_ms,x\n9,1\n"), "x\n1\n");
}
