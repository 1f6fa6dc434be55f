#include <gtest/gtest.h>

#include <cmath>

#include "sparseho/error.hpp"
#include "test_support.hpp"

using namespace sparseho;

namespace {

Design eye2() { return Design(Matrix::Identity(2, 2)); }
Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST(SoftThreshold, Examples) {
  EXPECT_EQ(soft_threshold(2.0, 1.0), 1.0);
  EXPECT_EQ(soft_threshold(-0.5, 1.0), 0.0);
  EXPECT_EQ(soft_threshold(-3.0, 1.0), -2.0);
}

TEST(SoftThreshold, MagnitudeAndSign) {
  for (double t = -4.0; t <= 4.0; t += 0.37) {
    for (double tau : {0.0, 0.5, 2.0}) {
      const double r = soft_threshold(t, tau);
      EXPECT_DOUBLE_EQ(std::abs(r), std::max(std::abs(t) - tau, 0.0));
      if (r != 0.0) EXPECT_EQ(std::signbit(r), std::signbit(t));
    }
  }
}

TEST(ProxMcp, Examples) {
  EXPECT_EQ(prox_mcp(5.0, 1.0, 2.0), 5.0);
  EXPECT_EQ(prox_mcp(0.5, 1.0, 2.0), 0.0);
  EXPECT_NEAR(prox_mcp(1.5, 1.0, 2.0), 1.0, 1e-12);
  const double oracle =
      fixtures::grid_minimize(1.5, [](double x) { return fixtures::mcp_oracle_penalty(x, 1.0, 2.0); }, -10, 10, 1e-4);
  EXPECT_NEAR(prox_mcp(1.5, 1.0, 2.0), oracle, 1e-6);
}

TEST(ProxMcp, RejectsConcaveCurvature) {
  try {
    prox_mcp(1.0, 1.0, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("nonconvexity exceeds curvature"), std::string::npos);
  }
}

TEST(ProxMcp, ContinuousInT) {
  for (double gamma : {1.5, 3.0}) {
    const double lam = 0.7;
    for (double edge : {lam, lam * gamma, -lam, -lam * gamma}) {
      EXPECT_NEAR(prox_mcp(edge - 1e-9, lam, gamma), prox_mcp(edge + 1e-9, lam, gamma), 1e-7);
    }
  }
}

TEST(McpPenalty, SaturatedBranch) { EXPECT_DOUBLE_EQ(mcp_penalty(3.0, 1.0, 2.0), 1.0); }

TEST(LambdaMax, Examples) {
  EXPECT_DOUBLE_EQ(lambda_max(eye2(), vec({2, 4})), std::log(2.0));
  EXPECT_THROW(lambda_max(eye2(), Vector::Zero(2)), Error);

  const Dataset d = fixtures::gaussian_instance(20, 30, 0, 3, 3.0);
  const double lmax = lambda_max(d.X, d.y);
  EXPECT_EQ(solve_lasso_bcd(d.X, d.y, HyperParams::lasso(lmax), fixtures::tight()).s_hat(), 0);
  EXPECT_GE(solve_lasso_bcd(d.X, d.y, HyperParams::lasso(lmax - 0.01), fixtures::tight()).s_hat(), 1);
}

TEST(LassoBcd, ClosedForms) {
  const Design one(Matrix::Constant(1, 1, 1.0));
  const SolverState s1 = solve_lasso_bcd(one, vec({2}), HyperParams::lasso(0.0));
  EXPECT_NEAR(s1.beta[0], 1.0, 1e-12);
  EXPECT_LE(kkt_violation(one, vec({2}), s1, HyperParams::lasso(0.0)), 1e-12);

  const SolverState s2 = solve_lasso_bcd(eye2(), vec({2, 4}), HyperParams::lasso(0.0));
  EXPECT_NEAR(s2.beta[0], 0.0, 1e-12);
  EXPECT_NEAR(s2.beta[1], 2.0, 1e-12);
}

TEST(LassoBcd, RandomInstanceKkt) {
  const Dataset d = fixtures::gaussian_instance(100, 250, 0);
  const double lam = lambda_max(d.X, d.y) - std::log(10.0);
  const HyperParams hp = HyperParams::lasso(lam);
  const SolverState st = solve_lasso_bcd(d.X, d.y, hp, fixtures::tight());
  EXPECT_TRUE(st.converged);
  EXPECT_LE(kkt_violation(d.X, d.y, st, hp), 1e-6 * 100 * std::exp(lam));
}

TEST(LassoBcd, KktDetectsPerturbation) {
  const Dataset d = fixtures::gaussian_instance(60, 80, 2);
  const HyperParams hp = HyperParams::lasso(lambda_max(d.X, d.y) - 1.0);
  SolverState st = solve_lasso_bcd(d.X, d.y, hp, fixtures::tight());
  ASSERT_GE(st.s_hat(), 1);
  st.beta[st.support[0]] += 1e-3;
  st.residual = d.y - d.X.multiply(st.beta);
  EXPECT_GT(kkt_violation(d.X, d.y, st, hp), 0.0);
  const HyperParams big = HyperParams::lasso(lambda_max(d.X, d.y) + 0.1);
  const SolverState zero = solve_lasso_bcd(d.X, d.y, big);
  EXPECT_EQ(kkt_violation(d.X, d.y, zero, big), 0.0);
}

TEST(LassoBcd, ResidualAndMonotoneTrace) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Dataset d = fixtures::gaussian_instance(50, 120, seed);
    const HyperParams hp = HyperParams::lasso(lambda_max(d.X, d.y) - 2.0);
    for (InnerSolver solver : {InnerSolver::bcd, InnerSolver::ista}) {
      const SolverState st = solve(solver, d.X, d.y, hp, fixtures::tight(1e-10, 5000));
      const Vector r = d.y - d.X.multiply(st.beta);
      EXPECT_LE((r - st.residual).cwiseAbs().maxCoeff(), 1e-9 * (1 + d.y.cwiseAbs().maxCoeff()));
      for (std::size_t k = 1; k < st.objective_trace.size(); ++k) {
        EXPECT_LE(st.objective_trace[k], st.objective_trace[k - 1] + 1e-15);
      }
      EXPECT_EQ(st.support, support_of(st.beta));
    }
  }
}

TEST(LassoBcd, WarmRestartStopsImmediately) {
  const Dataset d = fixtures::gaussian_instance(80, 100, 4);
  const HyperParams hp = HyperParams::lasso(lambda_max(d.X, d.y) - 1.5);
  const SolverState st = solve_lasso_bcd(d.X, d.y, hp, fixtures::converged());
  const SolverState again = solve_lasso_bcd(d.X, d.y, hp, fixtures::tight(1e-8), &st);
  EXPECT_LE(again.epochs, 1);
  EXPECT_LE((again.beta - st.beta).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LassoBcd, SignIdentification) {
  const Dataset d = fixtures::gaussian_instance(100, 200, 6);
  const HyperParams hp = HyperParams::lasso(lambda_max(d.X, d.y) - std::log(10.0));
  std::vector<Vector> signs;
  SolverOptions opts = fixtures::tight();
  opts.on_epoch = [&](int, const Vector& b) { signs.push_back(b.unaryExpr([](double v) { return (v > 0) - (v < 0) + 0.0; })); };
  const SolverState st = solve_lasso_bcd(d.X, d.y, hp, opts);
  const Vector final_sign = signs.back();
  std::size_t k0 = signs.size();
  while (k0 > 0 && signs[k0 - 1] == final_sign) --k0;
  EXPECT_LT(k0, signs.size() - 1) << "signs should settle before the last epoch";
  EXPECT_EQ(final_sign, st.beta.unaryExpr([](double v) { return (v > 0) - (v < 0) + 0.0; }));
}

TEST(LassoIsta, AgreesWithBcd) {
  const Design one(Matrix::Constant(1, 1, 1.0));
  EXPECT_NEAR(solve_lasso_ista(one, vec({2}), HyperParams::lasso(0.0), fixtures::tight()).beta[0], 1.0, 1e-8);
  const Vector b2 = solve_lasso_ista(eye2(), vec({2, 4}), HyperParams::lasso(0.0), fixtures::tight()).beta;
  EXPECT_NEAR(b2[0], 0.0, 1e-8);
  EXPECT_NEAR(b2[1], 2.0, 1e-8);

  const Dataset d = fixtures::gaussian_instance(100, 250, 0);
  const HyperParams hp = HyperParams::lasso(lambda_max(d.X, d.y) - std::log(10.0));
  const SolverState bcd = solve_lasso_bcd(d.X, d.y, hp, fixtures::tight(1e-14));
  SolverOptions ista_opts = fixtures::tight(1e-14, 200000);
  ista_opts.beta_tol = 1e-12;
  const SolverState ista = solve_lasso_ista(d.X, d.y, hp, ista_opts);
  EXPECT_LE((bcd.beta - ista.beta).cwiseAbs().maxCoeff(), 1e-6);
  const double alpha = spectral_norm_sq(d.X);
  EXPECT_LE(ista_fixed_point_residue(d.X, d.y, ista.beta, hp, alpha), 1e-8);
}

TEST(LassoIsta, ZeroAtLambdaMaxAfterOneIteration) {
  const Dataset d = fixtures::gaussian_instance(30, 40, 1);
  const SolverState st = solve_lasso_ista(d.X, d.y, HyperParams::lasso(lambda_max(d.X, d.y)));
  EXPECT_EQ(st.epochs, 1);
  EXPECT_EQ(st.s_hat(), 0);
}

TEST(SpectralNorm, MatchesSvd) {
  const Dataset d = fixtures::gaussian_instance(40, 25, 3);
  const double sv = Eigen::JacobiSVD<Matrix>(d.X.dense()).singularValues()[0];
  EXPECT_NEAR(spectral_norm_sq(d.X), sv * sv, 1e-8 * sv * sv);
}

TEST(WlassoBcd, EqualWeightsReduceToLasso) {
  const Dataset d = fixtures::gaussian_instance(60, 90, 5);
  const double lam = lambda_max(d.X, d.y) - 1.2;
  const SolverState a = solve_lasso_bcd(d.X, d.y, HyperParams::lasso(lam), fixtures::tight());
  const SolverState b = solve_wlasso_bcd(d.X, d.y, HyperParams::wlasso(Vector::Constant(90, lam)), fixtures::tight());
  EXPECT_LE((a.beta - b.beta).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(WlassoBcd, HugeWeightsKillCoordinates) {
  const Dataset d = fixtures::gaussian_instance(60, 90, 5);
  Vector lam = Vector::Constant(90, lambda_max(d.X, d.y) - 2.0);
  for (Index j = 0; j < 90; j += 3) lam[j] = 20.0;
  const SolverState st = solve_wlasso_bcd(d.X, d.y, HyperParams::wlasso(lam), fixtures::tight());
  for (Index j = 0; j < 90; j += 3) EXPECT_EQ(st.beta[j], 0.0);
}

TEST(WlassoBcd, CoordinateKkt) {
  const Dataset d = fixtures::gaussian_instance(80, 100, 8);
  Vector lam(100);
  const double lmax = lambda_max(d.X, d.y);
  for (Index j = 0; j < 100; ++j) lam[j] = lmax - 1.0 - 0.02 * static_cast<double>(j % 50);
  const HyperParams hp = HyperParams::wlasso(lam);
  const SolverState st = solve_wlasso_bcd(d.X, d.y, hp, fixtures::tight(1e-14));
  const Vector c = d.X.multiply_transpose(d.y - d.X.multiply(st.beta)) / 80.0;
  for (Index j = 0; j < 100; ++j) {
    if (st.beta[j] != 0.0) {
      EXPECT_NEAR(std::abs(c[j]), std::exp(lam[j]), 1e-6);
    } else {
      EXPECT_LE(std::abs(c[j]), std::exp(lam[j]) + 1e-6);
    }
  }
}

TEST(McpCd, ClosedForms) {
  const Design one(Matrix::Constant(1, 1, 1.0));
  const HyperParams hp = HyperParams::mcp(0.0, std::log(2.0));
  const SolverState st = solve_mcp_cd(one, vec({2}), hp, fixtures::tight());
  // Brute-force 1-d objective 0.5 (2 - b)^2 + p_{1,2}(b).
  const double oracle = fixtures::grid_minimize(2.0, [](double b) { return fixtures::mcp_oracle_penalty(b, 1.0, 2.0); });
  EXPECT_NEAR(st.beta[0], oracle, 1e-6);
  EXPECT_NEAR(st.beta[0], 2.0, 1e-12);

  const Dataset d = fixtures::gaussian_instance(40, 60, 2);
  EXPECT_EQ(solve_mcp_cd(d.X, d.y, HyperParams::mcp(20.0, std::log(3.0))).s_hat(), 0);
}

TEST(McpCd, LargeGammaRecoversLasso) {
  const Dataset d = fixtures::gaussian_instance(100, 150, 3);
  const double lam = lambda_max(d.X, d.y) - std::log(10.0);
  const SolverState lasso = solve_lasso_bcd(d.X, d.y, HyperParams::lasso(lam), fixtures::tight());
  const SolverState mcp = solve_mcp_cd(d.X, d.y, HyperParams::mcp(lam, std::log(1e6)), fixtures::tight());
  EXPECT_LE((lasso.beta - mcp.beta).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(McpCd, CurvatureViolationNamesColumn) {
  Matrix x = Matrix::Identity(4, 3);
  x(0, 0) = 0.1;
  try {
    solve_mcp_cd(Design(x), vec({1, 1, 1, 1}), HyperParams::mcp(-2.0, std::log(2.0)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("column 0"), std::string::npos) << e.what();
  }
}

TEST(McpCd, CoordinateDescentIsMonotone) {
  const Dataset d = fixtures::gaussian_instance(60, 40, 9);
  const HyperParams hp = HyperParams::mcp(lambda_max(d.X, d.y) - 1.5, std::log(3.0));
  const SolverState st = solve_mcp_cd(d.X, d.y, hp, fixtures::tight());
  for (std::size_t k = 1; k < st.objective_trace.size(); ++k) {
    EXPECT_LE(st.objective_trace[k], st.objective_trace[k - 1] + 1e-14);
  }
  EXPECT_LE(cd_fixed_point_residue(d.X, d.y, st.beta, hp), 1e-6);
  EXPECT_THROW(kkt_violation(d.X, d.y, st, hp), Error);
}

TEST(Objective, Examples) {
  EXPECT_DOUBLE_EQ(objective_value(eye2(), vec({2, 4}), Vector::Zero(2), HyperParams::lasso(0.0)), 20.0 / 4.0);
  EXPECT_DOUBLE_EQ(objective_value(eye2(), vec({2, 4}), vec({1, 0}), HyperParams::lasso(0.0)), 5.25);
}

TEST(Validation, RejectsZeroColumnsAndBadHyperparams) {
  Matrix x = Matrix::Identity(3, 3);
  x(2, 2) = 0.0;
  EXPECT_THROW(solve_lasso_bcd(Design(x), vec({1, 2, 3}), HyperParams::lasso(0.0)), Error);
  EXPECT_THROW(solve_lasso_bcd(eye2(), vec({1, 2}), HyperParams::lasso(NAN)), Error);
  EXPECT_THROW(solve_wlasso_bcd(eye2(), vec({1, 2}), HyperParams::wlasso(Vector::Zero(3))), Error);
}
