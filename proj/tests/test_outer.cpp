#include <gtest/gtest.h>

#include <cmath>

#include "sparseho/error.hpp"
#include "sparseho/outer.hpp"
#include "test_support.hpp"

using namespace sparseho;

namespace {

const double kLn10 = std::log(10.0);

OuterObjective quadratic(double c, int* calls = nullptr) {
  return [c, calls](const HyperParams& hp, bool need_grad) {
    if (calls) ++*calls;
    OuterEval ev;
    const Vector d = hp.lam.array() - c;
    ev.value = d.squaredNorm();
    if (need_grad) ev.grad = 2.0 * d;
    ev.beta = hp.lam;
    return ev;
  };
}

HeldOutObjective one_d_pipeline(Engine engine) {
  EngineOptions opts;
  opts.solver_opts.tol = 1e-12;
  return HeldOutObjective(Design(Matrix::Constant(1, 1, 1.0)), Vector::Constant(1, 2.0),
                          Design(Matrix::Constant(1, 1, 1.0)), Vector::Constant(1, 1.0), engine, opts);
}

}  // namespace

TEST(Grid, PointsAndCount) {
  const auto grid = lasso_grid(1.3, 100);
  ASSERT_EQ(grid.size(), 100u);
  EXPECT_DOUBLE_EQ(grid.front(), 1.3);
  EXPECT_NEAR(grid.back(), 1.3 - 4 * kLn10, 1e-12);
  for (std::size_t i = 1; i < grid.size(); ++i) EXPECT_NEAR(grid[i - 1] - grid[i], 4 * kLn10 / 99, 1e-12);

  int calls = 0;
  const TuneTrace t = grid_search(quadratic(0.0, &calls), 1.3, 100);
  EXPECT_EQ(calls, 100);
  EXPECT_EQ(t.budget_used, 100);
  EXPECT_EQ(t.iterates.size(), 100u);
  EXPECT_THROW(grid_search(quadratic(0.0), 1.3, 1), Error);
}

TEST(Grid, ConstantCriterionPicksFirst) {
  const OuterObjective flat = [](const HyperParams& hp, bool) { return OuterEval{1.0, {}, hp.lam}; };
  const TuneTrace t = grid_search(flat, 0.5, 10);
  EXPECT_EQ(t.best_index, 0);
  EXPECT_EQ(t.best_hp.lam[0], 0.5);
}

TEST(Grid, QuadraticPicksNearestNode) {
  const double lmax = 2.0;
  const double c = lmax - 3.3;
  const auto grid = lasso_grid(lmax, 37);
  std::size_t nearest = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (std::abs(grid[i] - c) < std::abs(grid[nearest] - c)) nearest = i;
  }
  const TuneTrace t = grid_search(quadratic(c), lmax, 37);
  EXPECT_EQ(t.best_index, static_cast<int>(nearest));
}

TEST(Random, DrawsInIntervalAndDeterministic) {
  const double lmax = 0.7;
  const TuneTrace a = random_search(quadratic(0.0), lmax, 200, 3);
  const TuneTrace b = random_search(quadratic(0.0), lmax, 200, 3);
  for (std::size_t i = 0; i < a.iterates.size(); ++i) {
    const double l = a.iterates[i].hp.lam[0];
    EXPECT_GE(l, lmax - 4 * kLn10);
    EXPECT_LE(l, lmax);
    EXPECT_EQ(l, b.iterates[i].hp.lam[0]);
  }
  const TuneTrace one = random_search(quadratic(0.0), lmax, 1, 9);
  EXPECT_EQ(one.best_index, 0);
  EXPECT_EQ(one.best_hp.lam[0], one.iterates[0].hp.lam[0]);
}

TEST(Random, CompetitiveWithGridOnUnimodal) {
  const double lmax = 1.0;
  const double c = lmax - 5.0;
  const TuneTrace grid = grid_search(quadratic(c), lmax, 100);
  const TuneTrace rnd = random_search(quadratic(c), lmax, 100, 4);
  const double spacing = 4 * kLn10 / 99;
  // Worst-case distance of the best random draw on a unimodal 1-d objective.
  EXPECT_LE(rnd.best_criterion, grid.best_criterion + spacing * spacing + 4 * spacing);
}

TEST(Tune, StationaryStartReturnsImmediately) {
  int calls = 0;
  TuneOptions opts;
  const TuneTrace t = tune_hypergrad(quadratic(0.25, &calls), HyperParams::lasso(0.25), opts);
  EXPECT_EQ(calls, 1);
  EXPECT_EQ(t.budget_used, 1);
  EXPECT_EQ(t.best_hp.lam[0], 0.25);
}

TEST(Tune, OneDimensionalPipelineConverges) {
  for (Engine engine : {Engine::implicit, Engine::implicit_forward, Engine::forward, Engine::backward}) {
    HeldOutObjective obj = one_d_pipeline(engine);
    const double lmax = lambda_max(obj.x_train(), obj.y_train());
    EXPECT_NEAR(lmax, std::log(2.0), 1e-15);
    TuneOptions opts;
    opts.budget = 50;
    opts.bounds = default_lasso_bounds(lmax);
    const TuneTrace t = tune_hypergrad(std::ref(obj), HyperParams::lasso(lmax - kLn10), opts);
    EXPECT_NEAR(t.best_hp.lam[0], 0.0, 1e-3) << to_string(engine);
    EXPECT_LE(t.budget_used, 50);
  }
}

TEST(Tune, BudgetExhaustionAndBestSeen) {
  TuneOptions opts;
  opts.budget = 7;
  const TuneTrace t = tune_hypergrad(quadratic(-3.0), HyperParams::lasso(2.0), opts);
  EXPECT_EQ(t.budget_used, 7);
  EXPECT_LE(t.iterates.size(), 7u);
  for (std::size_t i = 1; i < t.iterates.size(); ++i) {
    EXPECT_LE(t.iterates[i].criterion, t.iterates[i - 1].criterion);
    EXPECT_LE(t.best_criterion, t.iterates[i].criterion);
  }
  EXPECT_THROW(tune_hypergrad(quadratic(0.0), HyperParams::lasso(1.0), TuneOptions{0}), Error);
}

TEST(Tune, BoundsClip) {
  TuneOptions opts;
  opts.budget = 20;
  opts.bounds = Bounds{-1.0, 1.0};
  const TuneTrace t = tune_hypergrad(quadratic(-5.0), HyperParams::lasso(0.5), opts);
  for (const auto& e : t.iterates) {
    EXPECT_GE(e.hp.lam[0], -1.0);
    EXPECT_LE(e.hp.lam[0], 1.0);
  }
  EXPECT_DOUBLE_EQ(t.best_hp.lam[0], -1.0);
}

TEST(Tune, NonFiniteAborts) {
  const OuterObjective bad = [](const HyperParams& hp, bool need_grad) {
    OuterEval ev;
    ev.value = hp.lam[0] < 0.5 ? NAN : hp.lam[0] * hp.lam[0];
    if (need_grad) ev.grad = Vector::Constant(1, 2 * hp.lam[0]);
    return ev;
  };
  try {
    tune_hypergrad(bad, HyperParams::lasso(1.0), TuneOptions{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("non-finite criterion"), std::string::npos) << e.what();
  }
}

TEST(Tune, ImplicitAndImplicitForwardAgree) {
  const Dataset d = fixtures::gaussian_instance(150, 100, 21);
  const Split s = split_three_way(d, 21);
  const Dataset tr = subset_rows(d, s.train);
  const Dataset va = subset_rows(d, s.val);
  const double lmax = lambda_max(tr.X, tr.y);
  TuneOptions opts;
  opts.budget = 20;
  opts.bounds = default_lasso_bounds(lmax);
  EngineOptions eo;
  eo.solver_opts.tol = 1e-8;
  HeldOutObjective a(tr.X, tr.y, va.X, va.y, Engine::implicit, eo);
  HeldOutObjective b(tr.X, tr.y, va.X, va.y, Engine::implicit_forward, eo);
  const TuneTrace ta = tune_hypergrad(std::ref(a), HyperParams::lasso(lmax - kLn10), opts);
  const TuneTrace tb = tune_hypergrad(std::ref(b), HyperParams::lasso(lmax - kLn10), opts);
  EXPECT_NEAR(ta.best_criterion, tb.best_criterion, 1e-3 * ta.best_criterion);
}

TEST(WlassoInit, LargeRegularizerPullsToZero) {
  const Dataset d = fixtures::gaussian_instance(90, 20, 5);
  const Split s = split_three_way(d, 5);
  const Dataset tr = subset_rows(d, s.train);
  const Dataset va = subset_rows(d, s.val);
  EngineOptions eo;
  HeldOutObjective obj(tr.X, tr.y, va.X, va.y, Engine::implicit_forward, eo);
  const double lmax = lambda_max(tr.X, tr.y);
  const WlassoInit init = wlasso_init(std::ref(obj), 20, lmax, 1e12, 20);
  // The penalty swamps the criterion, so the run is descent on |lambda|^2.
  EXPECT_LE(init.hp.lam.cwiseAbs().maxCoeff(), 1e-2 * std::abs(lmax - kLn10));
  EXPECT_LT(init.trace.best_criterion, 1e-3 * init.trace.iterates.front().criterion);
}

TEST(WlassoInit, DefaultWeightAndDescent) {
  const Dataset d = fixtures::gaussian_instance(90, 30, 6);
  const Split s = split_three_way(d, 6);
  const Dataset tr = subset_rows(d, s.train);
  const Dataset va = subset_rows(d, s.val);
  EngineOptions eo;
  HeldOutObjective obj(tr.X, tr.y, va.X, va.y, Engine::implicit_forward, eo);
  const double lmax = lambda_max(tr.X, tr.y);
  const WlassoInit init = wlasso_init(std::ref(obj), 30, lmax, std::nullopt, 10);
  EXPECT_NEAR(init.gamma_reg, va.y.squaredNorm() / 10.0, 1e-12 * va.y.squaredNorm());
  ASSERT_FALSE(init.trace.iterates.empty());
  EXPECT_LE(init.trace.best_criterion, init.trace.iterates.front().criterion);
  EXPECT_EQ(init.hp.size(), 30);
}

TEST(TraceCsv, Header) {
  const TuneTrace t = grid_search(quadratic(0.0), 0.0, 3);
  const std::string csv = trace_to_csv(t);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "iter,lambda,criterion,grad_norm,step,wall_ms");
  TuneOptions opts;
  opts.budget = 2;
  const TuneTrace w = tune_hypergrad(quadratic(0.0), HyperParams::wlasso(Vector::Constant(3, 1.0)), opts);
  const std::string wcsv = trace_to_csv(w);
  EXPECT_EQ(wcsv.substr(0, wcsv.find('\n')), "iter,lambda0,lambda1,lambda2,criterion,grad_norm,step,wall_ms");
}
