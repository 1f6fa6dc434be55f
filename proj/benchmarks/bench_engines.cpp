// Cost of one hypergradient per engine on the held-out criterion, plus the
// inner solvers on their own. Arguments are (n, p).

#include <benchmark/benchmark.h>

#include <cmath>

#include "sparseho/criteria.hpp"
#include "sparseho/data.hpp"
#include "sparseho/hypergrad.hpp"
#include "sparseho/solvers.hpp"

using namespace sparseho;

namespace {

struct Fixture {
  Design x_train, x_val;
  Vector y_train, y_val;
  HyperParams hp;
};

Fixture make(Index n, Index p) {
  const Dataset d = synthesize_dataset(n, p, DesignSpec{}, 5, 3.0, 0);
  const Split s = split_three_way(d, 0);
  const Dataset tr = subset_rows(d, s.train);
  const Dataset va = subset_rows(d, s.val);
  return {tr.X, va.X, tr.y, va.y, HyperParams::lasso(lambda_max(tr.X, tr.y) - std::log(10.0))};
}

void engine_bench(benchmark::State& state, Engine engine) {
  const Fixture f = make(state.range(0), state.range(1));
  EngineOptions opts;
  opts.solver_opts.tol = 1e-8;
  const CritGradFn crit = [&](const Vector& b) { return heldout_eval(b, f.x_val, f.y_val).grad; };
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_hypergradient(engine, f.x_train, f.y_train, f.hp, opts, crit).grad);
  }
}

void BM_Implicit(benchmark::State& s) { engine_bench(s, Engine::implicit); }
void BM_ImplicitForward(benchmark::State& s) { engine_bench(s, Engine::implicit_forward); }
void BM_Forward(benchmark::State& s) { engine_bench(s, Engine::forward); }
void BM_Backward(benchmark::State& s) { engine_bench(s, Engine::backward); }

void BM_SolveBcd(benchmark::State& state) {
  const Fixture f = make(state.range(0), state.range(1));
  SolverOptions opts;
  opts.tol = 1e-8;
  for (auto _ : state) benchmark::DoNotOptimize(solve_lasso_bcd(f.x_train, f.y_train, f.hp, opts).beta);
}

void BM_SolveIsta(benchmark::State& state) {
  const Fixture f = make(state.range(0), state.range(1));
  SolverOptions opts;
  opts.tol = 1e-8;
  for (auto _ : state) benchmark::DoNotOptimize(solve_lasso_ista(f.x_train, f.y_train, f.hp, opts).beta);
}

void Sizes(benchmark::internal::Benchmark* b) {
  b->Args({300, 250})->Args({300, 1000})->Args({300, 5000})->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK(BM_Implicit)->Apply(Sizes);
BENCHMARK(BM_ImplicitForward)->Apply(Sizes);
BENCHMARK(BM_Forward)->Apply(Sizes);
BENCHMARK(BM_Backward)->Apply(Sizes);
BENCHMARK(BM_SolveBcd)->Apply(Sizes);
BENCHMARK(BM_SolveIsta)->Apply(Sizes);

BENCHMARK_MAIN();
