#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "sparseho/design.hpp"
#include "sparseho/hypergrad.hpp"
#include "sparseho/solvers.hpp"

namespace sparseho {

struct SureAux {
  double epsilon = 0.0;
  Vector delta;
  double dof = 0.0;
  double sigma = 0.0;
};

struct CriterionEval {
  double value = 0.0;
  Vector grad;  // dC/dbeta
  std::optional<SureAux> aux;
};

// ||y_val - X_val beta||^2 and its gradient in beta.
CriterionEval heldout_eval(const Vector& beta, const Design& x_val, const Vector& y_val);

// Inner solve handle: (X, y, hp, warm start or null) -> state.
using SolveFn = std::function<SolverState(const Design&, const Vector&, const HyperParams&, const SolverState*)>;

// Solve handle over `solve(...)` with fixed options.
SolveFn make_solve_fn(InnerSolver solver, SolverOptions opts);

struct DofResult {
  double dof = 0.0;
  SolverState at_y;
  SolverState at_y_delta;
};

// Finite-difference Monte-Carlo degrees of freedom:
// (1/eps) <X beta(y + eps delta) - X beta(y), delta>.
DofResult dof_fdmc(const SolveFn& solve, const Design& x, const Vector& y, const HyperParams& hp, double epsilon,
                   const Vector& delta, const SolverState* warm_y = nullptr,
                   const SolverState* warm_y_delta = nullptr);

// 2 sigma / n^0.3
double default_sure_epsilon(double sigma, Index n);

// Standard-normal probe direction for dof_fdmc, drawn from a stream
// separate from the one synthesize_dataset uses for the same seed.
Vector gaussian_probe(Index n, std::uint64_t seed);

struct SureEval {
  CriterionEval eval;  // grad holds grad_y + grad_y_delta
  Vector grad_y;       // chain-rule term through beta(y)
  Vector grad_y_delta; // chain-rule term through beta(y + eps delta)
  SolverState at_y;
  SolverState at_y_delta;
};

// ||y - X beta(y)||^2 - n sigma^2 + 2 sigma^2 dof. sigma == 0 gives the
// plain data fit.
SureEval sure_eval(const Design& x, const Vector& y, const HyperParams& hp, double sigma, double epsilon,
                   const Vector& delta, const SolveFn& solve, const SolverState* warm_y = nullptr,
                   const SolverState* warm_y_delta = nullptr);

// ||beta - beta_true||^2 / ||beta_true||^2
double mse_to_truth(const Vector& beta, const Vector& beta_true);

// Outer objective value, hypergradient and the inner solution it came from.
struct OuterEval {
  double value = 0.0;
  Vector grad;  // empty when not requested
  Vector beta;
};

using OuterObjective = std::function<OuterEval(const HyperParams&, bool need_grad)>;

// Held-out loss of the training-set solution. Keeps the last solution and
// Jacobian to warm-start the next evaluation.
class HeldOutObjective {
 public:
  HeldOutObjective(Design x_train, Vector y_train, Design x_val, Vector y_val, Engine engine, EngineOptions opts);

  OuterEval evaluate(const HyperParams& hp, bool need_grad);
  OuterEval operator()(const HyperParams& hp, bool need_grad) { return evaluate(hp, need_grad); }
  void reset();

  const Design& x_train() const { return x_train_; }
  const Vector& y_train() const { return y_train_; }

 private:
  Design x_train_;
  Vector y_train_;
  Design x_val_;
  Vector y_val_;
  Engine engine_;
  EngineOptions opts_;
  std::optional<SolverState> warm_;
  std::optional<Jacobian> jac_;
};

// SURE with a fixed probe direction delta; two warm-started inner problems.
class SureObjective {
 public:
  SureObjective(Design x, Vector y, double sigma, Vector delta, double epsilon, Engine engine, EngineOptions opts);

  OuterEval evaluate(const HyperParams& hp, bool need_grad);
  OuterEval operator()(const HyperParams& hp, bool need_grad) { return evaluate(hp, need_grad); }
  void reset();

  double epsilon() const { return epsilon_; }
  const Vector& delta() const { return delta_; }

 private:
  Design x_;
  Vector y_;
  Vector y_delta_;
  double sigma_;
  Vector delta_;
  double epsilon_;
  Engine engine_;
  EngineOptions opts_;
  Vector grad_delta_const_;  // (2 sigma^2 / eps) X^T delta
  std::optional<SolverState> warm_y_;
  std::optional<SolverState> warm_y_delta_;
  std::optional<Jacobian> jac_y_;
  std::optional<Jacobian> jac_y_delta_;
};

}  // namespace sparseho
