#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sparseho/design.hpp"
#include "sparseho/error.hpp"
#include "sparseho/solvers.hpp"

namespace sparseho {

// Weak Jacobian of the coefficients w.r.t. the log-hyperparameters, stored
// in its sparse shape:
//   lasso  - `lasso`, length p, zero off `support`
//   wlasso - `block`, |support| x |cols|; everything else is zero. At a
//            fixed point cols == support, but a truncated forward run can
//            still depend on weights of coordinates that left the support.
//   mcp    - `mcp`, p x 2 with columns d/dlambda, d/dgamma
struct Jacobian {
  ModelKind kind = ModelKind::lasso;
  Index p = 0;
  IndexList support;
  Vector lasso;
  Matrix block;
  IndexList cols;
  Matrix mcp;

  static Jacobian zero(ModelKind kind, Index p);

  Index num_hyper() const;
  // Materialized p x r matrix.
  Matrix to_dense() const;
  bool all_finite() const;
};

// J^T grad_C, restricted to the support: O(s * r).
Vector hypergradient(const Jacobian& jac, const Vector& crit_grad);

struct StDerivatives {
  double d1;  // d ST / d t
  double d2;  // d ST / d tau
};

// Weak derivatives of soft-thresholding: 1{|t|>tau} and -sign(t) 1{|t|>tau}.
StDerivatives st_weak_derivatives(double t, double tau);

struct McpPartials {
  double d_t;
  double d_lam;
  double d_gamma;
};

// Partial derivatives of prox_mcp(t, lam, gamma), zero in the dead zone.
McpPartials mcp_prox_partials(double t, double lam, double gamma);

struct EngineOptions {
  InnerSolver solver = InnerSolver::bcd;
  SolverOptions solver_opts;
  int n_iter_jac = 100;
  double eps_jac = 1e-3;
  // Iterate storage limit for the backward engine, in doubles (2 GB).
  std::size_t backward_memory_cap = std::size_t{1} << 28;
};

class GramNotPositiveDefinite : public Error {
 public:
  GramNotPositiveDefinite() : Error("support Gram not PD") {}
};

// Closed-form Jacobian from the support Gram matrix. Throws
// GramNotPositiveDefinite when X_S^T X_S is singular or indefinite.
Jacobian jacobian_implicit(const Design& x, const SolverState& state, const HyperParams& hp);

struct ForwardResult {
  SolverState state;
  Jacobian jac;
};

// Per-epoch hook for the forward engine: epoch, iterate, dense p x r Jacobian.
using JacobianObserver = std::function<void(int, const Vector&, const Matrix&)>;

// Solver iterations differentiated in execution order (BCD or ISTA). The
// recursion starts from `jac_init` (zero when absent).
ForwardResult jacobian_forward_iterdiff(const Design& x, const Vector& y, const HyperParams& hp,
                                        InnerSolver solver, const SolverOptions& opts,
                                        const SolverState* warm = nullptr, const Jacobian* jac_init = nullptr,
                                        const JacobianObserver& observer = {});

struct ImplicitForwardResult {
  SolverState state;
  Jacobian jac;
  int passes = 0;
  bool no_iterations = false;  // n_iter_jac == 0: zero Jacobian returned
  Matrix dr;                   // -X_S J_S after the last pass, n x r
};

// Solve first with any configured solver, then run the support-restricted
// Jacobian recursion for up to n_iter_jac passes. With `crit_grad`, stop
// once ||(J^{k+1} - J^k)^T grad||_inf <= eps_jac ||grad||_inf. `jac_init`
// seeds the recursion (entries outside the new support are ignored).
ImplicitForwardResult jacobian_implicit_forward(const Design& x, const Vector& y, const HyperParams& hp,
                                                const EngineOptions& opts, const Vector* crit_grad = nullptr,
                                                const SolverState* warm = nullptr,
                                                const Jacobian* jac_init = nullptr);

// Same, with the criterion gradient computed from the solution.
ImplicitForwardResult jacobian_implicit_forward(const Design& x, const Vector& y, const HyperParams& hp,
                                                const EngineOptions& opts,
                                                const std::function<Vector(const Vector&)>& crit_grad,
                                                const SolverState* warm = nullptr,
                                                const Jacobian* jac_init = nullptr);

struct BackwardResult {
  SolverState state;
  Vector grad;  // J^T v, length r
};

// Reverse-mode differentiation of BCD: store one iterate per epoch, then
// replay the coordinate updates backwards accumulating J^T v.
BackwardResult hypergrad_backward(const Design& x, const Vector& y, const HyperParams& hp,
                                  const SolverOptions& opts, const Vector& v,
                                  std::size_t memory_cap = std::size_t{1} << 28,
                                  const SolverState* warm = nullptr);
// Same, with v computed from the solution once the forward pass ends.
BackwardResult hypergrad_backward_fn(const Design& x, const Vector& y, const HyperParams& hp,
                                  const SolverOptions& opts, const std::function<Vector(const Vector&)>& v,
                                  std::size_t memory_cap = std::size_t{1} << 28,
                                  const SolverState* warm = nullptr);

// Coordinate descent on MCP interleaved with the differentiated prox.
ForwardResult jacobian_forward_mcp(const Design& x, const Vector& y, const HyperParams& hp,
                                   const SolverOptions& opts, const SolverState* warm = nullptr,
                                   const Jacobian* jac_init = nullptr, const JacobianObserver& observer = {});

struct FdJacobian {
  Matrix jac;  // p x r; only the probed column is filled when coord is set
  bool support_stable = true;
  std::string note;
};

// Solver tolerances used by the finite-difference probes.
SolverOptions fd_probe_options();

// Central differences of the solution map, cold-started probes at
// lam +- h e_i. Flags probes whose support or signs differ.
FdJacobian fd_jacobian_oracle(const Design& x, const Vector& y, const HyperParams& hp, InnerSolver solver,
                              double h = 1e-5, std::optional<Index> coord = std::nullopt,
                              const SolverOptions& probe_opts = fd_probe_options());

struct RateCertificate {
  double rate = 0.0;            // C = || A^(j_s) ... A^(j_1) ||_2
  std::vector<Matrix> factors;  // A^(j_1), ..., A^(j_s)
};

// Linear-rate constant of the support-restricted coordinate recursion.
RateCertificate convergence_rate_bound(const Design& x, std::span<const Index> support);

// sqrt(x^T A^{-1} x) for A positive definite.
double mahalanobis_norm(const Vector& x, const Matrix& a);

enum class Engine { implicit, implicit_forward, forward, backward };

const char* to_string(Engine engine);
Engine engine_from_string(const std::string& name);

using CritGradFn = std::function<Vector(const Vector&)>;

struct HypergradResult {
  SolverState state;
  Vector grad;
  std::optional<Jacobian> jac;  // absent for the backward engine
  bool fell_back = false;       // implicit engine fell back to implicit_forward
};

// One inner solve plus hypergradient with the chosen engine. `jac_warm`
// seeds the implicit-forward recursion.
HypergradResult compute_hypergradient(Engine engine, const Design& x, const Vector& y, const HyperParams& hp,
                                      const EngineOptions& opts, const CritGradFn& crit_grad,
                                      const SolverState* warm = nullptr, const Jacobian* jac_warm = nullptr);

}  // namespace sparseho
