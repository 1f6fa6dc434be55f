#pragma once

#include <functional>
#include <vector>

#include "sparseho/design.hpp"

namespace sparseho {

enum class ModelKind { lasso, wlasso, mcp };

const char* to_string(ModelKind kind);

// Regularization hyperparameters in log space: the effective regularizer is
// exp(lam). Lasso holds one entry, the weighted Lasso one per feature, MCP
// the pair (lambda, gamma).
struct HyperParams {
  ModelKind kind = ModelKind::lasso;
  Vector lam;

  static HyperParams lasso(double log_lambda);
  static HyperParams wlasso(Vector log_lambdas);
  static HyperParams mcp(double log_lambda, double log_gamma);

  Index size() const { return lam.size(); }
  // exp(lambda_j) for the l1 family; exp(lambda) for MCP.
  double reg(Index j) const;
};

// Throws on non-finite entries or a length that does not match `p`.
void validate(const HyperParams& hp, Index p);

struct SolverState {
  Vector beta;
  Vector residual;  // y - X beta, maintained incrementally
  IndexList support;
  std::vector<double> objective_trace;  // once per epoch
  int epochs = 0;
  bool converged = false;

  Index s_hat() const { return static_cast<Index>(support.size()); }
};

struct SolverOptions {
  // Stop once (f(b^k) - f(b^{k+1})) / f(0) < tol. Zero runs max_epochs.
  double tol = 1e-5;
  int max_epochs = 10000;
  // Optional extra gate: also require max |b^{k+1} - b^k| <= beta_tol.
  // Used by finite-difference probes that need coefficients to ~1e-13.
  double beta_tol = 0.0;
  // Called after every epoch with the epoch number (1-based) and iterate.
  std::function<void(int, const Vector&)> on_epoch;
};

enum class InnerSolver { bcd, ista };

// sign(t) * max(|t| - tau, 0)
double soft_threshold(double t, double tau);

// MCP proximity operator; gamma must exceed 1.
double prox_mcp(double t, double lam, double gamma);
// MCP penalty value p_{lam,gamma}(|t|).
double mcp_penalty(double t, double lam, double gamma);

// log(||X^T y||_inf / n): the smallest log-regularization for which zero
// solves the Lasso.
double lambda_max(const Design& x, const Vector& y);

SolverState solve_lasso_bcd(const Design& x, const Vector& y, const HyperParams& hp,
                            const SolverOptions& opts = {}, const SolverState* warm = nullptr);
SolverState solve_lasso_ista(const Design& x, const Vector& y, const HyperParams& hp,
                             const SolverOptions& opts = {}, const SolverState* warm = nullptr);
SolverState solve_wlasso_bcd(const Design& x, const Vector& y, const HyperParams& hp,
                             const SolverOptions& opts = {}, const SolverState* warm = nullptr);
SolverState solve_mcp_cd(const Design& x, const Vector& y, const HyperParams& hp,
                         const SolverOptions& opts = {}, const SolverState* warm = nullptr);

// Dispatch on hp.kind: lasso/wlasso honour `solver`, MCP always uses CD.
SolverState solve(InnerSolver solver, const Design& x, const Vector& y, const HyperParams& hp,
                  const SolverOptions& opts = {}, const SolverState* warm = nullptr);

// (1/2n) ||y - X beta||^2 + penalty(hp, beta)
double objective_value(const Design& x, const Vector& y, const Vector& beta, const HyperParams& hp);
double penalty_value(const Vector& beta, const HyperParams& hp);

// Largest violation of the l1 subgradient optimality conditions. Throws for
// MCP (no convex certificate; use the fixed-point residue).
double kkt_violation(const Design& x, const Vector& y, const SolverState& state, const HyperParams& hp);

// || beta - ST(beta - X^T(X beta - y)/alpha, n e^lam / alpha) ||_inf
double ista_fixed_point_residue(const Design& x, const Vector& y, const Vector& beta, const HyperParams& hp,
                                double alpha);

// || beta - prox_j(beta_j - X_j^T(X beta - y)/||X_j||^2) ||_inf for every
// model kind (coordinate-wise fixed point).
double cd_fixed_point_residue(const Design& x, const Vector& y, const Vector& beta, const HyperParams& hp);

// ||X||_2^2 by power iteration on X^T X.
double spectral_norm_sq(const Design& x, double rel_tol = 1e-10, int max_iter = 1000);

IndexList support_of(const Vector& beta);

// Throws naming the first all-zero column.
void require_nonzero_columns(const Design& x);

// Effective per-coordinate MCP parameters (n e^lam / ||X_j||^2, e^gamma ||X_j||^2 / n).
struct McpCoordParams {
  double lam;
  double gamma;
};
McpCoordParams mcp_coord_params(const Design& x, Index j, const HyperParams& hp);

}  // namespace sparseho
