#include "sparseho/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "epoch_loop.hpp"
#include "sparseho/error.hpp"

namespace sparseho {

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::lasso: return "lasso";
    case ModelKind::wlasso: return "wlasso";
    case ModelKind::mcp: return "mcp";
  }
  return "?";
}

HyperParams HyperParams::lasso(double log_lambda) {
  return HyperParams{ModelKind::lasso, Vector::Constant(1, log_lambda)};
}

HyperParams HyperParams::wlasso(Vector log_lambdas) {
  return HyperParams{ModelKind::wlasso, std::move(log_lambdas)};
}

HyperParams HyperParams::mcp(double log_lambda, double log_gamma) {
  Vector lam(2);
  lam << log_lambda, log_gamma;
  return HyperParams{ModelKind::mcp, std::move(lam)};
}

double HyperParams::reg(Index j) const {
  return std::exp(kind == ModelKind::wlasso ? lam[j] : lam[0]);
}

void validate(const HyperParams& hp, Index p) {
  const Index want = hp.kind == ModelKind::lasso ? 1 : hp.kind == ModelKind::wlasso ? p : 2;
  if (hp.lam.size() != want) {
    throw Error(std::string("hyperparameters: ") + to_string(hp.kind) + " expects " + std::to_string(want) +
                " entries, got " + std::to_string(hp.lam.size()));
  }
  if (!hp.lam.allFinite()) throw Error("hyperparameters: non-finite entry");
}

double soft_threshold(double t, double tau) {
  if (t > tau) return t - tau;
  if (t < -tau) return t + tau;
  return 0.0;
}

double prox_mcp(double t, double lam, double gamma) {
  if (!(gamma > 1.0)) throw Error("prox_mcp: nonconvexity exceeds curvature (gamma must be > 1)");
  if (std::abs(t) > gamma * lam) return t;
  return soft_threshold(t, lam) / (1.0 - 1.0 / gamma);
}

double mcp_penalty(double t, double lam, double gamma) {
  const double a = std::abs(t);
  if (a <= gamma * lam) return lam * a - a * a / (2.0 * gamma);
  return 0.5 * gamma * lam * lam;
}

McpCoordParams mcp_coord_params(const Design& x, Index j, const HyperParams& hp) {
  const double n = static_cast<double>(x.rows());
  const double nrm = x.col_sq_norm(j);
  return {n * std::exp(hp.lam[0]) / nrm, std::exp(hp.lam[1]) * nrm / n};
}

void require_nonzero_columns(const Design& x) {
  for (Index j = 0; j < x.cols(); ++j) {
    if (x.col_sq_norm(j) == 0.0) {
      throw Error("design column " + std::to_string(j) + " is identically zero; drop it before solving");
    }
  }
}

IndexList support_of(const Vector& beta) {
  IndexList s;
  for (Index j = 0; j < beta.size(); ++j) {
    if (beta[j] != 0.0) s.push_back(j);
  }
  return s;
}

double lambda_max(const Design& x, const Vector& y) {
  if (y.size() != x.rows()) throw Error("lambda_max: y length differs from rows of X");
  if (y.lpNorm<Eigen::Infinity>() == 0.0) throw Error("lambda_max: y is identically zero");
  // Both the per-column and the matrix-vector product, since the solvers
  // use one or the other and they may differ in the last bit.
  double top = x.multiply_transpose(y).lpNorm<Eigen::Infinity>();
  for (Index j = 0; j < x.cols(); ++j) top = std::max(top, std::abs(x.col_dot(j, y)));
  if (top == 0.0) throw Error("lambda_max: X^T y is zero, no finite lambda_max");
  const double n = static_cast<double>(x.rows());
  double lam = std::log(top / n);
  // Round up until the threshold n e^lam really dominates ||X^T y||_inf.
  while (n * std::exp(lam) < top) lam = std::nextafter(lam, std::numeric_limits<double>::infinity());
  return lam;
}

double penalty_value(const Vector& beta, const HyperParams& hp) {
  switch (hp.kind) {
    case ModelKind::lasso:
      return std::exp(hp.lam[0]) * beta.lpNorm<1>();
    case ModelKind::wlasso:
      return (hp.lam.array().exp() * beta.array().abs()).sum();
    case ModelKind::mcp: {
      const double lam = std::exp(hp.lam[0]);
      const double gamma = std::exp(hp.lam[1]);
      double acc = 0.0;
      for (Index j = 0; j < beta.size(); ++j) acc += mcp_penalty(beta[j], lam, gamma);
      return acc;
    }
  }
  return 0.0;
}

double objective_value(const Design& x, const Vector& y, const Vector& beta, const HyperParams& hp) {
  const Vector r = y - x.multiply(beta);
  return r.squaredNorm() / (2.0 * static_cast<double>(x.rows())) + penalty_value(beta, hp);
}

namespace detail {

void check_inputs(const Design& x, const Vector& y, const HyperParams& hp, const SolverOptions& opts) {
  if (y.size() != x.rows()) throw Error("solver: y length differs from rows of X");
  validate(hp, x.cols());
  if (!(opts.tol >= 0.0)) throw Error("solver: tol must be nonnegative");
  if (opts.max_epochs < 0) throw Error("solver: max_epochs must be nonnegative");
  require_nonzero_columns(x);
}

SolverState start_state(const Design& x, const Vector& y, const SolverState* warm) {
  SolverState st;
  if (warm != nullptr && warm->beta.size() == x.cols()) {
    st.beta = warm->beta;
    st.residual = y - x.multiply(st.beta);
  } else {
    st.beta = Vector::Zero(x.cols());
    st.residual = y;
  }
  return st;
}

Vector l1_weights(const HyperParams& hp, Index p) {
  if (hp.kind == ModelKind::wlasso) return hp.lam.array().exp().matrix();
  return Vector::Constant(p, std::exp(hp.lam[0]));
}

}  // namespace detail

namespace {

using detail::check_inputs;
using detail::l1_weights;
using detail::run_epochs;

// Cyclic proximal coordinate descent for sum_j w_j |b_j|.
SolverState bcd_weighted_l1(const Design& x, const Vector& y, const HyperParams& hp, const Vector& weights,
                            const SolverOptions& opts, const SolverState* warm) {
  const double n = static_cast<double>(x.rows());
  const Index p = x.cols();
  Vector thresh(p);
  for (Index j = 0; j < p; ++j) thresh[j] = n * weights[j] / x.col_sq_norm(j);
  return run_epochs(x, y, hp, opts, warm, [&](SolverState& st) {
    double max_move = 0.0;
    for (Index j = 0; j < p; ++j) {
      const double old = st.beta[j];
      const double nrm = x.col_sq_norm(j);
      const double z = old + x.col_dot(j, st.residual) / nrm;
      const double updated = soft_threshold(z, thresh[j]);
      if (updated != old) {
        st.beta[j] = updated;
        x.col_axpy(j, old - updated, st.residual);
        max_move = std::max(max_move, std::abs(updated - old));
      }
    }
    return max_move;
  });
}

}  // namespace

SolverState solve_lasso_bcd(const Design& x, const Vector& y, const HyperParams& hp, const SolverOptions& opts,
                            const SolverState* warm) {
  if (hp.kind != ModelKind::lasso) throw Error("solve_lasso_bcd: expects lasso hyperparameters");
  check_inputs(x, y, hp, opts);
  return bcd_weighted_l1(x, y, hp, l1_weights(hp, x.cols()), opts, warm);
}

SolverState solve_wlasso_bcd(const Design& x, const Vector& y, const HyperParams& hp, const SolverOptions& opts,
                             const SolverState* warm) {
  if (hp.kind != ModelKind::wlasso) throw Error("solve_wlasso_bcd: expects wlasso hyperparameters");
  check_inputs(x, y, hp, opts);
  return bcd_weighted_l1(x, y, hp, l1_weights(hp, x.cols()), opts, warm);
}

SolverState solve_lasso_ista(const Design& x, const Vector& y, const HyperParams& hp, const SolverOptions& opts,
                             const SolverState* warm) {
  if (hp.kind == ModelKind::mcp) throw Error("solve_lasso_ista: MCP is solved by coordinate descent only");
  check_inputs(x, y, hp, opts);
  const double n = static_cast<double>(x.rows());
  const double alpha = spectral_norm_sq(x);
  const Vector thresh = n * l1_weights(hp, x.cols());
  return run_epochs(x, y, hp, opts, warm, [&](SolverState& st) {
    const Vector grad = x.multiply_transpose(st.residual);  // -X^T(X b - y)
    const Vector old = st.beta;
    // ST(b + g/alpha, n w/alpha) written as ST(alpha b + g, n w)/alpha so
    // the threshold test at b = 0 compares X^T y with n e^lam exactly.
    for (Index j = 0; j < st.beta.size(); ++j) st.beta[j] = soft_threshold(alpha * old[j] + grad[j], thresh[j]) / alpha;
    st.residual = y - x.multiply(st.beta);
    return (st.beta - old).lpNorm<Eigen::Infinity>();
  });
}

SolverState solve_mcp_cd(const Design& x, const Vector& y, const HyperParams& hp, const SolverOptions& opts,
                         const SolverState* warm) {
  if (hp.kind != ModelKind::mcp) throw Error("solve_mcp_cd: expects mcp hyperparameters");
  check_inputs(x, y, hp, opts);
  const Index p = x.cols();
  std::vector<McpCoordParams> params(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) {
    params[j] = mcp_coord_params(x, j, hp);
    if (!(params[j].gamma > 1.0)) {
      throw Error("solve_mcp_cd: curvature condition e^gamma ||X_j||^2 / n > 1 fails for column " +
                  std::to_string(j));
    }
  }
  return run_epochs(x, y, hp, opts, warm, [&](SolverState& st) {
    double max_move = 0.0;
    for (Index j = 0; j < p; ++j) {
      const double old = st.beta[j];
      const double z = old + x.col_dot(j, st.residual) / x.col_sq_norm(j);
      const double updated = prox_mcp(z, params[j].lam, params[j].gamma);
      if (updated != old) {
        st.beta[j] = updated;
        x.col_axpy(j, old - updated, st.residual);
        max_move = std::max(max_move, std::abs(updated - old));
      }
    }
    return max_move;
  });
}

SolverState solve(InnerSolver solver, const Design& x, const Vector& y, const HyperParams& hp,
                  const SolverOptions& opts, const SolverState* warm) {
  switch (hp.kind) {
    case ModelKind::lasso:
      return solver == InnerSolver::ista ? solve_lasso_ista(x, y, hp, opts, warm)
                                         : solve_lasso_bcd(x, y, hp, opts, warm);
    case ModelKind::wlasso:
      return solver == InnerSolver::ista ? solve_lasso_ista(x, y, hp, opts, warm)
                                         : solve_wlasso_bcd(x, y, hp, opts, warm);
    case ModelKind::mcp:
      return solve_mcp_cd(x, y, hp, opts, warm);
  }
  throw Error("solve: unknown model kind");
}

double kkt_violation(const Design& x, const Vector& y, const SolverState& state, const HyperParams& hp) {
  if (hp.kind == ModelKind::mcp) throw Error("kkt_violation: MCP is nonconvex, use fixed-point residue");
  validate(hp, x.cols());
  const double n = static_cast<double>(x.rows());
  const Vector r = y - x.multiply(state.beta);
  const Vector corr = x.multiply_transpose(r) / n;
  double worst = 0.0;
  for (Index j = 0; j < x.cols(); ++j) {
    const double w = hp.reg(j);
    const double b = state.beta[j];
    double v = 0.0;
    if (b != 0.0) {
      // Zero iff X_j^T r / n == w * sign(b_j): magnitude and sign together.
      v = std::abs(corr[j] - w * (b > 0.0 ? 1.0 : -1.0));
    } else {
      v = std::max(std::abs(corr[j]) - w, 0.0);
    }
    worst = std::max(worst, v);
  }
  return worst;
}

double ista_fixed_point_residue(const Design& x, const Vector& y, const Vector& beta, const HyperParams& hp,
                                double alpha) {
  const double n = static_cast<double>(x.rows());
  const Vector grad = x.multiply_transpose(y - x.multiply(beta));
  double worst = 0.0;
  for (Index j = 0; j < beta.size(); ++j) {
    const double next = soft_threshold(alpha * beta[j] + grad[j], n * hp.reg(j)) / alpha;
    worst = std::max(worst, std::abs(next - beta[j]));
  }
  return worst;
}

double cd_fixed_point_residue(const Design& x, const Vector& y, const Vector& beta, const HyperParams& hp) {
  const double n = static_cast<double>(x.rows());
  const Vector grad = x.multiply_transpose(y - x.multiply(beta));
  double worst = 0.0;
  for (Index j = 0; j < beta.size(); ++j) {
    const double nrm = x.col_sq_norm(j);
    const double z = beta[j] + grad[j] / nrm;
    double next = 0.0;
    if (hp.kind == ModelKind::mcp) {
      const auto c = mcp_coord_params(x, j, hp);
      next = prox_mcp(z, c.lam, c.gamma);
    } else {
      next = soft_threshold(z, n * hp.reg(j) / nrm);
    }
    worst = std::max(worst, std::abs(next - beta[j]));
  }
  return worst;
}

double spectral_norm_sq(const Design& x, double rel_tol, int max_iter) {
  const Index p = x.cols();
  if (p == 0) return 0.0;
  // Deterministic, non-degenerate start.
  Vector v(p);
  for (Index j = 0; j < p; ++j) v[j] = 1.0 + 1e-3 * static_cast<double>(j % 7);
  v.normalize();
  double estimate = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vector w = x.multiply_transpose(x.multiply(v));
    const double next = v.dot(w);
    const double nrm = w.norm();
    if (nrm == 0.0) return 0.0;
    v = w / nrm;
    if (it > 0 && std::abs(next - estimate) <= rel_tol * std::abs(next)) {
      estimate = next;
      break;
    }
    estimate = next;
  }
  return estimate;
}

}  // namespace sparseho
