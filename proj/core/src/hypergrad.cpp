#include "sparseho/hypergrad.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "epoch_loop.hpp"

namespace sparseho {

namespace {

using RowVector = Eigen::RowVectorXd;

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

Index hyper_count(ModelKind kind, Index p) {
  return kind == ModelKind::lasso ? 1 : kind == ModelKind::wlasso ? p : 2;
}

// X_j^T M for an n x r matrix M.
RowVector col_dot_rows(const Design& x, Index j, const Matrix& m) {
  if (x.is_sparse()) {
    RowVector out = RowVector::Zero(m.cols());
    for (SparseMatrix::InnerIterator it(x.sparse(), j); it; ++it) out += it.value() * m.row(it.row());
    return out;
  }
  return x.dense().col(j).transpose() * m;
}

// M += X_j * row
void col_outer_add(const Design& x, Index j, const RowVector& row, Matrix& m) {
  if (x.is_sparse()) {
    for (SparseMatrix::InnerIterator it(x.sparse(), j); it; ++it) m.row(it.row()) += it.value() * row;
    return;
  }
  m.noalias() += x.dense().col(j) * row;
}

Matrix times(const Design& x, const Matrix& m) {
  if (x.is_sparse()) return x.sparse() * m;
  return x.dense() * m;
}

Matrix transpose_times(const Design& x, const Matrix& m) {
  if (x.is_sparse()) return x.sparse().transpose() * m;
  return x.dense().transpose() * m;
}

// Dense p x r starting Jacobian, zero unless `init` matches kind and shape.
Matrix dense_init(const Jacobian* init, ModelKind kind, Index p) {
  if (init != nullptr && init->kind == kind && init->p == p) return init->to_dense();
  return Matrix::Zero(p, hyper_count(kind, p));
}

Jacobian from_dense(ModelKind kind, const Matrix& dense, IndexList support) {
  Jacobian jac = Jacobian::zero(kind, dense.rows());
  jac.support = std::move(support);
  switch (kind) {
    case ModelKind::lasso:
      for (Index j : jac.support) jac.lasso[j] = dense(j, 0);
      break;
    case ModelKind::wlasso: {
      for (Index k = 0; k < dense.cols(); ++k) {
        bool used = false;
        for (Index j : jac.support) used = used || dense(j, k) != 0.0;
        if (used) jac.cols.push_back(k);
      }
      // Keep the support columns even when zero so the block stays square
      // in the common case.
      IndexList merged;
      std::set_union(jac.cols.begin(), jac.cols.end(), jac.support.begin(), jac.support.end(),
                     std::back_inserter(merged));
      jac.cols = std::move(merged);
      const auto s = static_cast<Index>(jac.support.size());
      const auto c = static_cast<Index>(jac.cols.size());
      jac.block.resize(s, c);
      for (Index a = 0; a < s; ++a) {
        for (Index b = 0; b < c; ++b) jac.block(a, b) = dense(jac.support[a], jac.cols[b]);
      }
      break;
    }
    case ModelKind::mcp:
      jac.mcp = dense;
      break;
  }
  return jac;
}

void require_l1(const HyperParams& hp, const char* who) {
  if (hp.kind == ModelKind::mcp) throw Error(std::string(who) + ": supports lasso and wlasso only");
}

}  // namespace

Jacobian Jacobian::zero(ModelKind kind, Index p) {
  Jacobian jac;
  jac.kind = kind;
  jac.p = p;
  switch (kind) {
    case ModelKind::lasso: jac.lasso = Vector::Zero(p); break;
    case ModelKind::wlasso: jac.block.resize(0, 0); break;
    case ModelKind::mcp: jac.mcp = Matrix::Zero(p, 2); break;
  }
  return jac;
}

Index Jacobian::num_hyper() const { return hyper_count(kind, p); }

Matrix Jacobian::to_dense() const {
  Matrix out = Matrix::Zero(p, num_hyper());
  switch (kind) {
    case ModelKind::lasso:
      out.col(0) = lasso;
      break;
    case ModelKind::wlasso:
      for (std::size_t a = 0; a < support.size(); ++a) {
        for (std::size_t b = 0; b < cols.size(); ++b) {
          out(support[a], cols[b]) = block(static_cast<Index>(a), static_cast<Index>(b));
        }
      }
      break;
    case ModelKind::mcp:
      out = mcp;
      break;
  }
  return out;
}

bool Jacobian::all_finite() const {
  switch (kind) {
    case ModelKind::lasso: return lasso.allFinite();
    case ModelKind::wlasso: return block.allFinite();
    case ModelKind::mcp: return mcp.allFinite();
  }
  return false;
}

Vector hypergradient(const Jacobian& jac, const Vector& crit_grad) {
  if (crit_grad.size() != jac.p) throw Error("hypergradient: criterion gradient length differs from p");
  switch (jac.kind) {
    case ModelKind::lasso: {
      double acc = 0.0;
      for (Index j : jac.support) acc += jac.lasso[j] * crit_grad[j];
      return Vector::Constant(1, acc);
    }
    case ModelKind::wlasso: {
      Vector out = Vector::Zero(jac.p);
      const auto s = static_cast<Index>(jac.support.size());
      Vector g_s(s);
      for (Index a = 0; a < s; ++a) g_s[a] = crit_grad[jac.support[a]];
      const Vector h = jac.block.transpose() * g_s;
      for (std::size_t b = 0; b < jac.cols.size(); ++b) out[jac.cols[b]] = h[static_cast<Index>(b)];
      return out;
    }
    case ModelKind::mcp:
      return jac.mcp.transpose() * crit_grad;
  }
  return {};
}

StDerivatives st_weak_derivatives(double t, double tau) {
  if (std::abs(t) > tau) return {1.0, -sign_of(t)};
  return {0.0, 0.0};
}

McpPartials mcp_prox_partials(double t, double lam, double gamma) {
  if (!(gamma > 1.0)) throw Error("mcp_prox_partials: gamma must be > 1");
  const double a = std::abs(t);
  if (a > lam * gamma) return {1.0, 0.0, 0.0};
  const double d_gamma = -soft_threshold(t, lam) / ((gamma - 1.0) * (gamma - 1.0));
  if (a <= lam) return {0.0, 0.0, d_gamma};
  const double scale = 1.0 / (1.0 - 1.0 / gamma);
  return {scale, -sign_of(t) * scale, d_gamma};
}

Jacobian jacobian_implicit(const Design& x, const SolverState& state, const HyperParams& hp) {
  require_l1(hp, "jacobian_implicit");
  const Index p = x.cols();
  const IndexList support = support_of(state.beta);
  Jacobian jac = Jacobian::zero(hp.kind, p);
  jac.support = support;
  if (hp.kind == ModelKind::wlasso) jac.cols = support;
  const auto s = static_cast<Index>(support.size());
  if (s == 0) {
    jac.block.resize(0, 0);
    return jac;
  }

  const Matrix gram = x.gram(support);
  const Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) throw GramNotPositiveDefinite();
  const Vector diag = Matrix(llt.matrixL()).diagonal();
  const double dmax = diag.maxCoeff();
  const double dmin = diag.minCoeff();
  if (!(dmin > 0.0) || (dmin * dmin) <= 1e-12 * (dmax * dmax)) throw GramNotPositiveDefinite();

  const double n = static_cast<double>(x.rows());
  Vector scaled_sign(s);
  for (Index a = 0; a < s; ++a) {
    const Index j = support[a];
    scaled_sign[a] = n * hp.reg(j) * sign_of(state.beta[j]);
  }
  if (hp.kind == ModelKind::lasso) {
    const Vector js = -llt.solve(scaled_sign);
    for (Index a = 0; a < s; ++a) jac.lasso[support[a]] = js[a];
  } else {
    jac.block = -llt.solve(Matrix(scaled_sign.asDiagonal()));
  }
  return jac;
}

ForwardResult jacobian_forward_iterdiff(const Design& x, const Vector& y, const HyperParams& hp,
                                        InnerSolver solver, const SolverOptions& opts, const SolverState* warm,
                                        const Jacobian* jac_init, const JacobianObserver& observer) {
  require_l1(hp, "jacobian_forward_iterdiff");
  detail::check_inputs(x, y, hp, opts);
  const Index p = x.cols();
  const double n = static_cast<double>(x.rows());
  const bool weighted = hp.kind == ModelKind::wlasso;
  const Vector weights = detail::l1_weights(hp, p);

  Matrix jac = dense_init(jac_init, hp.kind, p);
  SolverOptions loop_opts = opts;
  loop_opts.on_epoch = [&](int epoch, const Vector& beta) {
    if (opts.on_epoch) opts.on_epoch(epoch, beta);
    if (observer) observer(epoch, beta, jac);
  };

  SolverState st;
  if (solver == InnerSolver::bcd) {
    Matrix dr = -times(x, jac);
    Vector thresh(p);
    for (Index j = 0; j < p; ++j) thresh[j] = n * weights[j] / x.col_sq_norm(j);
    st = detail::run_epochs(x, y, hp, loop_opts, warm, [&](SolverState& s) {
      double max_move = 0.0;
      for (Index j = 0; j < p; ++j) {
        const double old = s.beta[j];
        const double nrm = x.col_sq_norm(j);
        const double z = old + x.col_dot(j, s.residual) / nrm;
        const double updated = soft_threshold(z, thresh[j]);
        if (updated != old) {
          s.beta[j] = updated;
          x.col_axpy(j, old - updated, s.residual);
          max_move = std::max(max_move, std::abs(updated - old));
        }
        // Differentiated update: d1 = |sign(b_j)|, forcing -tau_j sign(b_j).
        const RowVector jac_old = jac.row(j);
        if (updated == 0.0) {
          if (!jac_old.isZero(0.0)) {
            jac.row(j).setZero();
            col_outer_add(x, j, jac_old, dr);
          }
          continue;
        }
        jac.row(j) = jac_old + col_dot_rows(x, j, dr) / nrm;
        jac(j, weighted ? j : 0) -= thresh[j] * sign_of(updated);
        col_outer_add(x, j, jac_old - jac.row(j), dr);
      }
      return max_move;
    });
  } else {
    const double alpha = spectral_norm_sq(x);
    const Vector thresh = (n / alpha) * weights;
    const Vector thresh_n = n * weights;
    st = detail::run_epochs(x, y, hp, loop_opts, warm, [&](SolverState& s) {
      const Vector grad = x.multiply_transpose(s.residual);
      const Vector old = s.beta;
      for (Index j = 0; j < p; ++j) s.beta[j] = soft_threshold(alpha * old[j] + grad[j], thresh_n[j]) / alpha;
      s.residual = y - x.multiply(s.beta);
      Matrix next = jac - transpose_times(x, times(x, jac)) / alpha;
      for (Index j = 0; j < p; ++j) {
        if (s.beta[j] == 0.0) {
          next.row(j).setZero();
        } else {
          next(j, weighted ? j : 0) -= thresh[j] * sign_of(s.beta[j]);
        }
      }
      jac = std::move(next);
      return (s.beta - old).lpNorm<Eigen::Infinity>();
    });
  }
  Jacobian out = from_dense(hp.kind, jac, st.support);
  return {std::move(st), std::move(out)};
}

namespace {

// Support-restricted Jacobian recursion at a fixed solution (second phase of
// the implicit-forward engine). Rows of `js` follow `support`; columns are
// the hyperparameters (lasso: 1, wlasso: the support, mcp: 2).
ImplicitForwardResult implicit_forward_phase2(const Design& x, const HyperParams& hp, SolverState state,
                                              const EngineOptions& opts, const Vector* crit_grad,
                                              const Jacobian* jac_init) {
  const Index p = x.cols();
  const IndexList& support = state.support;
  const auto s = static_cast<Index>(support.size());
  const Index cols = hp.kind == ModelKind::lasso ? 1 : hp.kind == ModelKind::wlasso ? s : 2;

  ImplicitForwardResult out;
  out.dr = Matrix::Zero(x.rows(), cols);
  if (opts.n_iter_jac <= 0) {
    out.no_iterations = true;
    out.jac = Jacobian::zero(hp.kind, p);
    out.jac.support = support;
    if (hp.kind == ModelKind::wlasso) out.jac.cols = support;
    out.jac.block = Matrix::Zero(hp.kind == ModelKind::wlasso ? s : 0, hp.kind == ModelKind::wlasso ? s : 0);
    out.state = std::move(state);
    return out;
  }

  Matrix js = Matrix::Zero(s, cols);
  if (jac_init != nullptr && jac_init->kind == hp.kind && jac_init->p == p) {
    const Matrix prev = jac_init->to_dense();
    for (Index a = 0; a < s; ++a) {
      if (hp.kind == ModelKind::wlasso) {
        for (Index b = 0; b < s; ++b) js(a, b) = prev(support[a], support[b]);
      } else {
        js.row(a) = prev.row(support[a]);
      }
    }
  }

  // Per-row multiplier on (J_j + X_j^T dr / ||X_j||^2) and constant forcing.
  const double n = static_cast<double>(x.rows());
  Vector mult = Vector::Ones(s);
  Matrix force = Matrix::Zero(s, cols);
  for (Index a = 0; a < s; ++a) {
    const Index j = support[a];
    const double nrm = x.col_sq_norm(j);
    if (hp.kind == ModelKind::mcp) {
      const auto c = mcp_coord_params(x, j, hp);
      const double z = state.beta[j] + x.col_dot(j, state.residual) / nrm;
      const auto d = mcp_prox_partials(z, c.lam, c.gamma);
      mult[a] = d.d_t;
      force(a, 0) = d.d_lam * c.lam;
      force(a, 1) = d.d_gamma * c.gamma;
    } else {
      force(a, hp.kind == ModelKind::wlasso ? a : 0) = -n * hp.reg(j) * sign_of(state.beta[j]) / nrm;
    }
  }

  Matrix dr = Matrix::Zero(x.rows(), cols);
  for (Index a = 0; a < s; ++a) col_outer_add(x, support[a], -js.row(a), dr);

  Vector g_s;
  double stop_level = 0.0;
  RowVector hg_prev;
  if (crit_grad != nullptr) {
    g_s.resize(s);
    for (Index a = 0; a < s; ++a) g_s[a] = (*crit_grad)[support[a]];
    stop_level = crit_grad->lpNorm<Eigen::Infinity>() * opts.eps_jac;
    hg_prev = g_s.transpose() * js;
  }

  for (int k = 0; k < opts.n_iter_jac; ++k) {
    for (Index a = 0; a < s; ++a) {
      const Index j = support[a];
      const RowVector old = js.row(a);
      js.row(a) = mult[a] * (old + col_dot_rows(x, j, dr) / x.col_sq_norm(j)) + force.row(a);
      col_outer_add(x, j, old - js.row(a), dr);
    }
    ++out.passes;
    if (crit_grad != nullptr) {
      const RowVector hg = g_s.transpose() * js;
      const double change = (hg - hg_prev).lpNorm<Eigen::Infinity>();
      hg_prev = hg;
      if (change <= stop_level) break;
    }
  }

  Matrix dense = Matrix::Zero(p, hyper_count(hp.kind, p));
  for (Index a = 0; a < s; ++a) {
    if (hp.kind == ModelKind::wlasso) {
      for (Index b = 0; b < s; ++b) dense(support[a], support[b]) = js(a, b);
    } else {
      dense.row(support[a]) = js.row(a);
    }
  }
  out.jac = from_dense(hp.kind, dense, support);
  out.dr = std::move(dr);
  out.state = std::move(state);
  return out;
}

}  // namespace

ImplicitForwardResult jacobian_implicit_forward(const Design& x, const Vector& y, const HyperParams& hp,
                                                const EngineOptions& opts, const Vector* crit_grad,
                                                const SolverState* warm, const Jacobian* jac_init) {
  SolverState state = solve(opts.solver, x, y, hp, opts.solver_opts, warm);
  return implicit_forward_phase2(x, hp, std::move(state), opts, crit_grad, jac_init);
}

ImplicitForwardResult jacobian_implicit_forward(const Design& x, const Vector& y, const HyperParams& hp,
                                                const EngineOptions& opts,
                                                const std::function<Vector(const Vector&)>& crit_grad,
                                                const SolverState* warm, const Jacobian* jac_init) {
  SolverState state = solve(opts.solver, x, y, hp, opts.solver_opts, warm);
  const Vector grad = crit_grad(state.beta);
  return implicit_forward_phase2(x, hp, std::move(state), opts, &grad, jac_init);
}

BackwardResult hypergrad_backward(const Design& x, const Vector& y, const HyperParams& hp,
                                  const SolverOptions& opts, const Vector& v, std::size_t memory_cap,
                                  const SolverState* warm) {
  return hypergrad_backward_fn(
      x, y, hp, opts, [&v](const Vector&) { return v; }, memory_cap, warm);
}

BackwardResult hypergrad_backward_fn(const Design& x, const Vector& y, const HyperParams& hp,
                                  const SolverOptions& opts, const std::function<Vector(const Vector&)>& v_of,
                                  std::size_t memory_cap, const SolverState* warm) {
  require_l1(hp, "hypergrad_backward");
  detail::check_inputs(x, y, hp, opts);
  const Index p = x.cols();
  const double n = static_cast<double>(x.rows());
  const bool weighted = hp.kind == ModelKind::wlasso;
  const Vector weights = detail::l1_weights(hp, p);
  Vector thresh(p);
  for (Index j = 0; j < p; ++j) thresh[j] = n * weights[j] / x.col_sq_norm(j);

  // The value of b_j right after its update in epoch k equals its value at
  // the end of epoch k, so one snapshot per epoch carries every sign needed.
  std::vector<Vector> iterates;
  SolverOptions loop_opts = opts;
  loop_opts.on_epoch = [&](int epoch, const Vector& beta) {
    const auto need = static_cast<std::size_t>(iterates.size() + 1) * static_cast<std::size_t>(p);
    if (need > memory_cap) {
      throw Error("hypergrad_backward: iterate storage of " + std::to_string(iterates.size() + 1) + " epochs x " +
                  std::to_string(p) + " coefficients = " + std::to_string(need) + " doubles exceeds the cap of " +
                  std::to_string(memory_cap));
    }
    iterates.push_back(beta);
    if (opts.on_epoch) opts.on_epoch(epoch, beta);
  };

  SolverState st = detail::run_epochs(x, y, hp, loop_opts, warm, [&](SolverState& s) {
    double max_move = 0.0;
    for (Index j = 0; j < p; ++j) {
      const double old = s.beta[j];
      const double z = old + x.col_dot(j, s.residual) / x.col_sq_norm(j);
      const double updated = soft_threshold(z, thresh[j]);
      if (updated != old) {
        s.beta[j] = updated;
        x.col_axpy(j, old - updated, s.residual);
        max_move = std::max(max_move, std::abs(updated - old));
      }
    }
    return max_move;
  });

  const Vector v = v_of(st.beta);
  if (v.size() != p) throw Error("hypergrad_backward: v must have length p");
  if (!v.allFinite()) throw Error("hypergrad_backward: v has non-finite entries");

  // Adjoint alpha kept as u - X^T w so each coordinate step costs O(n).
  Vector u = v;
  Vector w = Vector::Zero(x.rows());
  Vector g = Vector::Zero(hyper_count(hp.kind, p));
  for (auto it = iterates.rbegin(); it != iterates.rend(); ++it) {
    const Vector& b = *it;
    for (Index j = p - 1; j >= 0; --j) {
      const double a = u[j] - x.col_dot(j, w);
      if (b[j] != 0.0) {
        g[weighted ? j : 0] -= thresh[j] * a * sign_of(b[j]);
        x.col_axpy(j, a / x.col_sq_norm(j), w);
      } else {
        u[j] -= a;
      }
    }
  }
  return {std::move(st), std::move(g)};
}

ForwardResult jacobian_forward_mcp(const Design& x, const Vector& y, const HyperParams& hp,
                                   const SolverOptions& opts, const SolverState* warm, const Jacobian* jac_init,
                                   const JacobianObserver& observer) {
  if (hp.kind != ModelKind::mcp) throw Error("jacobian_forward_mcp: expects mcp hyperparameters");
  detail::check_inputs(x, y, hp, opts);
  const Index p = x.cols();
  std::vector<McpCoordParams> params(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) {
    params[j] = mcp_coord_params(x, j, hp);
    if (!(params[j].gamma > 1.0)) {
      throw Error("jacobian_forward_mcp: curvature condition e^gamma ||X_j||^2 / n > 1 fails for column " +
                  std::to_string(j));
    }
  }

  Matrix jac = dense_init(jac_init, ModelKind::mcp, p);
  Matrix dr = -times(x, jac);
  SolverOptions loop_opts = opts;
  loop_opts.on_epoch = [&](int epoch, const Vector& beta) {
    if (opts.on_epoch) opts.on_epoch(epoch, beta);
    if (observer) observer(epoch, beta, jac);
  };

  SolverState st = detail::run_epochs(x, y, hp, loop_opts, warm, [&](SolverState& s) {
    double max_move = 0.0;
    for (Index j = 0; j < p; ++j) {
      const double old = s.beta[j];
      const double nrm = x.col_sq_norm(j);
      const double z = old + x.col_dot(j, s.residual) / nrm;
      const auto& c = params[j];
      const double updated = prox_mcp(z, c.lam, c.gamma);
      if (updated != old) {
        s.beta[j] = updated;
        x.col_axpy(j, old - updated, s.residual);
        max_move = std::max(max_move, std::abs(updated - old));
      }
      const auto d = mcp_prox_partials(z, c.lam, c.gamma);
      const RowVector jac_old = jac.row(j);
      RowVector next(2);
      if (d.d_t == 0.0) {
        next.setZero();
      } else {
        next = d.d_t * (jac_old + col_dot_rows(x, j, dr) / nrm);
      }
      next[0] += d.d_lam * c.lam;
      next[1] += d.d_gamma * c.gamma;
      jac.row(j) = next;
      if (next != jac_old) col_outer_add(x, j, jac_old - next, dr);
    }
    return max_move;
  });
  Jacobian out = from_dense(ModelKind::mcp, jac, st.support);
  return {std::move(st), std::move(out)};
}

SolverOptions fd_probe_options() {
  SolverOptions opts;
  opts.tol = 1e-15;
  opts.beta_tol = 1e-13;
  opts.max_epochs = 1000000;
  return opts;
}

FdJacobian fd_jacobian_oracle(const Design& x, const Vector& y, const HyperParams& hp, InnerSolver solver, double h,
                              std::optional<Index> coord, const SolverOptions& probe_opts) {
  if (!(h > 0.0)) throw Error("fd_jacobian_oracle: h must be positive");
  validate(hp, x.cols());
  const Index r = hp.size();
  if (coord && (*coord < 0 || *coord >= r)) throw Error("fd_jacobian_oracle: coord out of range");

  const auto signs = [](const Vector& b) { return b.unaryExpr([](double v) { return sign_of(v); }).eval(); };
  const SolverState base = solve(solver, x, y, hp, probe_opts);
  const Vector base_sign = signs(base.beta);

  FdJacobian out;
  out.jac = Matrix::Zero(x.cols(), r);
  const Index first = coord ? *coord : 0;
  const Index last = coord ? *coord + 1 : r;
  for (Index i = first; i < last; ++i) {
    HyperParams plus = hp;
    HyperParams minus = hp;
    plus.lam[i] += h;
    minus.lam[i] -= h;
    const SolverState sp = solve(solver, x, y, plus, probe_opts);
    const SolverState sm = solve(solver, x, y, minus, probe_opts);
    if (signs(sp.beta) != base_sign || signs(sm.beta) != base_sign) {
      out.support_stable = false;
      out.note = "support-unstable; FD invalid here (hyperparameter " + std::to_string(i) + ")";
    }
    out.jac.col(i) = (sp.beta - sm.beta) / (2.0 * h);
  }
  return out;
}

RateCertificate convergence_rate_bound(const Design& x, std::span<const Index> support) {
  const auto s = static_cast<Index>(support.size());
  RateCertificate cert;
  if (s == 0) return cert;
  const Matrix gram = x.gram(support);
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success) throw Error("convergence_rate_bound: eigendecomposition failed");
  const Vector ev = eig.eigenvalues();
  if (!(ev.minCoeff() > 1e-12 * std::max(ev.maxCoeff(), 1.0))) {
    throw Error("convergence_rate_bound: support Gram not PD");
  }
  const Matrix root = eig.eigenvectors() * ev.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();

  Matrix product = Matrix::Identity(s, s);
  cert.factors.reserve(static_cast<std::size_t>(s));
  for (Index a = 0; a < s; ++a) {
    const Vector col = root.col(a);
    Matrix factor = Matrix::Identity(s, s) - col * col.transpose() / gram(a, a);
    product = factor * product;
    cert.factors.push_back(std::move(factor));
  }
  const Eigen::JacobiSVD<Matrix> svd(product);
  cert.rate = svd.singularValues()[0];
  return cert;
}

double mahalanobis_norm(const Vector& x, const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() != x.size()) throw Error("mahalanobis_norm: shape mismatch");
  const Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) throw Error("mahalanobis_norm: matrix not PD");
  // x^T A^{-1} x = ||L^{-1} x||^2
  const Vector z = llt.matrixL().solve(x);
  return z.norm();
}

const char* to_string(Engine engine) {
  switch (engine) {
    case Engine::implicit: return "implicit";
    case Engine::implicit_forward: return "implicit_forward";
    case Engine::forward: return "forward";
    case Engine::backward: return "backward";
  }
  return "?";
}

Engine engine_from_string(const std::string& name) {
  if (name == "implicit") return Engine::implicit;
  if (name == "implicit_forward") return Engine::implicit_forward;
  if (name == "forward") return Engine::forward;
  if (name == "backward") return Engine::backward;
  throw Error("unknown engine '" + name + "'");
}

HypergradResult compute_hypergradient(Engine engine, const Design& x, const Vector& y, const HyperParams& hp,
                                      const EngineOptions& opts, const CritGradFn& crit_grad,
                                      const SolverState* warm, const Jacobian* jac_warm) {
  HypergradResult out;
  switch (engine) {
    case Engine::implicit: {
      require_l1(hp, "implicit engine");
      SolverState st = solve(opts.solver, x, y, hp, opts.solver_opts, warm);
      const Vector g = crit_grad(st.beta);
      try {
        Jacobian jac = jacobian_implicit(x, st, hp);
        out.grad = hypergradient(jac, g);
        out.jac = std::move(jac);
        out.state = std::move(st);
      } catch (const GramNotPositiveDefinite&) {
        auto res = implicit_forward_phase2(x, hp, std::move(st), opts, &g, jac_warm);
        out.grad = hypergradient(res.jac, g);
        out.jac = std::move(res.jac);
        out.state = std::move(res.state);
        out.fell_back = true;
      }
      return out;
    }
    case Engine::implicit_forward: {
      auto res = jacobian_implicit_forward(x, y, hp, opts, crit_grad, warm, jac_warm);
      out.grad = hypergradient(res.jac, crit_grad(res.state.beta));
      out.jac = std::move(res.jac);
      out.state = std::move(res.state);
      return out;
    }
    case Engine::forward: {
      auto res = hp.kind == ModelKind::mcp
                     ? jacobian_forward_mcp(x, y, hp, opts.solver_opts, warm, jac_warm)
                     : jacobian_forward_iterdiff(x, y, hp, opts.solver, opts.solver_opts, warm, jac_warm);
      out.grad = hypergradient(res.jac, crit_grad(res.state.beta));
      out.jac = std::move(res.jac);
      out.state = std::move(res.state);
      return out;
    }
    case Engine::backward: {
      require_l1(hp, "backward engine");
      if (opts.solver != InnerSolver::bcd) throw Error("backward engine: differentiates BCD only");
      auto res = hypergrad_backward_fn(x, y, hp, opts.solver_opts, crit_grad, opts.backward_memory_cap);
      out.grad = std::move(res.grad);
      out.state = std::move(res.state);
      return out;
    }
  }
  throw Error("compute_hypergradient: unknown engine");
}

}  // namespace sparseho
