#include "sparseho/criteria.hpp"
#include "sparseho/rng.hpp"

#include <cmath>

#include "sparseho/error.hpp"

namespace sparseho {

CriterionEval heldout_eval(const Vector& beta, const Design& x_val, const Vector& y_val) {
  if (x_val.cols() != beta.size() || x_val.rows() != y_val.size()) throw Error("heldout_eval: shape mismatch");
  const Vector resid = y_val - x_val.multiply(beta);
  CriterionEval out;
  out.value = resid.squaredNorm();
  out.grad = -2.0 * x_val.multiply_transpose(resid);
  return out;
}

SolveFn make_solve_fn(InnerSolver solver, SolverOptions opts) {
  return [solver, opts = std::move(opts)](const Design& x, const Vector& y, const HyperParams& hp,
                                          const SolverState* warm) { return solve(solver, x, y, hp, opts, warm); };
}

DofResult dof_fdmc(const SolveFn& solve_fn, const Design& x, const Vector& y, const HyperParams& hp, double epsilon,
                   const Vector& delta, const SolverState* warm_y, const SolverState* warm_y_delta) {
  if (!(epsilon > 0.0)) throw Error("dof_fdmc: epsilon must be positive");
  if (delta.size() != y.size()) throw Error("dof_fdmc: delta must have length n");
  DofResult out;
  out.at_y = solve_fn(x, y, hp, warm_y);
  const Vector y_delta = y + epsilon * delta;
  out.at_y_delta = solve_fn(x, y_delta, hp, warm_y_delta);
  out.dof = x.multiply(out.at_y_delta.beta - out.at_y.beta).dot(delta) / epsilon;
  return out;
}

double default_sure_epsilon(double sigma, Index n) { return 2.0 * sigma / std::pow(static_cast<double>(n), 0.3); }

Vector gaussian_probe(Index n, std::uint64_t seed) {
  CounterRng rng(seed ^ 0xd1b54a32d192ed03ULL);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

SureEval sure_eval(const Design& x, const Vector& y, const HyperParams& hp, double sigma, double epsilon,
                   const Vector& delta, const SolveFn& solve_fn, const SolverState* warm_y,
                   const SolverState* warm_y_delta) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw Error("sure_eval: sigma must be finite and non-negative");
  DofResult dof = dof_fdmc(solve_fn, x, y, hp, epsilon, delta, warm_y, warm_y_delta);
  const double n = static_cast<double>(x.rows());
  const double s2 = sigma * sigma;

  SureEval out;
  const Vector resid = y - x.multiply(dof.at_y.beta);
  out.eval.value = resid.squaredNorm() - n * s2 + 2.0 * s2 * dof.dof;
  const Vector xt_delta = (2.0 * s2 / epsilon) * x.multiply_transpose(delta);
  out.grad_y = -2.0 * x.multiply_transpose(resid) - xt_delta;
  out.grad_y_delta = xt_delta;
  out.eval.grad = out.grad_y + out.grad_y_delta;
  out.eval.aux = SureAux{epsilon, delta, dof.dof, sigma};
  out.at_y = std::move(dof.at_y);
  out.at_y_delta = std::move(dof.at_y_delta);
  return out;
}

double mse_to_truth(const Vector& beta, const Vector& beta_true) {
  if (beta.size() != beta_true.size()) throw Error("mse_to_truth: length mismatch");
  const double denom = beta_true.squaredNorm();
  if (denom == 0.0) throw Error("mse_to_truth: beta_true is zero");
  return (beta - beta_true).squaredNorm() / denom;
}

HeldOutObjective::HeldOutObjective(Design x_train, Vector y_train, Design x_val, Vector y_val, Engine engine,
                                   EngineOptions opts)
    : x_train_(std::move(x_train)),
      y_train_(std::move(y_train)),
      x_val_(std::move(x_val)),
      y_val_(std::move(y_val)),
      engine_(engine),
      opts_(std::move(opts)) {
  if (x_train_.cols() != x_val_.cols()) throw Error("HeldOutObjective: train and validation widths differ");
  if (x_train_.rows() != y_train_.size() || x_val_.rows() != y_val_.size()) {
    throw Error("HeldOutObjective: response length mismatch");
  }
}

void HeldOutObjective::reset() {
  warm_.reset();
  jac_.reset();
}

OuterEval HeldOutObjective::evaluate(const HyperParams& hp, bool need_grad) {
  // Warm starts only carry over between problems of the same shape.
  if (warm_ && jac_ && jac_->kind != hp.kind) reset();
  const SolverState* warm = warm_ ? &*warm_ : nullptr;
  OuterEval out;
  if (!need_grad) {
    warm_ = solve(opts_.solver, x_train_, y_train_, hp, opts_.solver_opts, warm);
    out.value = heldout_eval(warm_->beta, x_val_, y_val_).value;
    out.beta = warm_->beta;
    return out;
  }
  const CritGradFn grad_fn = [this](const Vector& beta) { return heldout_eval(beta, x_val_, y_val_).grad; };
  HypergradResult res =
      compute_hypergradient(engine_, x_train_, y_train_, hp, opts_, grad_fn, warm, jac_ ? &*jac_ : nullptr);
  out.value = heldout_eval(res.state.beta, x_val_, y_val_).value;
  out.grad = std::move(res.grad);
  out.beta = res.state.beta;
  warm_ = std::move(res.state);
  if (res.jac) jac_ = std::move(res.jac);
  return out;
}

SureObjective::SureObjective(Design x, Vector y, double sigma, Vector delta, double epsilon, Engine engine,
                             EngineOptions opts)
    : x_(std::move(x)),
      y_(std::move(y)),
      sigma_(sigma),
      delta_(std::move(delta)),
      epsilon_(epsilon),
      engine_(engine),
      opts_(std::move(opts)) {
  if (!(sigma_ >= 0.0) || !std::isfinite(sigma_)) throw Error("SureObjective: sigma must be finite and non-negative");
  if (!(epsilon_ > 0.0)) throw Error("SureObjective: epsilon must be positive");
  if (delta_.size() != y_.size()) throw Error("SureObjective: delta must have length n");
  y_delta_ = y_ + epsilon_ * delta_;
  grad_delta_const_ = (2.0 * sigma_ * sigma_ / epsilon_) * x_.multiply_transpose(delta_);
}

void SureObjective::reset() {
  warm_y_.reset();
  warm_y_delta_.reset();
  jac_y_.reset();
  jac_y_delta_.reset();
}

OuterEval SureObjective::evaluate(const HyperParams& hp, bool need_grad) {
  if (jac_y_ && jac_y_->kind != hp.kind) reset();
  const SolverState* warm_y = warm_y_ ? &*warm_y_ : nullptr;
  const SolverState* warm_yd = warm_y_delta_ ? &*warm_y_delta_ : nullptr;
  OuterEval out;
  if (!need_grad) {
    SureEval s = sure_eval(x_, y_, hp, sigma_, epsilon_, delta_, make_solve_fn(opts_.solver, opts_.solver_opts),
                           warm_y, warm_yd);
    out.value = s.eval.value;
    out.beta = s.at_y.beta;
    warm_y_ = std::move(s.at_y);
    warm_y_delta_ = std::move(s.at_y_delta);
    return out;
  }

  const CritGradFn grad_y = [this](const Vector& beta) {
    return (-2.0 * x_.multiply_transpose(y_ - x_.multiply(beta)) - grad_delta_const_).eval();
  };
  const CritGradFn grad_yd = [this](const Vector&) { return grad_delta_const_; };
  HypergradResult r1 =
      compute_hypergradient(engine_, x_, y_, hp, opts_, grad_y, warm_y, jac_y_ ? &*jac_y_ : nullptr);
  HypergradResult r2 = compute_hypergradient(engine_, x_, y_delta_, hp, opts_, grad_yd, warm_yd,
                                             jac_y_delta_ ? &*jac_y_delta_ : nullptr);

  const double n = static_cast<double>(x_.rows());
  const double s2 = sigma_ * sigma_;
  const double dof = x_.multiply(r2.state.beta - r1.state.beta).dot(delta_) / epsilon_;
  out.value = (y_ - x_.multiply(r1.state.beta)).squaredNorm() - n * s2 + 2.0 * s2 * dof;
  out.grad = r1.grad + r2.grad;
  out.beta = r1.state.beta;
  warm_y_ = std::move(r1.state);
  warm_y_delta_ = std::move(r2.state);
  if (r1.jac) jac_y_ = std::move(r1.jac);
  if (r2.jac) jac_y_delta_ = std::move(r2.jac);
  return out;
}

}  // namespace sparseho
