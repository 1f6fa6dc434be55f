#pragma once

// Internal: the epoch loop and stopping rule shared by the plain solvers and
// the differentiated engines, so both stop at the same epoch.

#include "sparseho/solvers.hpp"

namespace sparseho::detail {

void check_inputs(const Design& x, const Vector& y, const HyperParams& hp, const SolverOptions& opts);

SolverState start_state(const Design& x, const Vector& y, const SolverState* warm);

Vector l1_weights(const HyperParams& hp, Index p);

// `epoch(st)` performs one full pass over the coordinates and returns the
// largest coefficient move.
template <typename EpochFn>
SolverState run_epochs(const Design& x, const Vector& y, const HyperParams& hp, const SolverOptions& opts,
                       const SolverState* warm, EpochFn&& epoch) {
  SolverState st = start_state(x, y, warm);
  const double n = static_cast<double>(x.rows());
  const double f0 = y.squaredNorm() / (2.0 * n);
  double f_prev = st.residual.squaredNorm() / (2.0 * n) + penalty_value(st.beta, hp);
  for (int k = 0; k < opts.max_epochs; ++k) {
    const double max_move = epoch(st);
    ++st.epochs;
    const double f_new = st.residual.squaredNorm() / (2.0 * n) + penalty_value(st.beta, hp);
    st.objective_trace.push_back(f_new);
    if (opts.on_epoch) opts.on_epoch(st.epochs, st.beta);
    const bool small_decrease = f0 == 0.0 || (opts.tol > 0.0 && (f_prev - f_new) / f0 < opts.tol);
    const bool small_move = opts.beta_tol <= 0.0 || max_move <= opts.beta_tol;
    f_prev = f_new;
    if (small_decrease && small_move) {
      st.converged = true;
      break;
    }
  }
  st.support = support_of(st.beta);
  return st;
}

}  // namespace sparseho::detail
