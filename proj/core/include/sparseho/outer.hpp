#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sparseho/criteria.hpp"
#include "sparseho/solvers.hpp"

namespace sparseho {

struct TraceEntry {
  HyperParams hp;
  double criterion = 0.0;
  Vector hypergrad;  // empty for the search methods
  double step = 0.0;
  double wall_ms = 0.0;  // since the start of the run
};

struct TuneTrace {
  std::vector<TraceEntry> iterates;
  HyperParams best_hp;
  double best_criterion = 0.0;
  Vector best_beta;
  int best_index = -1;
  int budget_used = 0;
  std::string note;  // why the run stopped before its budget, if it did
};

// Componentwise clip box for the log-hyperparameters.
struct Bounds {
  double lower;
  double upper;
};

// [lam_max - 4 ln 10 + ln 1e-2, lam_max]
Bounds default_lasso_bounds(double lam_max);

// Grid from lam_max down to lam_max - 4 ln 10, evaluated in that order so
// each inner solve warm-starts from the previous point.
std::vector<double> lasso_grid(double lam_max, int n_points);

TuneTrace grid_search(const OuterObjective& eval, double lam_max, int n_points);

// Uniform draws on [lam_max - 4 ln 10, lam_max].
TuneTrace random_search(const OuterObjective& eval, double lam_max, int n_points, std::uint64_t seed);

struct TuneOptions {
  int budget = 50;
  std::optional<Bounds> bounds;
  int max_halvings = 20;
  // Gradient size treated as stationary at the starting point.
  double stationary_tol = 1e-12;
};

// Hypergradient descent with a backtracking line search that doubles the
// step after each accepted move. One budget unit is one outer iteration.
TuneTrace tune_hypergrad(const OuterObjective& eval, const HyperParams& hp0, const TuneOptions& opts);

// eval + gamma * sum(lam_j^2), gradient + 2 gamma lam.
OuterObjective regularized_objective(OuterObjective eval, double gamma_reg);

struct WlassoInit {
  HyperParams hp;
  double gamma_reg = 0.0;
  TuneTrace trace;
};

// Tune the regularized weighted-Lasso objective from (lam_max - ln 10) * 1.
// Without `gamma_reg`, the weight is C(beta(lam_max)) / 10.
WlassoInit wlasso_init(const OuterObjective& eval, Index p, double lam_max, std::optional<double> gamma_reg,
                       int budget);

// iter,lambda...,criterion,grad_norm,step,wall_ms
std::string trace_to_csv(const TuneTrace& trace);

}  // namespace sparseho
