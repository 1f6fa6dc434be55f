#include "sparseho/outer.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "sparseho/csv.hpp"
#include "sparseho/error.hpp"
#include "sparseho/rng.hpp"

namespace sparseho {

namespace {

using Clock = std::chrono::steady_clock;

const double kLn10 = std::log(10.0);

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

class Recorder {
 public:
  explicit Recorder(TuneTrace& trace) : trace_(trace), start_(Clock::now()) {}

  void add(const HyperParams& hp, const OuterEval& ev, double step) {
    TraceEntry e{hp, ev.value, ev.grad, step, ms_since(start_)};
    trace_.iterates.push_back(std::move(e));
    // Strict comparison keeps the earliest point on ties.
    if (trace_.best_index < 0 || ev.value < trace_.best_criterion) {
      trace_.best_index = static_cast<int>(trace_.iterates.size()) - 1;
      trace_.best_criterion = ev.value;
      trace_.best_hp = hp;
      trace_.best_beta = ev.beta;
    }
  }

 private:
  TuneTrace& trace_;
  Clock::time_point start_;
};

std::string describe(const TuneTrace& trace) {
  std::ostringstream os;
  os << "trace so far (" << trace.iterates.size() << " iterates):";
  for (std::size_t i = 0; i < trace.iterates.size(); ++i) {
    const auto& e = trace.iterates[i];
    os << "\n  " << i << ": lam[0]=" << csv::format(e.hp.lam.size() ? e.hp.lam[0] : 0.0)
       << " criterion=" << csv::format(e.criterion) << " step=" << csv::format(e.step);
  }
  return os.str();
}

void require_finite(const OuterEval& ev, bool with_grad, const TuneTrace& trace, const HyperParams& hp) {
  const bool ok = std::isfinite(ev.value) && (!with_grad || ev.grad.allFinite());
  if (ok) return;
  std::ostringstream os;
  os << "tune_hypergrad: non-finite " << (std::isfinite(ev.value) ? "hypergradient" : "criterion")
     << " at lam[0]=" << csv::format(hp.lam[0]) << "; " << describe(trace);
  throw Error(os.str());
}

Vector clip(Vector lam, const std::optional<Bounds>& bounds) {
  if (bounds) lam = lam.cwiseMax(bounds->lower).cwiseMin(bounds->upper);
  return lam;
}

}  // namespace

Bounds default_lasso_bounds(double lam_max) { return {lam_max - 4.0 * kLn10 + std::log(1e-2), lam_max}; }

std::vector<double> lasso_grid(double lam_max, int n_points) {
  if (n_points < 2) throw Error("grid_search: n_points must be at least 2");
  std::vector<double> grid(static_cast<std::size_t>(n_points));
  const double span = 4.0 * kLn10;
  for (int i = 0; i < n_points; ++i) grid[i] = lam_max - span * i / (n_points - 1);
  return grid;
}

TuneTrace grid_search(const OuterObjective& eval, double lam_max, int n_points) {
  const auto grid = lasso_grid(lam_max, n_points);
  TuneTrace trace;
  Recorder rec(trace);
  for (double lam : grid) {
    const HyperParams hp = HyperParams::lasso(lam);
    rec.add(hp, eval(hp, false), 0.0);
    ++trace.budget_used;
  }
  return trace;
}

TuneTrace random_search(const OuterObjective& eval, double lam_max, int n_points, std::uint64_t seed) {
  if (n_points < 1) throw Error("random_search: n_points must be at least 1");
  CounterRng rng(seed);
  TuneTrace trace;
  Recorder rec(trace);
  const double span = 4.0 * kLn10;
  for (int i = 0; i < n_points; ++i) {
    const HyperParams hp = HyperParams::lasso(lam_max - span * rng.uniform());
    rec.add(hp, eval(hp, false), 0.0);
    ++trace.budget_used;
  }
  return trace;
}

TuneTrace tune_hypergrad(const OuterObjective& eval, const HyperParams& hp0, const TuneOptions& opts) {
  if (opts.budget < 1) throw Error("tune_hypergrad: budget must be at least 1");
  TuneTrace trace;
  Recorder rec(trace);

  HyperParams cur = hp0;
  cur.lam = clip(cur.lam, opts.bounds);
  OuterEval cur_ev = eval(cur, true);
  require_finite(cur_ev, true, trace, cur);
  rec.add(cur, cur_ev, 0.0);
  trace.budget_used = 1;

  const double gmax = cur_ev.grad.lpNorm<Eigen::Infinity>();
  if (gmax <= opts.stationary_tol) {
    trace.note = "stationary at start";
    return trace;
  }
  double rho = 1.0 / gmax;

  while (trace.budget_used < opts.budget) {
    bool accepted = false;
    bool stuck = false;
    for (int halving = 0; halving <= opts.max_halvings; ++halving) {
      HyperParams cand = cur;
      cand.lam = clip(cur.lam - rho * cur_ev.grad, opts.bounds);
      if (cand.lam == cur.lam) {
        stuck = true;  // the step is clipped away entirely
        break;
      }
      OuterEval ev = eval(cand, true);
      require_finite(ev, false, trace, cand);
      if (ev.value < cur_ev.value) {
        require_finite(ev, true, trace, cand);
        cur = std::move(cand);
        cur_ev = std::move(ev);
        accepted = true;
        break;
      }
      rho *= 0.5;
    }
    ++trace.budget_used;
    if (!accepted) {
      // No move: the line search is deterministic and would fail the same way.
      rec.add(cur, cur_ev, 0.0);
      trace.note = stuck ? "step clipped to zero by bounds" : "line search found no decrease";
      break;
    }
    rec.add(cur, cur_ev, rho);
    rho *= 2.0;
  }
  return trace;
}

OuterObjective regularized_objective(OuterObjective eval, double gamma_reg) {
  return [eval = std::move(eval), gamma_reg](const HyperParams& hp, bool need_grad) {
    OuterEval ev = eval(hp, need_grad);
    ev.value += gamma_reg * hp.lam.squaredNorm();
    if (need_grad) ev.grad += 2.0 * gamma_reg * hp.lam;
    return ev;
  };
}

WlassoInit wlasso_init(const OuterObjective& eval, Index p, double lam_max, std::optional<double> gamma_reg,
                       int budget) {
  WlassoInit out;
  if (gamma_reg) {
    if (!(*gamma_reg > 0.0) || !std::isfinite(*gamma_reg)) throw Error("wlasso_init: gamma_reg must be positive");
    out.gamma_reg = *gamma_reg;
  } else {
    out.gamma_reg = eval(HyperParams::wlasso(Vector::Constant(p, lam_max)), false).value / 10.0;
    if (!(out.gamma_reg > 0.0)) throw Error("wlasso_init: criterion at lam_max is not positive; pass gamma_reg");
  }
  const HyperParams hp0 = HyperParams::wlasso(Vector::Constant(p, lam_max - kLn10));
  TuneOptions opts;
  opts.budget = budget;
  out.trace = tune_hypergrad(regularized_objective(eval, out.gamma_reg), hp0, opts);
  out.hp = out.trace.best_hp;
  return out;
}

std::string trace_to_csv(const TuneTrace& trace) {
  std::ostringstream os;
  const Index r = trace.iterates.empty() ? 1 : trace.iterates.front().hp.size();
  os << "iter";
  if (r == 1) {
    os << ",lambda";
  } else {
    for (Index j = 0; j < r; ++j) os << ",lambda" << j;
  }
  os << ",criterion,grad_norm,step,wall_ms\n";
  for (std::size_t i = 0; i < trace.iterates.size(); ++i) {
    const auto& e = trace.iterates[i];
    os << i;
    for (Index j = 0; j < e.hp.size(); ++j) os << ',' << csv::format(e.hp.lam[j]);
    const double gnorm = e.hypergrad.size() ? e.hypergrad.norm() : 0.0;
    os << ',' << csv::format(e.criterion) << ',' << csv::format(gnorm) << ',' << csv::format(e.step) << ','
       << csv::format(e.wall_ms) << '\n';
  }
  return os.str();
}

}  // namespace sparseho
