#include "sparseho_cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "sparseho/criteria.hpp"
#include "sparseho/csv.hpp"
#include "sparseho/data.hpp"
#include "sparseho/error.hpp"
#include "sparseho/hypergrad.hpp"
#include "sparseho/outer.hpp"
#include "sparseho/solvers.hpp"

namespace fs = std::filesystem;

namespace sparseho::cli {
namespace {

const double kLn10 = std::log(10.0);

// Raised for inconsistent flags; maps to exit code 2.
struct ConfigError : Error {
  using Error::Error;
};

struct DataFlags {
  std::string data_dir;
  std::string svmlight;
  long n = 100;
  long p = 200;
  long k = 5;
  double snr = 3.0;
  std::string design = "iid";
  double rho = 0.0;
  bool nonunique = false;
};

struct RunFlags {
  std::string model = "lasso";
  std::string criterion = "heldout";
  std::string methods;
  int budget = 50;
  int init_budget = -1;  // defaults to budget
  double tol = 1e-5;
  int n_iter_jac = 100;
  double eps_jac = 1e-3;
  std::uint64_t seed = 0;
  std::string out;
  std::string solver = "bcd";
  std::optional<double> lambda;
  std::optional<double> gamma;
  std::string jacobian = "none";
  std::string iters = "5,10,20,50,100,200,500";
};

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

ModelKind parse_model(const std::string& name) {
  if (name == "lasso") return ModelKind::lasso;
  if (name == "wlasso") return ModelKind::wlasso;
  if (name == "mcp") return ModelKind::mcp;
  throw ConfigError("--model: unknown model '" + name + "' (lasso|wlasso|mcp)");
}

InnerSolver parse_solver(const std::string& name) {
  if (name == "bcd") return InnerSolver::bcd;
  if (name == "ista") return InnerSolver::ista;
  throw ConfigError("--solver: unknown solver '" + name + "' (bcd|ista)");
}

Dataset keep_columns(const Dataset& d, const IndexList& keep) {
  Dataset out = d;
  out.X = d.X.select_columns(keep);
  if (d.beta_true) {
    Vector b(static_cast<Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) b[static_cast<Index>(i)] = (*d.beta_true)[keep[i]];
    out.beta_true = b;
  }
  if (!d.feature_names.empty()) {
    out.feature_names.clear();
    for (Index j : keep) out.feature_names.push_back(d.feature_names[static_cast<std::size_t>(j)]);
  }
  out.degenerate_columns.clear();
  return out;
}

IndexList complement(Index p, const IndexList& drop) {
  IndexList keep;
  std::size_t at = 0;
  for (Index j = 0; j < p; ++j) {
    if (at < drop.size() && drop[at] == j) {
      ++at;
    } else {
      keep.push_back(j);
    }
  }
  return keep;
}

// Solvers reject all-zero columns, which sparse inputs often contain.
Dataset drop_zero_columns(const Dataset& d, const IndexList& zero) {
  if (zero.empty()) return d;
  std::cerr << "note: dropping " << zero.size() << " all-zero column(s)\n";
  return keep_columns(d, complement(d.p(), zero));
}

Dataset load_dataset(const DataFlags& f, std::uint64_t seed) {
  if (!f.data_dir.empty() && !f.svmlight.empty()) throw ConfigError("--data-dir and --svmlight are exclusive");
  Dataset d;
  if (!f.data_dir.empty()) {
    d = read_csv_dir(f.data_dir);
  } else if (!f.svmlight.empty()) {
    d = parse_svmlight(fs::path(f.svmlight));
  } else {
    if (f.n <= 0 || f.p <= 0) throw ConfigError("--n and --p must be positive");
    if (f.nonunique) {
      d = make_nonunique_design(f.n, f.p, seed);
    } else {
      DesignSpec spec;
      if (f.design == "iid") {
        spec.kind = DesignKind::iid_gaussian;
      } else if (f.design == "toeplitz") {
        spec.kind = DesignKind::toeplitz;
        spec.rho = f.rho;
      } else {
        throw ConfigError("--design: unknown design '" + f.design + "' (iid|toeplitz)");
      }
      d = synthesize_dataset(f.n, f.p, spec, f.k, f.snr, seed);
    }
  }
  validate(d);
  return drop_zero_columns(d, d.degenerate_columns);
}

// Smallest log-gamma keeping every per-coordinate MCP concavity above 3.
double default_log_gamma(const Design& x) {
  const double min_l = x.col_sq_norms().minCoeff() / static_cast<double>(x.rows());
  return std::log(3.0) - std::log(min_l);
}

HyperParams initial_hp(ModelKind kind, const Design& x, double lam, std::optional<double> gamma) {
  switch (kind) {
    case ModelKind::lasso: return HyperParams::lasso(lam);
    case ModelKind::wlasso: return HyperParams::wlasso(Vector::Constant(x.cols(), lam));
    case ModelKind::mcp: return HyperParams::mcp(lam, gamma ? *gamma : default_log_gamma(x));
  }
  throw Error("unknown model");
}

EngineOptions engine_options(const RunFlags& f) {
  EngineOptions o;
  o.solver = parse_solver(f.solver);
  o.solver_opts.tol = f.tol;
  o.n_iter_jac = f.n_iter_jac;
  o.eps_jac = f.eps_jac;
  if (f.tol < 0) throw ConfigError("--tol must be nonnegative");
  if (f.n_iter_jac < 0) throw ConfigError("--n-iter-jac must be nonnegative");
  if (!(f.eps_jac >= 0)) throw ConfigError("--eps-jac must be nonnegative");
  return o;
}

std::string sparse_vector_csv(const Vector& v) {
  std::string s = "index,value\n";
  for (Index j = 0; j < v.size(); ++j) {
    if (v[j] != 0.0) s += std::to_string(j) + ',' + csv::format(v[j]) + '\n';
  }
  return s;
}

std::string sparse_matrix_csv(const Matrix& m) {
  std::string s = "row,col,value\n";
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (m(i, j) != 0.0) s += std::to_string(i) + ',' + std::to_string(j) + ',' + csv::format(m(i, j)) + '\n';
    }
  }
  return s;
}

fs::path require_out(const RunFlags& f) {
  if (f.out.empty()) throw ConfigError("--out is required");
  fs::create_directories(f.out);
  return f.out;
}

// The criterion a run is tuned against, built per worker so no state is
// shared between methods.
struct Problem {
  Dataset train;
  Dataset val;   // heldout only
  Dataset test;  // heldout only
  bool sure = false;
  double sigma = 0.0;
  Vector delta;
  double epsilon = 0.0;
  double lam_max = 0.0;

  OuterObjective objective(Engine engine, const EngineOptions& opts) const {
    if (sure) {
      auto obj = std::make_shared<SureObjective>(train.X, train.y, sigma, delta, epsilon, engine, opts);
      return [obj](const HyperParams& hp, bool g) { return obj->evaluate(hp, g); };
    }
    auto obj = std::make_shared<HeldOutObjective>(train.X, train.y, val.X, val.y, engine, opts);
    return [obj](const HyperParams& hp, bool g) { return obj->evaluate(hp, g); };
  }
};

Problem make_problem(const Dataset& data, const std::string& criterion, std::uint64_t seed) {
  Problem pr;
  if (criterion == "sure") {
    if (!data.sigma || !(*data.sigma > 0.0)) {
      throw ConfigError("--criterion sure: the dataset has no noise level sigma (use heldout)");
    }
    pr.sure = true;
    pr.train = data;
    pr.sigma = *data.sigma;
    pr.delta = gaussian_probe(data.n(), seed);
    pr.epsilon = default_sure_epsilon(pr.sigma, data.n());
  } else if (criterion == "heldout") {
    if (data.n() < 3) throw ConfigError("--criterion heldout: need at least 3 samples to split");
    const Split s = split_three_way(data, seed);
    Dataset train = subset_rows(data, s.train);
    // Columns that vanish on the training rows cannot be fit; drop them
    // from every block so shapes agree.
    const IndexList zero = train.X.zero_columns();
    const IndexList keep = complement(data.p(), zero);
    pr.train = zero.empty() ? train : keep_columns(train, keep);
    pr.val = subset_rows(data, s.val);
    pr.test = subset_rows(data, s.test);
    if (!zero.empty()) {
      std::cerr << "note: dropping " << zero.size() << " column(s) that are zero on the training rows\n";
      pr.val = keep_columns(pr.val, keep);
      pr.test = keep_columns(pr.test, keep);
    }
  } else {
    throw ConfigError("--criterion: unknown criterion '" + criterion + "' (heldout|sure)");
  }
  pr.lam_max = lambda_max(pr.train.X, pr.train.y);
  return pr;
}

int cmd_generate(const DataFlags& df, const RunFlags& rf) {
  if (!df.data_dir.empty() || !df.svmlight.empty()) throw ConfigError("generate: takes synthetic flags only");
  const fs::path out = require_out(rf);
  const Dataset d = load_dataset(df, rf.seed);
  write_csv_dir(d, out);
  std::cout << "wrote " << d.n() << " x " << d.p() << " dataset to " << out.string() << '\n';
  return 0;
}

int cmd_solve(const DataFlags& df, const RunFlags& rf) {
  const fs::path out = require_out(rf);
  const Dataset d = load_dataset(df, rf.seed);
  const ModelKind kind = parse_model(rf.model);
  const EngineOptions eo = engine_options(rf);
  const double lam = rf.lambda ? *rf.lambda : lambda_max(d.X, d.y) - kLn10;
  const HyperParams hp = initial_hp(kind, d.X, lam, rf.gamma);

  const auto t0 = std::chrono::steady_clock::now();
  SolverState st;
  std::optional<Matrix> jac;
  if (rf.jacobian == "none") {
    st = solve(eo.solver, d.X, d.y, hp, eo.solver_opts);
  } else if (rf.jacobian == "implicit") {
    st = solve(eo.solver, d.X, d.y, hp, eo.solver_opts);
    jac = jacobian_implicit(d.X, st, hp).to_dense();
  } else if (rf.jacobian == "forward") {
    ForwardResult r = kind == ModelKind::mcp ? jacobian_forward_mcp(d.X, d.y, hp, eo.solver_opts)
                                             : jacobian_forward_iterdiff(d.X, d.y, hp, eo.solver, eo.solver_opts);
    st = std::move(r.state);
    jac = r.jac.to_dense();
  } else if (rf.jacobian == "implicit_forward") {
    ImplicitForwardResult r = jacobian_implicit_forward(d.X, d.y, hp, eo);
    st = std::move(r.state);
    jac = r.jac.to_dense();
  } else {
    throw ConfigError("--jacobian: unknown engine '" + rf.jacobian + "' (none|implicit|forward|implicit_forward)");
  }
  const double wall = ms_since(t0);

  csv::write_file_atomic(out / "beta.csv", sparse_vector_csv(st.beta));
  if (jac) csv::write_file_atomic(out / "jacobian.csv", sparse_matrix_csv(*jac));
  std::string s = "model,n,p,lambda,epochs,converged,s_hat,objective,wall_ms\n";
  s += rf.model + ',' + std::to_string(d.n()) + ',' + std::to_string(d.p()) + ',' + csv::format(lam) + ',' +
       std::to_string(st.epochs) + ',' + (st.converged ? "1" : "0") + ',' + std::to_string(st.s_hat()) + ',' +
       csv::format(objective_value(d.X, d.y, st.beta, hp)) + ',' + csv::format(wall) + '\n';
  csv::write_file_atomic(out / "solve.csv", s);
  std::cout << rf.model << ": " << st.s_hat() << " nonzeros after " << st.epochs << " epochs\n";
  return 0;
}

int cmd_gradcheck(const DataFlags& df, const RunFlags& rf) {
  const fs::path out = require_out(rf);
  const ModelKind kind = parse_model(rf.model);
  if (kind == ModelKind::mcp) throw ConfigError("--model mcp: gradcheck compares engines on convex models only");
  const Dataset d = load_dataset(df, rf.seed);
  const Problem pr = make_problem(d, rf.criterion, rf.seed);
  EngineOptions eo = engine_options(rf);
  const HyperParams hp = initial_hp(kind, pr.train.X, pr.lam_max - kLn10, std::nullopt);

  std::vector<int> iters;
  for (const auto& s : split_list(rf.iters)) {
    const int k = std::stoi(s);
    if (k <= 0) throw ConfigError("--iters: counts must be positive");
    iters.push_back(k);
  }
  std::vector<Engine> engines;
  const std::string methods = rf.methods.empty() ? "implicit,forward,implicit_forward,backward" : rf.methods;
  for (const auto& m : split_list(methods)) {
    try {
      engines.push_back(engine_from_string(m));
    } catch (const Error&) {
      throw ConfigError("--methods: unknown engine '" + m + "'");
    }
  }

  // Reference: implicit differentiation at a fully converged solution.
  EngineOptions ref_opts = eo;
  ref_opts.solver_opts = fd_probe_options();
  const SolverState ref_state = solve(ref_opts.solver, pr.train.X, pr.train.y, hp, ref_opts.solver_opts);
  const auto t_ref = std::chrono::steady_clock::now();
  const Vector ref = pr.objective(Engine::implicit, ref_opts)(hp, true).grad;
  const double ref_ms = ms_since(t_ref);
  const int ref_epochs = ref_state.epochs;

  const Index r = hp.size();
  std::string s = "engine,n_inner_iters,wall_ms";
  if (r == 1) {
    s += ",grad";
  } else {
    for (Index j = 0; j < r; ++j) s += ",grad" + std::to_string(j);
  }
  s += ",dist_to_implicit\n";
  auto row = [&](const std::string& name, int k, double ms, const Vector& g) {
    s += name + ',' + std::to_string(k) + ',' + csv::format(ms);
    for (Index j = 0; j < r; ++j) s += ',' + csv::format(g[j]);
    s += ',' + csv::format((g - ref).norm()) + '\n';
  };
  row("implicit", ref_epochs, ref_ms, ref);
  for (Engine engine : engines) {
    for (int k : iters) {
      EngineOptions o = eo;
      o.solver_opts.tol = 0.0;  // exactly k epochs
      o.solver_opts.max_epochs = k;
      const auto t0 = std::chrono::steady_clock::now();
      const OuterEval ev = pr.objective(engine, o)(hp, true);
      row(to_string(engine), k, ms_since(t0), ev.grad);
    }
  }
  csv::write_file_atomic(out / "gradcheck.csv", s);
  std::cout << "gradcheck: " << engines.size() << " engines x " << iters.size() << " inner-iteration counts\n";
  return 0;
}

struct MethodResult {
  std::string method;
  bool ok = false;
  std::string error;
  double best_criterion = 0.0;
  double metric = 0.0;
  double wall_ms = 0.0;
};

int worker_count(std::size_t jobs) {
  unsigned cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SPARSE_HO_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) cap = static_cast<unsigned>(v);
  }
  return static_cast<int>(std::min<std::size_t>(cap, std::max<std::size_t>(jobs, 1)));
}

int cmd_tune(const DataFlags& df, const RunFlags& rf) {
  const fs::path out = require_out(rf);
  const ModelKind kind = parse_model(rf.model);
  const EngineOptions eo = engine_options(rf);
  if (rf.budget < 1) throw ConfigError("--budget must be at least 1");
  const int init_budget = rf.init_budget < 0 ? rf.budget : rf.init_budget;
  if (kind == ModelKind::wlasso && init_budget < 1) throw ConfigError("--init-budget must be at least 1");

  std::string methods = rf.methods;
  if (methods.empty()) methods = kind == ModelKind::lasso ? "grid,random,implicit,implicit_forward,forward" : "implicit_forward,forward";
  const std::vector<std::string> names = split_list(methods);
  if (names.empty()) throw ConfigError("--methods: empty list");
  for (const auto& m : names) {
    if (m == "grid" || m == "random") {
      if (kind != ModelKind::lasso) throw ConfigError("--methods " + m + ": search methods support --model lasso only");
      continue;
    }
    Engine e;
    try {
      e = engine_from_string(m);
    } catch (const Error&) {
      throw ConfigError("--methods: unknown method '" + m + "'");
    }
    if (kind == ModelKind::mcp && (e == Engine::implicit || e == Engine::backward)) {
      throw ConfigError("--methods " + m + ": not available for --model mcp (use forward or implicit_forward)");
    }
  }

  const Dataset d = load_dataset(df, rf.seed);
  const Problem pr = make_problem(d, rf.criterion, rf.seed);
  // mse against the ground truth when there is one, else test-split loss.
  std::optional<Vector> truth;
  if (pr.train.beta_true && pr.train.beta_true->squaredNorm() > 0.0) truth = *pr.train.beta_true;
  if (!truth && pr.sure) throw ConfigError("--criterion sure: no ground truth to report mse against");
  const std::string metric_name = truth ? "mse" : "test_loss";

  std::vector<MethodResult> results(names.size());
  std::mutex log_mu;
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t i = next++; i < names.size(); i = next++) {
      MethodResult& res = results[i];
      res.method = names[i];
      const auto t0 = std::chrono::steady_clock::now();
      try {
        TuneTrace trace;
        if (res.method == "grid" || res.method == "random") {
          const OuterObjective obj = pr.objective(Engine::implicit_forward, eo);
          trace = res.method == "grid" ? grid_search(obj, pr.lam_max, rf.budget)
                                       : random_search(obj, pr.lam_max, rf.budget, rf.seed);
        } else {
          const Engine engine = engine_from_string(res.method);
          const OuterObjective obj = pr.objective(engine, eo);
          TuneOptions to;
          to.budget = rf.budget;
          HyperParams hp0 = initial_hp(kind, pr.train.X, pr.lam_max - kLn10, rf.gamma);
          if (kind == ModelKind::lasso) to.bounds = default_lasso_bounds(pr.lam_max);
          if (kind == ModelKind::wlasso) {
            const WlassoInit init = wlasso_init(obj, pr.train.p(), pr.lam_max, std::nullopt, init_budget);
            csv::write_file_atomic(out / ("init_" + res.method + ".csv"), trace_to_csv(init.trace));
            hp0 = init.hp;
          }
          trace = tune_hypergrad(obj, hp0, to);
        }
        csv::write_file_atomic(out / ("trace_" + res.method + ".csv"), trace_to_csv(trace));
        res.best_criterion = trace.best_criterion;
        if (truth) {
          res.metric = mse_to_truth(trace.best_beta, *truth);
        } else {
          res.metric = (pr.test.y - pr.test.X.multiply(trace.best_beta)).squaredNorm() /
                       static_cast<double>(pr.test.n());
        }
        res.ok = true;
      } catch (const std::exception& e) {
        res.error = e.what();
        std::lock_guard<std::mutex> lock(log_mu);
        std::cerr << "method " << res.method << " failed: " << e.what() << '\n';
      }
      res.wall_ms = ms_since(t0);
    }
  };
  const int workers = worker_count(names.size());
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  double optimum = std::numeric_limits<double>::infinity();
  bool all_ok = true;
  for (const auto& r : results) {
    if (r.ok) optimum = std::min(optimum, r.best_criterion);
    all_ok = all_ok && r.ok;
  }
  std::string s = "method,best_criterion,optimum," + metric_name + ",total_wall_ms,seed,status\n";
  for (const auto& r : results) {
    s += r.method + ',';
    s += r.ok ? csv::format(r.best_criterion) : std::string();
    s += ',' + (std::isfinite(optimum) ? csv::format(optimum) : std::string()) + ',';
    s += r.ok ? csv::format(r.metric) : std::string();
    s += ',' + csv::format(r.wall_ms) + ',' + std::to_string(rf.seed) + ',' + (r.ok ? "ok" : "failed") + '\n';
  }
  csv::write_file_atomic(out / "summary.csv", s);
  std::cout << s;
  return all_ok ? 0 : 1;
}

void add_data_flags(CLI::App* sub, DataFlags& df) {
  sub->add_option("--data-dir", df.data_dir, "Dataset directory written by `generate`");
  sub->add_option("--svmlight", df.svmlight, "svmlight/libsvm file");
  sub->add_option("--n", df.n, "Samples (synthetic)");
  sub->add_option("--p", df.p, "Features (synthetic)");
  sub->add_option("--k", df.k, "Nonzero true coefficients (synthetic)");
  sub->add_option("--snr", df.snr, "Signal-to-noise ratio (synthetic)");
  sub->add_option("--design", df.design, "iid | toeplitz");
  sub->add_option("--rho", df.rho, "Toeplitz correlation");
  sub->add_flag("--nonunique", df.nonunique, "Design with a non-unique Lasso solution");
}

void add_run_flags(CLI::App* sub, RunFlags& rf) {
  sub->add_option("--seed", rf.seed, "Seed for data, split and probe direction");
  sub->add_option("--out", rf.out, "Output directory");
  sub->add_option("--tol", rf.tol, "Inner solver tolerance")->capture_default_str();
  sub->add_option("--solver", rf.solver, "bcd | ista");
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Hyperparameter selection for sparse regression by implicit differentiation"};
  app.require_subcommand(1);
  DataFlags df;
  RunFlags rf;

  CLI::App* gen = app.add_subcommand("generate", "Write a synthetic dataset as CSV");
  add_data_flags(gen, df);
  add_run_flags(gen, rf);

  CLI::App* sol = app.add_subcommand("solve", "Solve one inner problem");
  add_data_flags(sol, df);
  add_run_flags(sol, rf);
  sol->add_option("--model", rf.model, "lasso | wlasso | mcp");
  sol->add_option("--lambda", rf.lambda, "Log regularization (default lambda_max - ln 10)");
  sol->add_option("--gamma", rf.gamma, "MCP log concavity");
  sol->add_option("--jacobian", rf.jacobian, "none | implicit | forward | implicit_forward");
  sol->add_option("--n-iter-jac", rf.n_iter_jac, "Max Jacobian epochs after the solve (implicit_forward)")->capture_default_str();
  sol->add_option("--eps-jac", rf.eps_jac, "Jacobian early-exit tolerance (implicit_forward)")->capture_default_str();

  CLI::App* gc = app.add_subcommand("gradcheck", "Hypergradient cost and accuracy per engine");
  add_data_flags(gc, df);
  add_run_flags(gc, rf);
  gc->add_option("--model", rf.model, "lasso | wlasso");
  gc->add_option("--criterion", rf.criterion, "heldout | sure");
  gc->add_option("--methods", rf.methods, "Engines, comma separated");
  gc->add_option("--iters", rf.iters, "Inner iteration counts, comma separated")->capture_default_str();
  gc->add_option("--n-iter-jac", rf.n_iter_jac, "Max Jacobian epochs after the solve (implicit_forward)")->capture_default_str();
  gc->add_option("--eps-jac", rf.eps_jac, "Jacobian early-exit tolerance (implicit_forward)")->capture_default_str();

  CLI::App* tn = app.add_subcommand("tune", "Tune the regularization with several methods");
  add_data_flags(tn, df);
  add_run_flags(tn, rf);
  tn->add_option("--model", rf.model, "lasso | wlasso | mcp");
  tn->add_option("--criterion", rf.criterion, "heldout | sure");
  tn->add_option("--methods", rf.methods, "grid,random,implicit,implicit_forward,forward,backward");
  tn->add_option("--budget", rf.budget, "Outer evaluations per method")->capture_default_str();
  tn->add_option("--init-budget", rf.init_budget, "wlasso initialization budget (default: --budget)");
  tn->add_option("--gamma", rf.gamma, "MCP initial log concavity");
  tn->add_option("--n-iter-jac", rf.n_iter_jac, "Max Jacobian epochs after the solve (implicit_forward)")->capture_default_str();
  tn->add_option("--eps-jac", rf.eps_jac, "Jacobian early-exit tolerance (implicit_forward)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen->parsed()) return cmd_generate(df, rf);
    if (sol->parsed()) return cmd_solve(df, rf);
    if (gc->parsed()) return cmd_gradcheck(df, rf);
    return cmd_tune(df, rf);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"sparseho"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace sparseho::cli
