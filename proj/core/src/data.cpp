#include "sparseho/data.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "sparseho/csv.hpp"
#include "sparseho/error.hpp"
#include "sparseho/rng.hpp"

namespace sparseho {

namespace {

Matrix gaussian_matrix(Index n, Index p, CounterRng& rng) {
  Matrix out(n, p);
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < n; ++i) out(i, j) = rng.normal();
  }
  return out;
}

const char* design_name(DesignKind kind) {
  return kind == DesignKind::toeplitz ? "toeplitz" : "iid_gaussian";
}

}  // namespace

Dataset synthesize_dataset(Index n, Index p, DesignSpec design, Index k_nonzero, double snr,
                           std::uint64_t seed) {
  if (n < 1 || p < 1) throw Error("synthesize_dataset: n and p must be >= 1");
  if (k_nonzero < 0 || k_nonzero > p) throw Error("synthesize_dataset: k_nonzero must lie in [0, p]");
  if (!(snr > 0.0)) throw Error("synthesize_dataset: snr must be positive");
  if (design.kind == DesignKind::toeplitz && !(design.rho >= 0.0 && design.rho < 1.0)) {
    throw Error("synthesize_dataset: toeplitz rho must lie in [0, 1)");
  }

  CounterRng rng(seed);
  Matrix x = gaussian_matrix(n, p, rng);
  if (design.kind == DesignKind::toeplitz) {
    // AR(1) across features gives corr(X_j, X_k) = rho^|j-k| exactly.
    const double rho = design.rho;
    const double innov = std::sqrt(1.0 - rho * rho);
    for (Index j = 1; j < p; ++j) x.col(j) = rho * x.col(j - 1) + innov * x.col(j);
  }

  const auto perm = permutation(p, rng);
  Vector beta_true = Vector::Zero(p);
  for (Index k = 0; k < k_nonzero; ++k) beta_true[perm[k]] = 1.0;

  const Vector signal = x * beta_true;
  const double signal_norm = signal.norm();
  if (signal_norm == 0.0 && std::isfinite(snr)) {
    throw Error("synthesize_dataset: cannot scale noise, X * beta_true is zero");
  }

  Vector noise(n);
  for (Index i = 0; i < n; ++i) noise[i] = rng.normal();
  double sigma = 0.0;
  if (std::isfinite(snr)) {
    noise *= signal_norm / (snr * noise.norm());
    sigma = noise.norm() / std::sqrt(static_cast<double>(n));
  } else {
    noise.setZero();
  }

  Dataset out;
  out.X = Design(std::move(x));
  out.y = signal + noise;
  out.beta_true = std::move(beta_true);
  out.sigma = sigma;
  out.degenerate_columns = out.X.zero_columns();
  out.meta = DatasetMeta{design_name(design.kind), design.rho, k_nonzero, snr, seed};
  return out;
}

Dataset make_nonunique_design(Index n, Index p, std::uint64_t seed) {
  if (p < 5) throw Error("make_nonunique_design: p must be >= 5");
  if (n < 4) throw Error("make_nonunique_design: n must be >= 4 (orthogonalization is rank-deficient)");

  CounterRng rng(seed);
  Matrix x(n, p);
  for (Index j = 0; j < 3; ++j) {
    for (Index i = 0; i < n; ++i) x(i, j) = rng.normal();
  }
  x.col(3) = (x.col(1) + x.col(2)) / 2.0;
  for (Index j = 4; j < p; ++j) {
    for (Index i = 0; i < n; ++i) x(i, j) = rng.normal();
  }

  // span(X_0..X_3) = span(X_0..X_2); two Gram-Schmidt passes reach ~1e-15.
  Eigen::HouseholderQR<Matrix> qr(x.leftCols(3));
  const Matrix q = qr.householderQ() * Matrix::Identity(n, 3);
  if (p > 4) {
    auto rest = x.rightCols(p - 4);
    for (int pass = 0; pass < 2; ++pass) rest -= q * (q.transpose() * rest);
  }

  Dataset out;
  out.y = -x.col(0) + x.col(1) + x.col(2);
  Vector beta_true = Vector::Zero(p);
  beta_true.head(3) << -1.0, 1.0, 1.0;
  out.X = Design(std::move(x));
  out.beta_true = std::move(beta_true);
  out.sigma = 0.0;
  out.degenerate_columns = out.X.zero_columns();
  out.meta = DatasetMeta{"nonunique", 0.0, 3, std::numeric_limits<double>::infinity(), seed};
  return out;
}

Dataset parse_svmlight(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("parse_svmlight: cannot open " + path.string());
  return parse_svmlight(in, path.string());
}

Dataset parse_svmlight(std::istream& in, const std::string& source_name) {
  std::vector<double> labels;
  std::vector<Eigen::Triplet<double>> entries;
  Index max_col = 0;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream tokens(line);
    std::string tok;
    if (!(tokens >> tok)) continue;  // blank or comment-only line

    const auto where = source_name + ":" + std::to_string(line_no);
    const Index row = static_cast<Index>(labels.size());
    labels.push_back(csv::parse_double(tok, where));

    Index prev = 0;
    while (tokens >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw Error("parse_svmlight: malformed feature '" + tok + "' at " + where);
      const std::string_view key(tok.data(), colon);
      if (key == "qid") continue;
      const double idx_value = csv::parse_double(key, where);
      if (idx_value < 1 || idx_value != std::floor(idx_value)) {
        throw Error("parse_svmlight: feature index must be a positive integer at " + where);
      }
      const auto idx = static_cast<Index>(idx_value);
      if (idx <= prev) {
        throw Error("parse_svmlight: indices must be strictly ascending (duplicate or out of order) at " + where);
      }
      prev = idx;
      const double value = csv::parse_double(std::string_view(tok).substr(colon + 1), where);
      if (!std::isfinite(value)) throw Error("parse_svmlight: non-finite value at " + where);
      if (value != 0.0) entries.emplace_back(row, idx - 1, value);
      max_col = std::max(max_col, idx);
    }
  }
  if (labels.empty()) throw Error("parse_svmlight: no samples in " + source_name);

  SparseMatrix x(static_cast<Index>(labels.size()), max_col);
  x.setFromTriplets(entries.begin(), entries.end());

  Dataset out;
  out.X = Design(std::move(x));
  out.y = Eigen::Map<const Vector>(labels.data(), static_cast<Index>(labels.size()));
  out.degenerate_columns = out.X.zero_columns();
  out.meta.design = "svmlight";
  return out;
}

void write_svmlight(const Dataset& data, std::ostream& out) {
  const SparseMatrix rows = data.X.is_sparse() ? SparseMatrix(data.X.sparse())
                                               : SparseMatrix(data.X.dense().sparseView());
  const Eigen::SparseMatrix<double, Eigen::RowMajor> by_row(rows);
  for (Index i = 0; i < data.n(); ++i) {
    out << csv::format(data.y[i]);
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(by_row, i); it; ++it) {
      out << ' ' << (it.col() + 1) << ':' << csv::format(it.value());
    }
    out << '\n';
  }
}

Split split_three_way(Index n, std::uint64_t seed) {
  if (n < 3) throw Error("split_three_way: need at least 3 samples");
  CounterRng rng(seed);
  const auto perm = permutation(n, rng);
  const Index base = n / 3;
  const Index extra = n % 3;
  const Index sizes[3] = {base + (extra > 0), base + (extra > 1), base};
  Split split;
  IndexList* parts[3] = {&split.train, &split.val, &split.test};
  Index pos = 0;
  for (int part = 0; part < 3; ++part) {
    parts[part]->assign(perm.begin() + pos, perm.begin() + pos + sizes[part]);
    pos += sizes[part];
  }
  return split;
}

Split split_three_way(const Dataset& data, std::uint64_t seed) {
  return split_three_way(data.n(), seed);
}

Dataset subset_rows(const Dataset& data, std::span<const Index> rows) {
  Dataset out;
  out.X = data.X.select_rows(rows);
  out.y.resize(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out.y[static_cast<Index>(i)] = data.y[rows[i]];
  out.beta_true = data.beta_true;
  out.sigma = data.sigma;
  out.feature_names = data.feature_names;
  out.degenerate_columns = out.X.zero_columns();
  out.meta = data.meta;
  return out;
}

void write_csv_dir(const Dataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const Matrix x = data.X.to_dense();

  std::string xs;
  for (Index j = 0; j < x.cols(); ++j) xs += (j ? ",j" : "j") + std::to_string(j);
  xs += '\n';
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      if (j) xs += ',';
      xs += csv::format(x(i, j));
    }
    xs += '\n';
  }
  csv::write_file_atomic(dir / "X.csv", xs);

  std::string ys = "y\n";
  for (Index i = 0; i < data.y.size(); ++i) ys += csv::format(data.y[i]) + '\n';
  csv::write_file_atomic(dir / "y.csv", ys);

  if (data.beta_true) {
    std::string bs = "beta_true\n";
    for (Index j = 0; j < data.beta_true->size(); ++j) bs += csv::format((*data.beta_true)[j]) + '\n';
    csv::write_file_atomic(dir / "beta_true.csv", bs);
  }

  std::string meta = "n,p,snr,seed,sigma,design,rho,k_nonzero\n";
  meta += std::to_string(data.n()) + ',' + std::to_string(data.p()) + ',' + csv::format(data.meta.snr) + ',' +
          std::to_string(data.meta.seed) + ',' + (data.sigma ? csv::format(*data.sigma) : std::string()) + ',' +
          data.meta.design + ',' + csv::format(data.meta.rho) + ',' + std::to_string(data.meta.k_nonzero) + '\n';
  csv::write_file_atomic(dir / "meta.csv", meta);
}

namespace {

std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path) {
  std::istringstream in(csv::read_file(path));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    rows.push_back(csv::split_line(line));
  }
  return rows;
}

}  // namespace

Dataset read_csv_dir(const std::filesystem::path& dir) {
  const auto xrows = read_rows(dir / "X.csv");
  const auto yrows = read_rows(dir / "y.csv");
  if (xrows.empty()) throw Error("read_csv_dir: no samples in " + (dir / "X.csv").string());
  if (xrows.size() != yrows.size()) throw Error("read_csv_dir: X.csv and y.csv row counts differ");
  const auto n = static_cast<Index>(xrows.size());
  const auto p = static_cast<Index>(xrows.front().size());
  Matrix x(n, p);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    if (static_cast<Index>(xrows[i].size()) != p) throw Error("read_csv_dir: ragged X.csv at row " + std::to_string(i + 1));
    for (Index j = 0; j < p; ++j) x(i, j) = csv::parse_double(xrows[i][j], "X.csv");
    y[i] = csv::parse_double(yrows[i].at(0), "y.csv");
  }

  Dataset out;
  out.X = Design(std::move(x));
  out.y = std::move(y);
  if (std::filesystem::exists(dir / "beta_true.csv")) {
    const auto brows = read_rows(dir / "beta_true.csv");
    Vector b(static_cast<Index>(brows.size()));
    for (std::size_t j = 0; j < brows.size(); ++j) b[static_cast<Index>(j)] = csv::parse_double(brows[j].at(0), "beta_true.csv");
    out.beta_true = std::move(b);
  }
  if (std::filesystem::exists(dir / "meta.csv")) {
    const auto mrows = read_rows(dir / "meta.csv");
    if (!mrows.empty() && mrows[0].size() >= 8) {
      const auto& m = mrows[0];
      out.meta.snr = csv::parse_double(m[2], "meta.csv snr");
      out.meta.seed = std::stoull(m[3]);
      if (!m[4].empty()) out.sigma = csv::parse_double(m[4], "meta.csv sigma");
      out.meta.design = m[5];
      out.meta.rho = csv::parse_double(m[6], "meta.csv rho");
      out.meta.k_nonzero = std::stol(m[7]);
    }
  }
  out.degenerate_columns = out.X.zero_columns();
  validate(out);
  return out;
}

void validate(const Dataset& data) {
  if (data.y.size() != data.n()) throw Error("dataset: y length differs from the number of rows of X");
  if (data.beta_true && data.beta_true->size() != data.p()) throw Error("dataset: beta_true length differs from p");
  if (!data.X.all_finite() || !data.y.allFinite()) throw Error("dataset: NaN or Inf entries");
  if (data.sigma && !(*data.sigma >= 0.0)) throw Error("dataset: sigma must be nonnegative");
}

}  // namespace sparseho
