#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sparseho/design.hpp"

namespace sparseho {

enum class DesignKind { iid_gaussian, toeplitz };

struct DesignSpec {
  DesignKind kind = DesignKind::iid_gaussian;
  double rho = 0.0;  // toeplitz only, in [0, 1)
};

// How a dataset came to be; serialized to meta.csv.
struct DatasetMeta {
  std::string design = "iid_gaussian";
  double rho = 0.0;
  Index k_nonzero = 0;
  double snr = 0.0;
  std::uint64_t seed = 0;
};

struct Dataset {
  Design X;
  Vector y;
  std::optional<Vector> beta_true;
  std::optional<double> sigma;
  std::vector<std::string> feature_names;
  // All-zero columns. Solvers reject these; callers drop them first.
  IndexList degenerate_columns;
  DatasetMeta meta;

  Index n() const { return X.rows(); }
  Index p() const { return X.cols(); }
};

struct Split {
  IndexList train;
  IndexList val;
  IndexList test;
};

// Gaussian design (i.i.d. or AR(1)/Toeplitz correlated with corr rho^|j-k|),
// k_nonzero unit coefficients on a seeded random support, and Gaussian noise
// rescaled so that ||X b*|| / ||y - X b*|| == snr. An infinite snr gives
// noiseless targets.
Dataset synthesize_dataset(Index n, Index p, DesignSpec design, Index k_nonzero, double snr,
                           std::uint64_t seed);

// Design whose Lasso solution set is not a singleton: X_3 = (X_1 + X_2)/2,
// columns 4.. orthogonal to the first four, y = -X_0 + X_1 + X_2.
Dataset make_nonunique_design(Index n, Index p, std::uint64_t seed);

// svmlight / libsvm text: `<label> <idx>:<val> ...`, 1-based strictly
// ascending indices, optional `qid:` token and `#` comments.
Dataset parse_svmlight(const std::filesystem::path& path);
Dataset parse_svmlight(std::istream& in, const std::string& source_name = "<stream>");
void write_svmlight(const Dataset& data, std::ostream& out);

// Seeded shuffle, then consecutive blocks of sizes ceil/floor(n/3), larger
// blocks first: n = 10 gives (4, 3, 3).
Split split_three_way(Index n, std::uint64_t seed);
Split split_three_way(const Dataset& data, std::uint64_t seed);

Dataset subset_rows(const Dataset& data, std::span<const Index> rows);

// Directory layout: X.csv (header j0..j{p-1}, row-major), y.csv, meta.csv,
// and beta_true.csv when the ground truth is known.
void write_csv_dir(const Dataset& data, const std::filesystem::path& dir);
Dataset read_csv_dir(const std::filesystem::path& dir);

// Throws if the dataset breaks a structural invariant (shapes, NaN/Inf).
void validate(const Dataset& data);

}  // namespace sparseho
