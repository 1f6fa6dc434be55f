#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <span>
#include <variant>
#include <vector>

namespace sparseho {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;
using IndexList = std::vector<Index>;

// Read-only design matrix, dense or compressed-sparse-column. Exposes the
// column-wise kernels coordinate descent needs; everything else goes
// through multiply / multiply_transpose.
class Design {
 public:
  Design() = default;
  explicit Design(Matrix dense);
  explicit Design(SparseMatrix sparse);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  bool is_sparse() const { return std::holds_alternative<SparseMatrix>(data_); }

  const Matrix& dense() const { return std::get<Matrix>(data_); }
  const SparseMatrix& sparse() const { return std::get<SparseMatrix>(data_); }

  // X_j^T v
  double col_dot(Index j, const Vector& v) const;
  // v += a * X_j
  void col_axpy(Index j, double a, Vector& v) const;
  // ||X_j||^2, cached at construction.
  double col_sq_norm(Index j) const { return col_sq_norms_[j]; }
  const Vector& col_sq_norms() const { return col_sq_norms_; }

  Vector multiply(const Vector& beta) const;
  Vector multiply_transpose(const Vector& r) const;

  // Dense copy of the selected columns, n x |cols|.
  Matrix columns(std::span<const Index> cols) const;
  // X_S^T X_S for the selected columns.
  Matrix gram(std::span<const Index> cols) const;
  // Dense copy of the whole matrix.
  Matrix to_dense() const;

  Design select_rows(std::span<const Index> rows) const;
  Design select_columns(std::span<const Index> cols) const;

  IndexList zero_columns() const;

  bool all_finite() const;

 private:
  void cache_norms();

  std::variant<Matrix, SparseMatrix> data_;
  Index rows_ = 0;
  Index cols_ = 0;
  Vector col_sq_norms_;
};

}  // namespace sparseho
