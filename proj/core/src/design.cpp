#include "sparseho/design.hpp"

#include <cmath>

namespace sparseho {

Design::Design(Matrix dense)
    : data_(std::move(dense)) {
  rows_ = std::get<Matrix>(data_).rows();
  cols_ = std::get<Matrix>(data_).cols();
  cache_norms();
}

Design::Design(SparseMatrix sparse)
    : data_(std::move(sparse)) {
  auto& s = std::get<SparseMatrix>(data_);
  s.makeCompressed();
  rows_ = s.rows();
  cols_ = s.cols();
  cache_norms();
}

void Design::cache_norms() {
  col_sq_norms_.resize(cols_);
  if (is_sparse()) {
    const auto& s = sparse();
    for (Index j = 0; j < cols_; ++j) {
      double acc = 0.0;
      for (SparseMatrix::InnerIterator it(s, j); it; ++it) acc += it.value() * it.value();
      col_sq_norms_[j] = acc;
    }
  } else {
    col_sq_norms_ = dense().colwise().squaredNorm().transpose();
  }
}

double Design::col_dot(Index j, const Vector& v) const {
  if (is_sparse()) {
    double acc = 0.0;
    for (SparseMatrix::InnerIterator it(sparse(), j); it; ++it) acc += it.value() * v[it.row()];
    return acc;
  }
  return dense().col(j).dot(v);
}

void Design::col_axpy(Index j, double a, Vector& v) const {
  if (a == 0.0) return;
  if (is_sparse()) {
    for (SparseMatrix::InnerIterator it(sparse(), j); it; ++it) v[it.row()] += a * it.value();
    return;
  }
  v.noalias() += a * dense().col(j);
}

Vector Design::multiply(const Vector& beta) const {
  if (is_sparse()) return sparse() * beta;
  return dense() * beta;
}

Vector Design::multiply_transpose(const Vector& r) const {
  if (is_sparse()) return sparse().transpose() * r;
  return dense().transpose() * r;
}

Matrix Design::columns(std::span<const Index> cols) const {
  Matrix out = Matrix::Zero(rows_, static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const Index j = cols[k];
    if (is_sparse()) {
      for (SparseMatrix::InnerIterator it(sparse(), j); it; ++it) out(it.row(), k) = it.value();
    } else {
      out.col(k) = dense().col(j);
    }
  }
  return out;
}

Matrix Design::gram(std::span<const Index> cols) const {
  const Matrix xs = columns(cols);
  return xs.transpose() * xs;
}

Matrix Design::to_dense() const {
  if (is_sparse()) return Matrix(sparse());
  return dense();
}

Design Design::select_rows(std::span<const Index> rows) const {
  if (is_sparse()) {
    // Row gather on CSC: build the selection as a sparse matrix product.
    SparseMatrix sel(static_cast<Index>(rows.size()), rows_);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) trip.emplace_back(static_cast<Index>(i), rows[i], 1.0);
    sel.setFromTriplets(trip.begin(), trip.end());
    SparseMatrix out = sel * sparse();
    return Design(std::move(out));
  }
  Matrix out(static_cast<Index>(rows.size()), cols_);
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = dense().row(rows[i]);
  return Design(std::move(out));
}

Design Design::select_columns(std::span<const Index> cols) const {
  if (is_sparse()) {
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      for (SparseMatrix::InnerIterator it(sparse(), cols[k]); it; ++it) {
        trip.emplace_back(it.row(), static_cast<Index>(k), it.value());
      }
    }
    SparseMatrix out(rows_, static_cast<Index>(cols.size()));
    out.setFromTriplets(trip.begin(), trip.end());
    return Design(std::move(out));
  }
  return Design(columns(cols));
}

IndexList Design::zero_columns() const {
  IndexList out;
  for (Index j = 0; j < cols_; ++j) {
    if (col_sq_norms_[j] == 0.0) out.push_back(j);
  }
  return out;
}

bool Design::all_finite() const {
  if (is_sparse()) {
    const auto& s = sparse();
    for (Index k = 0; k < s.nonZeros(); ++k) {
      if (!std::isfinite(s.valuePtr()[k])) return false;
    }
    return true;
  }
  return dense().allFinite();
}

}  // namespace sparseho
