#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <iosfwd>
#include <string>
#include <vector>

namespace colmg {

using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;

/// Compressed sparse row storage. Column indices within a row are sorted and
/// duplicates are summed on construction from triplets.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using Triplet = Eigen::Triplet<double, int>;

SparseMatrix from_triplets(int rows, int cols, const std::vector<Triplet>& entries);

/// Triple product left * mid * right, pruned of explicit zeros.
SparseMatrix triple_product(const SparseMatrix& left, const SparseMatrix& mid,
                            const SparseMatrix& right);

SparseMatrix sparse_identity(int n);

/// Writes `m` in Matrix Market coordinate format (general, real).
void write_matrix_market(std::ostream& os, const SparseMatrix& m);
void write_matrix_market(const std::string& path, const SparseMatrix& m);
SparseMatrix read_matrix_market(std::istream& is);

}  // namespace colmg
