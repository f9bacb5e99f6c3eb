#include "colmg/sparse.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace colmg {

SparseMatrix from_triplets(int rows, int cols, const std::vector<Triplet>& entries) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(entries.begin(), entries.end());
  m.makeCompressed();
  return m;
}

SparseMatrix triple_product(const SparseMatrix& left, const SparseMatrix& mid,
                            const SparseMatrix& right) {
  if (left.cols() != mid.rows() || mid.cols() != right.rows()) {
    throw std::invalid_argument("triple_product: dimension mismatch");
  }
  SparseMatrix tmp = mid * right;
  SparseMatrix out = left * tmp;
  out.prune(0.0);
  out.makeCompressed();
  return out;
}

SparseMatrix sparse_identity(int n) {
  SparseMatrix m(n, n);
  m.setIdentity();
  m.makeCompressed();
  return m;
}

void write_matrix_market(std::ostream& os, const SparseMatrix& m) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  os << std::setprecision(17);
  for (int r = 0; r < m.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) {
      os << (it.row() + 1) << ' ' << (it.col() + 1) << ' ' << it.value() << '\n';
    }
  }
}

void write_matrix_market(const std::string& path, const SparseMatrix& m) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_matrix_market(os, m);
}

SparseMatrix read_matrix_market(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("%%MatrixMarket", 0) != 0) {
    throw std::runtime_error("read_matrix_market: missing banner");
  }
  while (std::getline(is, line) && !line.empty() && line[0] == '%') {
  }
  std::istringstream header(line);
  int rows = 0, cols = 0;
  long nnz = 0;
  if (!(header >> rows >> cols >> nnz)) throw std::runtime_error("read_matrix_market: bad size line");
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(nnz));
  for (long k = 0; k < nnz; ++k) {
    int r = 0, c = 0;
    double v = 0.0;
    if (!(is >> r >> c >> v)) throw std::runtime_error("read_matrix_market: truncated entries");
    entries.emplace_back(r - 1, c - 1, v);
  }
  return from_triplets(rows, cols, entries);
}

}  // namespace colmg
