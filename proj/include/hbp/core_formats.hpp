#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hbp {

using Index = std::uint32_t;  // row / column index
using Offset = std::size_t;   // element position in a storage array

struct Triplet {
  Index row = 0;
  Index col = 0;
  double value = 0.0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

// Coordinate (COO) storage. A canonical TripletMatrix has entries sorted
// row-major with no repeated (row, col) pair.
struct TripletMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Triplet> entries;

  std::size_t nnz() const { return entries.size(); }

  friend bool operator==(const TripletMatrix&, const TripletMatrix&) = default;
};

struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Offset> row_ptr;  // rows + 1
  std::vector<Index> col_idx;
  std::vector<double> values;

  std::size_t nnz() const { return col_idx.size(); }

  friend bool operator==(const CsrMatrix&, const CsrMatrix&) = default;
};

using DenseVector = std::vector<double>;

// Sorts entries row-major and sums repeated (row, col) pairs.
// Throws std::invalid_argument if an entry lies outside rows x cols.
void canonicalize(TripletMatrix& m);

// Mirrors the off-diagonal entries of a triangle-only matrix. Throws
// std::invalid_argument when both (i, j) and (j, i) are present.
TripletMatrix expand_symmetric(const TripletMatrix& m);

CsrMatrix coo_to_csr(const TripletMatrix& m);
TripletMatrix csr_to_coo(const CsrMatrix& m);

// Checks the CSR invariants; throws std::invalid_argument on violation.
void validate(const CsrMatrix& m);

// Row-major dense copy, used only by tests and small-matrix tooling.
std::vector<double> densify(const TripletMatrix& m);
std::vector<double> densify(const CsrMatrix& m);

// Reference CSR kernel: one left-to-right sum per row in storage order.
DenseVector csr_spmv(const CsrMatrix& a, std::span<const double> x);

// Ground-truth kernel. Accumulates every triplet into a dense result
// without relying on any ordering or compression.
DenseVector dense_oracle_spmv(const TripletMatrix& a, std::span<const double> x);

// max_i |got_i - want_i| / max(1, |want_i|)
double max_relative_error(std::span<const double> got, std::span<const double> want);

}  // namespace hbp
