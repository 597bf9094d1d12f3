#include "hbp/core_formats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace hbp {

namespace {

bool row_major_less(const Triplet& a, const Triplet& b) {
  return a.row != b.row ? a.row < b.row : a.col < b.col;
}

void require_length(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw std::invalid_argument(std::string(what) + ": vector length " + std::to_string(got) +
                                " does not match matrix dimension " + std::to_string(want));
  }
}

}  // namespace

void canonicalize(TripletMatrix& m) {
  for (const auto& t : m.entries) {
    if (t.row >= m.rows || t.col >= m.cols) {
      throw std::invalid_argument("triplet (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
                                  ") outside " + std::to_string(m.rows) + "x" + std::to_string(m.cols));
    }
  }
  std::stable_sort(m.entries.begin(), m.entries.end(), row_major_less);

  std::size_t out = 0;
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    if (out > 0 && m.entries[out - 1].row == m.entries[i].row && m.entries[out - 1].col == m.entries[i].col) {
      m.entries[out - 1].value += m.entries[i].value;
    } else {
      m.entries[out++] = m.entries[i];
    }
  }
  m.entries.resize(out);
}

TripletMatrix expand_symmetric(const TripletMatrix& m) {
  if (m.rows != m.cols) {
    throw std::invalid_argument("expand_symmetric: matrix is not square");
  }

  // Fold every off-diagonal coordinate onto the lower triangle; a repeated
  // folded key means both (i, j) and (j, i) were stored.
  std::vector<std::pair<Index, Index>> folded;
  for (const auto& t : m.entries) {
    if (t.row != t.col) folded.emplace_back(std::max(t.row, t.col), std::min(t.row, t.col));
  }
  std::sort(folded.begin(), folded.end());
  if (auto it = std::adjacent_find(folded.begin(), folded.end()); it != folded.end()) {
    throw std::invalid_argument("expand_symmetric: both (" + std::to_string(it->first) + ", " +
                                std::to_string(it->second) + ") and its mirror are stored");
  }

  TripletMatrix out{m.rows, m.cols, {}};
  out.entries.reserve(2 * m.entries.size());
  for (const auto& t : m.entries) {
    out.entries.push_back(t);
    if (t.row != t.col) out.entries.push_back({t.col, t.row, t.value});
  }
  canonicalize(out);
  return out;
}

CsrMatrix coo_to_csr(const TripletMatrix& m) {
  TripletMatrix sorted = m;
  canonicalize(sorted);

  CsrMatrix csr;
  csr.rows = m.rows;
  csr.cols = m.cols;
  csr.row_ptr.assign(m.rows + 1, 0);
  csr.col_idx.reserve(sorted.nnz());
  csr.values.reserve(sorted.nnz());
  for (const auto& t : sorted.entries) {
    ++csr.row_ptr[t.row + 1];
    csr.col_idx.push_back(t.col);
    csr.values.push_back(t.value);
  }
  for (std::size_t r = 0; r < m.rows; ++r) csr.row_ptr[r + 1] += csr.row_ptr[r];
  return csr;
}

TripletMatrix csr_to_coo(const CsrMatrix& m) {
  TripletMatrix out{m.rows, m.cols, {}};
  out.entries.reserve(m.nnz());
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (Offset j = m.row_ptr[r]; j < m.row_ptr[r + 1]; ++j) {
      out.entries.push_back({static_cast<Index>(r), m.col_idx[j], m.values[j]});
    }
  }
  return out;
}

void validate(const CsrMatrix& m) {
  if (m.row_ptr.size() != m.rows + 1) throw std::invalid_argument("csr: row_ptr length != rows + 1");
  if (m.row_ptr.front() != 0) throw std::invalid_argument("csr: row_ptr[0] != 0");
  if (m.row_ptr.back() != m.col_idx.size() || m.col_idx.size() != m.values.size()) {
    throw std::invalid_argument("csr: row_ptr[rows] does not match array lengths");
  }
  for (std::size_t r = 0; r < m.rows; ++r) {
    if (m.row_ptr[r] > m.row_ptr[r + 1]) throw std::invalid_argument("csr: row_ptr decreasing");
    for (Offset j = m.row_ptr[r]; j < m.row_ptr[r + 1]; ++j) {
      if (m.col_idx[j] >= m.cols) throw std::invalid_argument("csr: column index out of range");
      if (j > m.row_ptr[r] && m.col_idx[j] <= m.col_idx[j - 1]) {
        throw std::invalid_argument("csr: columns not strictly increasing in row " + std::to_string(r));
      }
    }
  }
}

std::vector<double> densify(const TripletMatrix& m) {
  std::vector<double> dense(m.rows * m.cols, 0.0);
  for (const auto& t : m.entries) dense[t.row * m.cols + t.col] += t.value;
  return dense;
}

std::vector<double> densify(const CsrMatrix& m) {
  std::vector<double> dense(m.rows * m.cols, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (Offset j = m.row_ptr[r]; j < m.row_ptr[r + 1]; ++j) dense[r * m.cols + m.col_idx[j]] += m.values[j];
  }
  return dense;
}

DenseVector csr_spmv(const CsrMatrix& a, std::span<const double> x) {
  require_length(x.size(), a.cols, "csr_spmv");
  DenseVector y(a.rows, 0.0);
  for (std::size_t r = 0; r < a.rows; ++r) {
    double sum = 0.0;
    for (Offset j = a.row_ptr[r]; j < a.row_ptr[r + 1]; ++j) sum += a.values[j] * x[a.col_idx[j]];
    y[r] = sum;
  }
  return y;
}

DenseVector dense_oracle_spmv(const TripletMatrix& a, std::span<const double> x) {
  require_length(x.size(), a.cols, "dense_oracle_spmv");
  DenseVector y(a.rows, 0.0);
  for (const auto& t : a.entries) y[t.row] += t.value * x[t.col];
  return y;
}

double max_relative_error(std::span<const double> got, std::span<const double> want) {
  require_length(got.size(), want.size(), "max_relative_error");
  double worst = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double err = std::abs(got[i] - want[i]) / std::max(1.0, std::abs(want[i]));
    if (std::isnan(err)) return err;
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace hbp
