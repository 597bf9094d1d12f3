#include "hbp/partition.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

#include "hbp/worker_pool.hpp"

namespace hbp {

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

}  // namespace

void PartitionConfig::validate() const {
  if (col_width < 1 || row_height < 1 || warp_size < 1) {
    throw std::invalid_argument("partition sizes must be >= 1");
  }
  if (row_height % warp_size != 0) {
    throw std::invalid_argument("row height " + std::to_string(row_height) + " is not a multiple of warp size " +
                                std::to_string(warp_size));
  }
  if (!(fixed_fraction >= 0.0 && fixed_fraction <= 1.0)) {
    throw std::invalid_argument("fixed fraction must lie in [0, 1]");
  }
}

std::size_t BlockLayout::rows_in_block(std::size_t br) const {
  return std::min(row_height, rows - br * row_height);
}

std::size_t BlockLayout::groups_in_block(std::size_t br) const { return ceil_div(rows_in_block(br), warp_size); }

std::size_t BlockLayout::col_end(std::size_t bc) const { return std::min(cols, (bc + 1) * col_width); }

std::span<const std::uint32_t> BlockGrid::row_nnz(std::size_t br, std::size_t bc) const {
  return std::span(nnz_per_row).subspan(slot_offset(br, bc), rows_in_block(br));
}

std::size_t BlockLayout::groups_per_block_column() const {
  // Every row block except possibly the last is full.
  if (num_row_blocks == 0) return 0;
  return (num_row_blocks - 1) * (row_height / warp_size) + groups_in_block(num_row_blocks - 1);
}

std::size_t BlockLayout::group_offset(std::size_t br, std::size_t bc) const {
  return bc * groups_per_block_column() + br * (row_height / warp_size);
}

BlockLayout BlockLayout::make(std::size_t rows, std::size_t cols, const PartitionConfig& config) {
  config.validate();
  if (rows == 0 || cols == 0) throw std::invalid_argument("cannot partition a matrix with an empty dimension");
  if (rows > std::numeric_limits<Index>::max() || cols > std::numeric_limits<Index>::max()) {
    throw std::invalid_argument("matrix dimensions exceed 32-bit indices");
  }
  BlockLayout l;
  l.rows = rows;
  l.cols = cols;
  l.col_width = config.col_width;
  l.row_height = config.row_height;
  l.warp_size = config.warp_size;
  l.num_row_blocks = ceil_div(rows, config.row_height);
  l.num_col_blocks = ceil_div(cols, config.col_width);
  return l;
}

BlockGrid make_grid(const CsrMatrix& m, const PartitionConfig& config, WorkerPool* pool) {
  BlockGrid g;
  static_cast<BlockLayout&>(g) = BlockLayout::make(m.rows, m.cols, config);
  g.nnz_per_row.assign(g.num_slots(), 0);

  auto count_rows = [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      for (Offset j = m.row_ptr[r]; j < m.row_ptr[r + 1]; ++j) {
        ++g.nnz_per_row[(m.col_idx[j] / config.col_width) * m.rows + r];
      }
    }
  };
  if (pool != nullptr) {
    parallel_for(*pool, m.rows, count_rows);
  } else {
    count_rows(0, m.rows);
  }

  g.block_nnz.assign(g.num_blocks(), 0);
  for (std::size_t bc = 0; bc < g.num_col_blocks; ++bc) {
    for (std::size_t br = 0; br < g.num_row_blocks; ++br) {
      Offset sum = 0;
      for (auto n : g.row_nnz(br, bc)) sum += n;
      g.block_nnz[g.block_index(br, bc)] = sum;
    }
  }
  g.block_elem_start.assign(g.num_blocks() + 1, 0);
  for (std::size_t b = 0; b < g.num_blocks(); ++b) g.block_elem_start[b + 1] = g.block_elem_start[b] + g.block_nnz[b];
  return g;
}

std::vector<RowSlice> block_rows_of(const CsrMatrix& m, const BlockGrid& grid, std::size_t br, std::size_t bc) {
  if (br >= grid.num_row_blocks || bc >= grid.num_col_blocks) {
    throw std::out_of_range("block (" + std::to_string(br) + ", " + std::to_string(bc) + ") outside " +
                            std::to_string(grid.num_row_blocks) + "x" + std::to_string(grid.num_col_blocks) +
                            " grid");
  }
  const std::size_t first_row = br * grid.row_height;
  const auto counts = grid.row_nnz(br, bc);
  const Index lo = static_cast<Index>(grid.col_begin(bc));

  std::vector<RowSlice> slices(counts.size());
  for (std::size_t local = 0; local < counts.size(); ++local) {
    const std::size_t r = first_row + local;
    const auto row_begin = m.col_idx.begin() + static_cast<std::ptrdiff_t>(m.row_ptr[r]);
    const auto row_end = m.col_idx.begin() + static_cast<std::ptrdiff_t>(m.row_ptr[r + 1]);
    const auto start = static_cast<std::size_t>(std::lower_bound(row_begin, row_end, lo) - m.col_idx.begin());
    slices[local].cols = std::span(m.col_idx).subspan(start, counts[local]);
    slices[local].values = std::span(m.values).subspan(start, counts[local]);
  }
  return slices;
}

}  // namespace hbp
