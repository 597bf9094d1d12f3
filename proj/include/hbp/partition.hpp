#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hbp/core_formats.hpp"

namespace hbp {

class WorkerPool;

struct PartitionConfig {
  std::size_t col_width = 4096;  // vector segment length per column block
  std::size_t row_height = 512;  // rows per block, the reordering scope
  std::size_t warp_size = 32;    // lanes per group
  double fixed_fraction = 0.7;   // share of blocks scheduled statically

  // Throws std::invalid_argument unless all sizes are >= 1, the row height
  // is a multiple of the warp size and the fraction lies in [0, 1].
  void validate() const;

  friend bool operator==(const PartitionConfig&, const PartitionConfig&) = default;
};

struct BlockId {
  std::size_t br = 0;
  std::size_t bc = 0;

  friend bool operator==(const BlockId&, const BlockId&) = default;
};

// Geometry of a 2D partition into row_height x col_width blocks.
//
// Blocks are stored column-block-major: block (br, bc) has storage index
// bc * num_row_blocks + br. Per-row arrays hold one entry for every local
// row of every block; since a block column covers all matrix rows, the
// entry for (br, bc, r_local) sits at bc * rows + br * row_height + r_local.
// Warp groups are numbered the same way, blocks in storage order and
// groups in slot order inside each block.
struct BlockLayout {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t col_width = 0;
  std::size_t row_height = 0;
  std::size_t warp_size = 0;
  std::size_t num_row_blocks = 0;
  std::size_t num_col_blocks = 0;

  static BlockLayout make(std::size_t rows, std::size_t cols, const PartitionConfig& config);

  std::size_t num_blocks() const { return num_row_blocks * num_col_blocks; }
  std::size_t block_index(std::size_t br, std::size_t bc) const { return bc * num_row_blocks + br; }
  BlockId block_at(std::size_t index) const { return {index % num_row_blocks, index / num_row_blocks}; }

  std::size_t rows_in_block(std::size_t br) const;
  std::size_t groups_in_block(std::size_t br) const;
  std::size_t slot_offset(std::size_t br, std::size_t bc) const { return bc * rows + br * row_height; }
  std::size_t col_begin(std::size_t bc) const { return bc * col_width; }
  std::size_t col_end(std::size_t bc) const;

  std::size_t num_slots() const { return rows * num_col_blocks; }
  std::size_t groups_per_block_column() const;
  std::size_t num_groups() const { return groups_per_block_column() * num_col_blocks; }
  std::size_t group_offset(std::size_t br, std::size_t bc) const;

  friend bool operator==(const BlockLayout&, const BlockLayout&) = default;
};

// Per-block nonzero counts of a partitioned matrix.
struct BlockGrid : BlockLayout {
  std::vector<std::uint32_t> nnz_per_row;  // num_slots()
  std::vector<Offset> block_nnz;           // num_blocks()
  std::vector<Offset> block_elem_start;    // num_blocks() + 1, exclusive prefix of block_nnz

  std::span<const std::uint32_t> row_nnz(std::size_t br, std::size_t bc) const;
  Offset nnz_of(std::size_t br, std::size_t bc) const { return block_nnz[block_index(br, bc)]; }
  Offset elem_start(std::size_t br, std::size_t bc) const { return block_elem_start[block_index(br, bc)]; }
  Offset nnz() const { return block_elem_start.empty() ? 0 : block_elem_start.back(); }
};

// Splits each CSR row at multiples of col_width and records the per-block
// row counts. Rows are processed in parallel when a pool is supplied.
BlockGrid make_grid(const CsrMatrix& m, const PartitionConfig& config, WorkerPool* pool = nullptr);

struct RowSlice {
  std::span<const Index> cols;
  std::span<const double> values;
};

// The part of every row of block (br, bc) that falls in its column range,
// in increasing column order. Throws std::out_of_range on a bad block.
std::vector<RowSlice> block_rows_of(const CsrMatrix& m, const BlockGrid& grid, std::size_t br, std::size_t bc);

}  // namespace hbp
