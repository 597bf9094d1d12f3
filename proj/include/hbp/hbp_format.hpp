#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "hbp/core_formats.hpp"
#include "hbp/hash_reorder.hpp"
#include "hbp/partition.hpp"

namespace hbp {

class WorkerPool;

// Hash-based partition storage.
//
// Elements of each block are laid out warp group by warp group. Inside a
// group the rows are visited in slot order (lane q holds slot g*W + q) and
// elements are interleaved column-major: step t emits the t-th element of
// every lane that still has one, lanes ascending. No padding is stored, so
// col, data and add_sign all have exactly nnz entries.
//
//   add_sign[j]   offset from element j to the next element of the same row,
//                 or -1 for the last element of the row
//   zero_row[s]   -1 for a row without elements in the block, otherwise the
//                 number of such rows at lower lanes of the same group; lane
//                 q starts at group_start[g] + q - zero_row[s]
//   group_start   first element of every warp group, plus a final nnz
//   output_hash   original local row executed at each slot
//
// zero_row and output_hash are indexed like BlockGrid::nnz_per_row.
struct HbpMatrix {
  BlockLayout layout;
  double fixed_fraction = 0.7;

  std::vector<Offset> group_start;
  std::vector<Index> col;  // global column index
  std::vector<double> data;
  std::vector<std::int32_t> add_sign;
  std::vector<std::int32_t> zero_row;
  std::vector<std::uint32_t> output_hash;

  std::size_t rows() const { return layout.rows; }
  std::size_t cols() const { return layout.cols; }
  std::size_t nnz() const { return col.size(); }
  PartitionConfig config() const {
    return {layout.col_width, layout.row_height, layout.warp_size, fixed_fraction};
  }

  friend bool operator==(const HbpMatrix&, const HbpMatrix&) = default;
};

// Lays out every block of `m` using the supplied per-block permutations
// (indexed by block storage index). Blocks are converted in parallel when
// a pool is given, each into its own precomputed region. Throws
// std::invalid_argument if the grid does not describe `m` or a permutation
// is not a bijection on its block's rows.
HbpMatrix build_hbp(const CsrMatrix& m, const BlockGrid& grid, const std::vector<BlockPermutation>& perms,
                    const PartitionConfig& config, WorkerPool* pool = nullptr);

// Full structural check: array sizes, group offsets, permutations, zero_row
// counts, and that the add_sign chains cover every element exactly once.
// Throws FormatError describing the first violation.
void validate(const HbpMatrix& h);

// Reconstructs the (row, col, value) entries by walking the stride chains,
// returned in canonical order. Throws FormatError on a structural violation.
TripletMatrix hbp_to_triplets(const HbpMatrix& h);

// Little-endian binary layout:
//   "HBP1" | u32 version | u64 rows, cols, nnz, col_width, row_height,
//   warp_size, num_row_blocks, num_col_blocks |
//   u64-length-prefixed arrays: group_start u64, col u32, data f64,
//   add_sign i32, zero_row i32, output_hash u32
inline constexpr std::uint32_t kHbpVersion = 1;
inline constexpr std::size_t kHbpHeaderBytes = 4 + 4 + 8 * 8;

void serialize_hbp(const HbpMatrix& h, std::ostream& out);
// Throws FormatError on bad magic or version, truncation, or a matrix that
// fails validate().
HbpMatrix deserialize_hbp(std::istream& in);

void save_hbp(const HbpMatrix& h, const std::filesystem::path& path);
HbpMatrix load_hbp(const std::filesystem::path& path);

}  // namespace hbp
