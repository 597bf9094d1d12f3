#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "hbp/partition.hpp"

namespace hbp {

class WorkerPool;

struct HashConfig {
  std::size_t sample_size = 4096;
  std::uint64_t seed = 20240521;
  double quantile = 0.9;
};

// Constants of the three-stage row hash:
//   bucket  = min(nnz >> shift, bucket_max)            aggregation
//   region  = bucket * stride                          dispersion
//   slot    = region + (local_row * multiplier) % modulus   linear mapping
struct HashParams {
  unsigned shift = 0;
  std::size_t stride = 1;
  std::size_t multiplier = 1;
  std::size_t modulus = 1;
  std::uint32_t bucket_max = 8;

  friend bool operator==(const HashParams&, const HashParams&) = default;
};

// Slot index = execution order inside a block, value = original local row.
struct BlockPermutation {
  std::vector<std::uint32_t> output_hash;

  friend bool operator==(const BlockPermutation&, const BlockPermutation&) = default;
};

struct ReorderCounters {
  std::uint64_t probes = 0;       // slot inspections while claiming hash slots
  std::uint64_t comparisons = 0;  // comparator calls made by the sort baseline
};

// Picks shift and multiplier from a seeded sample of per-block row counts
// taken over the non-empty blocks of the grid; stride and modulus depend
// only on the row height.
HashParams sample_hash_params(const BlockGrid& grid, const HashConfig& config = {});

// Fixed part of the parameters: stride = modulus = max(1, row_height / 9).
std::size_t region_stride(std::size_t row_height, std::uint32_t bucket_max = 8);

std::uint32_t hash_bucket(std::uint32_t nnz, const HashParams& p);
std::size_t hash_slot(std::uint32_t nnz, std::size_t local_row, const HashParams& p);

// Each row, in ascending local-row order, claims the first free slot at or
// after hash_slot() modulo the block size, wrapping around. The result is
// identical to sequential linear probing; the free-slot search uses
// path-compressed skip pointers so clustered buckets stay near-linear.
BlockPermutation build_block_permutation(std::span<const std::uint32_t> row_nnz, const HashParams& p,
                                         ReorderCounters* counters = nullptr);

// Stable ascending sort by row nnz (the sort2D baseline).
BlockPermutation sort_permutation(std::span<const std::uint32_t> row_nnz, ReorderCounters* counters = nullptr);

BlockPermutation identity_permutation(std::size_t rows);

bool is_permutation(std::span<const std::uint32_t> output_hash);

enum class Reordering { None, Hash, Sort };

Reordering parse_reordering(std::string_view name);
std::string_view to_string(Reordering r);

// One permutation per block, indexed by BlockGrid::block_index. Blocks are
// processed in parallel when a pool is supplied. `params` is only read for
// Reordering::Hash.
std::vector<BlockPermutation> reorder_blocks(const BlockGrid& grid, Reordering kind, const HashParams& params,
                                             WorkerPool* pool = nullptr, ReorderCounters* counters = nullptr);

}  // namespace hbp
