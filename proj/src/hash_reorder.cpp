#include "hbp/hash_reorder.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "hbp/worker_pool.hpp"

namespace hbp {

std::size_t region_stride(std::size_t row_height, std::uint32_t bucket_max) {
  return std::max<std::size_t>(1, row_height / (bucket_max + 1));
}

std::uint32_t hash_bucket(std::uint32_t nnz, const HashParams& p) {
  const std::uint32_t shifted = p.shift >= 32 ? 0 : nnz >> p.shift;
  return std::min(shifted, p.bucket_max);
}

std::size_t hash_slot(std::uint32_t nnz, std::size_t local_row, const HashParams& p) {
  return hash_bucket(nnz, p) * p.stride + (local_row * p.multiplier) % p.modulus;
}

HashParams sample_hash_params(const BlockGrid& grid, const HashConfig& config) {
  HashParams p;
  p.stride = p.modulus = region_stride(grid.row_height, p.bucket_max);

  // Population: every local row of every non-empty block.
  std::vector<std::size_t> blocks;
  std::vector<std::size_t> rows_before{0};
  for (std::size_t b = 0; b < grid.num_blocks(); ++b) {
    if (grid.block_nnz[b] == 0) continue;
    blocks.push_back(b);
    rows_before.push_back(rows_before.back() + grid.rows_in_block(grid.block_at(b).br));
  }
  const std::size_t population = rows_before.back();

  auto value_at = [&](std::size_t k) {
    const auto it = std::upper_bound(rows_before.begin(), rows_before.end(), k) - 1;
    const auto id = grid.block_at(blocks[static_cast<std::size_t>(it - rows_before.begin())]);
    return grid.row_nnz(id.br, id.bc)[k - *it];
  };

  std::vector<std::uint32_t> sample;
  if (population <= config.sample_size) {
    sample.reserve(population);
    for (std::size_t k = 0; k < population; ++k) sample.push_back(value_at(k));
  } else {
    std::mt19937_64 rng(config.seed);
    std::uniform_int_distribution<std::size_t> pick(0, population - 1);
    sample.reserve(config.sample_size);
    for (std::size_t i = 0; i < config.sample_size; ++i) sample.push_back(value_at(pick(rng)));
  }
  if (sample.empty()) return p;

  // Nearest-rank quantile.
  std::sort(sample.begin(), sample.end());
  const double q = std::clamp(config.quantile, 0.0, 1.0);
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sample.size())));
  const std::uint32_t qv = sample[std::clamp<std::size_t>(rank, 1, sample.size()) - 1];
  while ((qv >> p.shift) > p.bucket_max) ++p.shift;

  // Multiplier: spread the most crowded bucket over as many regions as its
  // expected per-block population needs. This rule is a heuristic and can
  // be swapped without touching the rest of the pipeline.
  std::vector<std::size_t> histogram(p.bucket_max + 1, 0);
  for (auto n : sample) ++histogram[hash_bucket(n, p)];
  const std::size_t modal = *std::max_element(histogram.begin(), histogram.end());
  const double expected_rows =
      static_cast<double>(modal) / static_cast<double>(sample.size()) * static_cast<double>(grid.row_height);
  std::size_t c = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(expected_rows / p.stride)));
  while (std::gcd(c, p.modulus) != 1) ++c;
  p.multiplier = c;
  return p;
}

BlockPermutation build_block_permutation(std::span<const std::uint32_t> row_nnz, const HashParams& p,
                                         ReorderCounters* counters) {
  const std::size_t n = row_nnz.size();
  BlockPermutation perm;
  perm.output_hash.resize(n);

  // next[s] == s marks a free slot; a claimed slot points further right.
  // Index n is a sentinel meaning "wrap to slot 0".
  std::vector<std::size_t> next(n + 1);
  std::iota(next.begin(), next.end(), std::size_t{0});
  std::uint64_t probes = 0;

  auto find_free = [&](std::size_t s) {
    for (;;) {
      ++probes;
      if (s == n) {
        s = 0;
        continue;
      }
      if (next[s] == s) return s;
      next[s] = next[next[s]];  // path halving
      s = next[s];
    }
  };

  for (std::size_t row = 0; row < n; ++row) {
    const std::size_t slot = find_free(hash_slot(row_nnz[row], row, p) % n);
    perm.output_hash[slot] = static_cast<std::uint32_t>(row);
    next[slot] = slot + 1;
  }
  if (counters != nullptr) counters->probes += probes;
  return perm;
}

BlockPermutation sort_permutation(std::span<const std::uint32_t> row_nnz, ReorderCounters* counters) {
  BlockPermutation perm;
  perm.output_hash.resize(row_nnz.size());
  std::iota(perm.output_hash.begin(), perm.output_hash.end(), std::uint32_t{0});
  std::uint64_t comparisons = 0;
  std::stable_sort(perm.output_hash.begin(), perm.output_hash.end(), [&](std::uint32_t a, std::uint32_t b) {
    ++comparisons;
    return row_nnz[a] < row_nnz[b];
  });
  if (counters != nullptr) counters->comparisons += comparisons;
  return perm;
}

BlockPermutation identity_permutation(std::size_t rows) {
  BlockPermutation perm;
  perm.output_hash.resize(rows);
  std::iota(perm.output_hash.begin(), perm.output_hash.end(), std::uint32_t{0});
  return perm;
}

bool is_permutation(std::span<const std::uint32_t> output_hash) {
  std::vector<bool> seen(output_hash.size(), false);
  for (auto v : output_hash) {
    if (v >= output_hash.size() || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

Reordering parse_reordering(std::string_view name) {
  if (name == "none") return Reordering::None;
  if (name == "hash") return Reordering::Hash;
  if (name == "sort") return Reordering::Sort;
  throw std::invalid_argument("unknown reordering '" + std::string(name) + "' (expected none, hash or sort)");
}

std::string_view to_string(Reordering r) {
  switch (r) {
    case Reordering::None:
      return "none";
    case Reordering::Hash:
      return "hash";
    case Reordering::Sort:
      return "sort";
  }
  return "?";
}

std::vector<BlockPermutation> reorder_blocks(const BlockGrid& grid, Reordering kind, const HashParams& params,
                                             WorkerPool* pool, ReorderCounters* counters) {
  std::vector<BlockPermutation> perms(grid.num_blocks());
  std::mutex merge;
  auto body = [&](std::size_t begin, std::size_t end) {
    ReorderCounters local;
    for (std::size_t b = begin; b < end; ++b) {
      const auto id = grid.block_at(b);
      const auto counts = grid.row_nnz(id.br, id.bc);
      switch (kind) {
        case Reordering::None:
          perms[b] = identity_permutation(counts.size());
          break;
        case Reordering::Hash:
          perms[b] = build_block_permutation(counts, params, &local);
          break;
        case Reordering::Sort:
          perms[b] = sort_permutation(counts, &local);
          break;
      }
    }
    if (counters != nullptr) {
      std::lock_guard lock(merge);
      counters->probes += local.probes;
      counters->comparisons += local.comparisons;
    }
  };
  if (pool != nullptr) {
    parallel_for(*pool, perms.size(), body);
  } else {
    body(0, perms.size());
  }
  return perms;
}

}  // namespace hbp
