#pragma once

#include <vector>

#include "hbp/core_formats.hpp"
#include "hbp/hash_reorder.hpp"
#include "hbp/hbp_format.hpp"
#include "hbp/metrics.hpp"
#include "hbp/partition.hpp"

namespace hbp {

class WorkerPool;

struct HbpBuild {
  BlockGrid grid;
  HashParams params;
  std::vector<BlockPermutation> perms;
  HbpMatrix matrix;
  PreprocessReport times;  // sort_reorder_seconds stays 0 unless Reordering::Sort is used
};

// CSR -> grid -> (sampling) -> per-block permutations -> HBP, timing each
// stage.
HbpBuild build_hbp_pipeline(const CsrMatrix& m, const PartitionConfig& config, const HashConfig& hash = {},
                            WorkerPool* pool = nullptr, Reordering reordering = Reordering::Hash);

}  // namespace hbp
