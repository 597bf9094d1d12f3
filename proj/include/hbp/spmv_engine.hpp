#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "hbp/core_formats.hpp"
#include "hbp/hbp_format.hpp"
#include "hbp/partition.hpp"

namespace hbp {

class WorkerPool;

// Block schedule: block_order[0, fixed_count) is split into one contiguous
// chunk per worker; block_order[fixed_count, end) is the competitive pool
// drained through a shared ticket counter.
struct ExecutionPlan {
  std::vector<BlockId> block_order;  // non-empty blocks, column-block-major
  std::size_t fixed_count = 0;
  std::vector<std::pair<std::size_t, std::size_t>> worker_assignments;  // [begin, end) into block_order

  std::size_t workers() const { return worker_assignments.size(); }
  std::size_t competitive_start() const { return fixed_count; }
};

// fixed_count = round(fixed_fraction * blocks); chunk sizes differ by at
// most one, larger chunks first. Throws std::invalid_argument if workers == 0.
ExecutionPlan plan_execution(const BlockGrid& grid, const PartitionConfig& config, std::size_t workers);
ExecutionPlan plan_execution(const HbpMatrix& h, std::size_t workers);

// Per-(block, local row) results, laid out like BlockGrid::nnz_per_row so
// that entry bc * rows + r belongs to global row r and column block bc.
struct PartialVector {
  std::vector<double> values;
};

enum class Acquisition : std::uint8_t { Fixed, Competitive };

struct LogEntry {
  BlockId block;
  std::size_t worker = static_cast<std::size_t>(-1);
  Acquisition kind = Acquisition::Fixed;
  std::size_t ticket = 0;  // position in block_order
  std::int64_t start_ns = 0;
  std::int64_t end_ns = 0;
};

// One pre-allocated entry per block_order position.
struct ExecutionLog {
  std::vector<LogEntry> entries;
};

// Runs kernel(block) for every planned block: each worker first executes
// its fixed chunk in order, then claims competitive blocks with an atomic
// fetch-and-increment until the pool is drained. The pool size must equal
// plan.workers().
void execute_plan(const ExecutionPlan& plan, WorkerPool& pool, const std::function<void(BlockId)>& kernel,
                  ExecutionLog* log = nullptr);

// SpMV on one block. `segment` is x restricted to the block's column range;
// `partial` is the whole PartialVector storage. Rows without elements are
// not written.
void block_spmv(const HbpMatrix& h, BlockId block, std::span<const double> segment, std::span<double> partial);

struct SpmvRun {
  PartialVector partial;
  ExecutionLog log;
};

// The SpMV part: zeroes `out`, then executes every planned block.
void run_spmv(const HbpMatrix& h, std::span<const double> x, const ExecutionPlan& plan, WorkerPool& pool,
              PartialVector& out, ExecutionLog* log = nullptr);
SpmvRun run_spmv(const HbpMatrix& h, std::span<const double> x, const ExecutionPlan& plan, WorkerPool& pool);

// The combine part: y[r] = sum over column blocks, in ascending order, of
// the partial results of row r.
DenseVector combine(const PartialVector& partial, const BlockLayout& layout, WorkerPool* pool = nullptr);
void combine_into(const PartialVector& partial, const BlockLayout& layout, std::span<double> y,
                  WorkerPool* pool = nullptr);

// Plan, SpMV part and combine part in one call.
DenseVector hbp_spmv(const HbpMatrix& h, std::span<const double> x, WorkerPool& pool);

// Plain 2D-partitioned CSR: elements regrouped block by block (storage
// order), rows traversed in natural order within each block.
struct Block2dMatrix {
  BlockLayout layout;
  std::vector<Offset> row_ptr;  // num_slots() + 1, indexed like nnz_per_row
  std::vector<Index> col;
  std::vector<double> data;
};

Block2dMatrix build_block2d(const CsrMatrix& m, const BlockGrid& grid);
void block2d_block_spmv(const Block2dMatrix& b, BlockId block, std::span<const double> x, std::span<double> partial);
void run_block2d(const Block2dMatrix& b, std::span<const double> x, const ExecutionPlan& plan, WorkerPool& pool,
                 PartialVector& out);
DenseVector block2d_spmv_baseline(const CsrMatrix& m, const BlockGrid& grid, std::span<const double> x,
                                  std::size_t workers);

// Row-parallel CSR used as the benchmark baseline; per-row arithmetic is
// identical to csr_spmv.
void csr_spmv_parallel(const CsrMatrix& a, std::span<const double> x, std::span<double> y, WorkerPool& pool);

}  // namespace hbp
