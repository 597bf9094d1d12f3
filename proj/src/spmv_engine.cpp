#include "hbp/spmv_engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hbp/worker_pool.hpp"

namespace hbp {

namespace {

std::int64_t now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

ExecutionPlan make_plan(std::vector<BlockId> order, double fixed_fraction, std::size_t workers) {
  if (workers == 0) throw std::invalid_argument("plan_execution: need at least one worker");
  ExecutionPlan plan;
  plan.block_order = std::move(order);
  plan.fixed_count = static_cast<std::size_t>(std::lround(fixed_fraction * static_cast<double>(plan.block_order.size())));
  plan.fixed_count = std::min(plan.fixed_count, plan.block_order.size());

  const std::size_t base = plan.fixed_count / workers;
  const std::size_t extra = plan.fixed_count % workers;
  std::size_t begin = 0;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t len = base + (w < extra ? 1 : 0);
    plan.worker_assignments.emplace_back(begin, begin + len);
    begin += len;
  }
  return plan;
}

void require_length(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw std::invalid_argument(std::string(what) + ": vector length " + std::to_string(got) + ", expected " +
                                std::to_string(want));
  }
}

}  // namespace

ExecutionPlan plan_execution(const BlockGrid& grid, const PartitionConfig& config, std::size_t workers) {
  std::vector<BlockId> order;
  for (std::size_t b = 0; b < grid.num_blocks(); ++b) {
    if (grid.block_nnz[b] > 0) order.push_back(grid.block_at(b));
  }
  return make_plan(std::move(order), config.fixed_fraction, workers);
}

ExecutionPlan plan_execution(const HbpMatrix& h, std::size_t workers) {
  const BlockLayout& L = h.layout;
  std::vector<BlockId> order;
  for (std::size_t b = 0; b < L.num_blocks(); ++b) {
    const auto id = L.block_at(b);
    const std::size_t first = L.group_offset(id.br, id.bc);
    if (h.group_start[first + L.groups_in_block(id.br)] > h.group_start[first]) order.push_back(id);
  }
  return make_plan(std::move(order), h.fixed_fraction, workers);
}

void execute_plan(const ExecutionPlan& plan, WorkerPool& pool, const std::function<void(BlockId)>& kernel,
                  ExecutionLog* log) {
  if (pool.size() != plan.workers()) {
    throw std::invalid_argument("execute_plan: pool has " + std::to_string(pool.size()) + " workers, plan expects " +
                                std::to_string(plan.workers()));
  }
  if (log != nullptr) log->entries.assign(plan.block_order.size(), LogEntry{});

  std::atomic<std::size_t> ticket{plan.competitive_start()};
  auto execute = [&](std::size_t worker, std::size_t pos, Acquisition kind) {
    const BlockId block = plan.block_order[pos];
    if (log == nullptr) {
      kernel(block);
      return;
    }
    LogEntry& e = log->entries[pos];
    e.start_ns = now_ns();
    kernel(block);
    e.end_ns = now_ns();
    e.block = block;
    e.worker = worker;
    e.kind = kind;
    e.ticket = pos;
  };

  pool.run([&](std::size_t worker) {
    const auto [begin, end] = plan.worker_assignments[worker];
    for (std::size_t pos = begin; pos < end; ++pos) execute(worker, pos, Acquisition::Fixed);
    for (;;) {
      const std::size_t pos = ticket.fetch_add(1);
      if (pos >= plan.block_order.size()) break;
      execute(worker, pos, Acquisition::Competitive);
    }
  });
}

void block_spmv(const HbpMatrix& h, BlockId block, std::span<const double> segment, std::span<double> partial) {
  const BlockLayout& L = h.layout;
  const std::size_t W = L.warp_size;
  const std::size_t rows = L.rows_in_block(block.br);
  const std::size_t slot_base = L.slot_offset(block.br, block.bc);
  const std::size_t group_base = L.group_offset(block.br, block.bc);
  const Index col_base = static_cast<Index>(L.col_begin(block.bc));

  const Index* col = h.col.data();
  const double* data = h.data.data();
  const std::int32_t* add_sign = h.add_sign.data();
  const std::int32_t* zero_row = h.zero_row.data() + slot_base;
  const std::uint32_t* output_hash = h.output_hash.data() + slot_base;
  double* out = partial.data() + slot_base;

  for (std::size_t s = 0; s < rows; ++s) {
    if (zero_row[s] == -1) continue;
    const std::size_t q = s % W;
    Offset j = h.group_start[group_base + s / W] + q - static_cast<Offset>(zero_row[s]);
    double sum = 0.0;
    // Accumulate before testing the stride so the row's last element,
    // marked by add_sign = -1, is included.
    for (;;) {
      sum += data[j] * segment[col[j] - col_base];
      if (add_sign[j] < 0) break;
      j += static_cast<Offset>(add_sign[j]);
    }
    out[output_hash[s]] = sum;
  }
}

void run_spmv(const HbpMatrix& h, std::span<const double> x, const ExecutionPlan& plan, WorkerPool& pool,
              PartialVector& out, ExecutionLog* log) {
  require_length(x.size(), h.cols(), "run_spmv");
  const BlockLayout& L = h.layout;
  out.values.assign(L.num_slots(), 0.0);
  std::span<double> partial(out.values);
  execute_plan(
      plan, pool,
      [&](BlockId b) {
        const std::size_t lo = L.col_begin(b.bc);
        block_spmv(h, b, x.subspan(lo, L.col_end(b.bc) - lo), partial);
      },
      log);
}

SpmvRun run_spmv(const HbpMatrix& h, std::span<const double> x, const ExecutionPlan& plan, WorkerPool& pool) {
  SpmvRun run;
  run_spmv(h, x, plan, pool, run.partial, &run.log);
  return run;
}

void combine_into(const PartialVector& partial, const BlockLayout& layout, std::span<double> y, WorkerPool* pool) {
  const std::size_t rows = layout.rows;
  const std::size_t ncb = layout.num_col_blocks;
  if (partial.values.size() != layout.num_slots() || y.size() != rows) {
    throw std::invalid_argument("combine: partial vector does not match layout");
  }
  const double* p = partial.values.data();
  auto body = [&](std::size_t begin, std::size_t end) {
    std::copy(p + begin, p + end, y.begin() + static_cast<std::ptrdiff_t>(begin));
    for (std::size_t bc = 1; bc < ncb; ++bc) {
      const double* src = p + bc * rows;
      for (std::size_t r = begin; r < end; ++r) y[r] += src[r];
    }
  };
  if (pool != nullptr) {
    parallel_for(*pool, rows, body);
  } else {
    body(0, rows);
  }
}

DenseVector combine(const PartialVector& partial, const BlockLayout& layout, WorkerPool* pool) {
  DenseVector y(layout.rows);
  combine_into(partial, layout, y, pool);
  return y;
}

DenseVector hbp_spmv(const HbpMatrix& h, std::span<const double> x, WorkerPool& pool) {
  const auto plan = plan_execution(h, pool.size());
  PartialVector partial;
  run_spmv(h, x, plan, pool, partial);
  return combine(partial, h.layout, &pool);
}

Block2dMatrix build_block2d(const CsrMatrix& m, const BlockGrid& grid) {
  Block2dMatrix b;
  b.layout = grid;
  b.row_ptr.assign(grid.num_slots() + 1, 0);
  for (std::size_t s = 0; s < grid.num_slots(); ++s) b.row_ptr[s + 1] = b.row_ptr[s] + grid.nnz_per_row[s];
  b.col.resize(m.nnz());
  b.data.resize(m.nnz());

  // Row r's elements of column block bc land at row_ptr[bc * rows + r];
  // CSR order already visits each row's column blocks in ascending order.
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (Offset j = m.row_ptr[r]; j < m.row_ptr[r + 1];) {
      const std::size_t bc = m.col_idx[j] / grid.col_width;
      Offset dst = b.row_ptr[bc * m.rows + r];
      const Offset end = j + grid.nnz_per_row[bc * m.rows + r];
      for (; j < end; ++j, ++dst) {
        b.col[dst] = m.col_idx[j];
        b.data[dst] = m.values[j];
      }
    }
  }
  return b;
}

void block2d_block_spmv(const Block2dMatrix& b, BlockId block, std::span<const double> x, std::span<double> partial) {
  const std::size_t slot_base = b.layout.slot_offset(block.br, block.bc);
  const std::size_t rows = b.layout.rows_in_block(block.br);
  for (std::size_t s = slot_base; s < slot_base + rows; ++s) {
    double sum = 0.0;
    for (Offset j = b.row_ptr[s]; j < b.row_ptr[s + 1]; ++j) sum += b.data[j] * x[b.col[j]];
    partial[s] = sum;
  }
}

void run_block2d(const Block2dMatrix& b, std::span<const double> x, const ExecutionPlan& plan, WorkerPool& pool,
                 PartialVector& out) {
  require_length(x.size(), b.layout.cols, "run_block2d");
  out.values.assign(b.layout.num_slots(), 0.0);
  std::span<double> partial(out.values);
  execute_plan(plan, pool, [&](BlockId id) { block2d_block_spmv(b, id, x, partial); });
}

DenseVector block2d_spmv_baseline(const CsrMatrix& m, const BlockGrid& grid, std::span<const double> x,
                                  std::size_t workers) {
  require_length(x.size(), m.cols, "block2d_spmv_baseline");
  const auto b = build_block2d(m, grid);
  WorkerPool pool(workers);
  PartitionConfig config{grid.col_width, grid.row_height, grid.warp_size};
  const auto plan = plan_execution(grid, config, workers);
  PartialVector partial;
  run_block2d(b, x, plan, pool, partial);
  return combine(partial, grid, &pool);
}

void csr_spmv_parallel(const CsrMatrix& a, std::span<const double> x, std::span<double> y, WorkerPool& pool) {
  require_length(x.size(), a.cols, "csr_spmv_parallel");
  require_length(y.size(), a.rows, "csr_spmv_parallel");
  parallel_for(pool, a.rows, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      double sum = 0.0;
      for (Offset j = a.row_ptr[r]; j < a.row_ptr[r + 1]; ++j) sum += a.values[j] * x[a.col_idx[j]];
      y[r] = sum;
    }
  });
}

}  // namespace hbp
