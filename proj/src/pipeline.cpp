#include "hbp/pipeline.hpp"

#include <chrono>

namespace hbp {

namespace {

template <typename F>
double timed(F&& f) {
  const auto start = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

HbpBuild build_hbp_pipeline(const CsrMatrix& m, const PartitionConfig& config, const HashConfig& hash,
                            WorkerPool* pool, Reordering reordering) {
  HbpBuild b;
  b.times.grid_seconds = timed([&] { b.grid = make_grid(m, config, pool); });
  if (reordering == Reordering::Hash) {
    b.times.sampling_seconds = timed([&] { b.params = sample_hash_params(b.grid, hash); });
  }
  const double reorder = timed([&] { b.perms = reorder_blocks(b.grid, reordering, b.params, pool); });
  if (reordering == Reordering::Hash) b.times.hash_reorder_seconds = reorder;
  if (reordering == Reordering::Sort) b.times.sort_reorder_seconds = reorder;
  b.times.format_build_seconds = timed([&] { b.matrix = build_hbp(m, b.grid, b.perms, config, pool); });
  return b;
}

}  // namespace hbp
