#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hbp/hash_reorder.hpp"
#include "hbp/partition.hpp"

namespace hbp {

// Row-nnz statistics of one warp group in execution (slot) order.
struct GroupStats {
  BlockId block;
  std::size_t group = 0;
  std::vector<std::uint32_t> lane_nnz;
  double mean = 0.0;
  double std_dev = 0.0;  // population
  std::uint32_t max = 0;
  double utilization = 1.0;  // sum / (lanes * max), 1 for an all-zero group
};

GroupStats summarize_lanes(std::span<const std::uint32_t> lane_nnz);

// Statistics for every group of every non-empty block. A null `perms`
// means natural row order.
std::vector<GroupStats> group_stats(const BlockGrid& grid, const std::vector<BlockPermutation>* perms = nullptr);

// Mean std_dev over groups that have the full warp_size lanes.
double mean_std_dev(std::span<const GroupStats> stats, std::size_t warp_size);

// 1 - mean_after / mean_before over full groups (0 when mean_before is 0).
// Throws std::invalid_argument if the two lists cover different groups.
double reduction_summary(std::span<const GroupStats> before, std::span<const GroupStats> after,
                         std::size_t warp_size);

void write_group_stats_csv(std::ostream& out, std::span<const GroupStats> stats, std::string_view ordering,
                           bool header = true);

// 2 * nnz / seconds / 1e9. Throws std::invalid_argument for seconds <= 0.
double gflops(double nnz, double seconds);

struct TimingStats {
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::vector<double> samples;  // seconds, in run order
};

// Runs fn `warmup` times untimed, then `iterations` times on the steady
// clock. Throws std::invalid_argument if iterations == 0.
TimingStats time_kernel(const std::function<void()>& fn, std::size_t iterations, std::size_t warmup = 3);

struct KernelReport {
  std::string name;
  double seconds = 0.0;  // median
  double gflops = 0.0;
  double min_seconds = 0.0;
  double max_seconds = 0.0;
  std::optional<double> spmv_seconds;     // partitioned kernels only
  std::optional<double> combine_seconds;  // partitioned kernels only
};

struct PreprocessReport {
  double grid_seconds = 0.0;
  double sampling_seconds = 0.0;
  double hash_reorder_seconds = 0.0;
  double sort_reorder_seconds = 0.0;
  double format_build_seconds = 0.0;
};

struct BenchReport {
  std::string matrix;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t nnz = 0;
  std::size_t workers = 1;
  std::size_t iterations = 0;
  PartitionConfig config;
  std::size_t num_row_blocks = 0;
  std::size_t num_col_blocks = 0;
  HashParams hash;
  std::vector<KernelReport> kernels;
  PreprocessReport preprocessing;
};

// Fills seconds/min/max/gflops from a timing sample, so that
// gflops == 2 * nnz / seconds / 1e9 holds by construction.
KernelReport make_kernel_report(std::string name, std::size_t nnz, const TimingStats& t);

nlohmann::json to_json(const BenchReport& r);

}  // namespace hbp
