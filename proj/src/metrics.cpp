#include "hbp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace hbp {

GroupStats summarize_lanes(std::span<const std::uint32_t> lane_nnz) {
  GroupStats s;
  s.lane_nnz.assign(lane_nnz.begin(), lane_nnz.end());
  if (lane_nnz.empty()) return s;

  const double n = static_cast<double>(lane_nnz.size());
  double sum = 0.0;
  for (auto v : lane_nnz) sum += v;
  s.mean = sum / n;
  double sq = 0.0;
  for (auto v : lane_nnz) sq += (v - s.mean) * (v - s.mean);
  s.std_dev = std::sqrt(sq / n);
  s.max = *std::max_element(lane_nnz.begin(), lane_nnz.end());
  s.utilization = s.max == 0 ? 1.0 : sum / (n * s.max);
  return s;
}

std::vector<GroupStats> group_stats(const BlockGrid& grid, const std::vector<BlockPermutation>* perms) {
  if (perms != nullptr && perms->size() != grid.num_blocks()) {
    throw std::invalid_argument("group_stats: permutation count does not match grid");
  }
  std::vector<GroupStats> out;
  std::vector<std::uint32_t> lanes;
  for (std::size_t b = 0; b < grid.num_blocks(); ++b) {
    if (grid.block_nnz[b] == 0) continue;
    const auto id = grid.block_at(b);
    const auto counts = grid.row_nnz(id.br, id.bc);
    for (std::size_t g = 0; g * grid.warp_size < counts.size(); ++g) {
      const std::size_t first = g * grid.warp_size;
      const std::size_t last = std::min(counts.size(), first + grid.warp_size);
      lanes.clear();
      for (std::size_t s = first; s < last; ++s) {
        lanes.push_back(perms == nullptr ? counts[s] : counts[(*perms)[b].output_hash[s]]);
      }
      auto stats = summarize_lanes(lanes);
      stats.block = id;
      stats.group = g;
      out.push_back(std::move(stats));
    }
  }
  return out;
}

double mean_std_dev(std::span<const GroupStats> stats, std::size_t warp_size) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : stats) {
    if (s.lane_nnz.size() != warp_size) continue;
    sum += s.std_dev;
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double reduction_summary(std::span<const GroupStats> before, std::span<const GroupStats> after,
                         std::size_t warp_size) {
  if (before.size() != after.size()) throw std::invalid_argument("reduction_summary: group coverage differs");
  for (std::size_t i = 0; i < before.size(); ++i) {
    if (before[i].block != after[i].block || before[i].group != after[i].group ||
        before[i].lane_nnz.size() != after[i].lane_nnz.size()) {
      throw std::invalid_argument("reduction_summary: group coverage differs at entry " + std::to_string(i));
    }
  }
  const double b = mean_std_dev(before, warp_size);
  if (b == 0.0) return 0.0;
  return 1.0 - mean_std_dev(after, warp_size) / b;
}

void write_group_stats_csv(std::ostream& out, std::span<const GroupStats> stats, std::string_view ordering,
                           bool header) {
  if (header) out << "block_br,block_bc,group,ordering,mean,std_dev,utilization\n";
  for (const auto& s : stats) {
    out << s.block.br << ',' << s.block.bc << ',' << s.group << ',' << ordering << ',' << s.mean << ','
        << s.std_dev << ',' << s.utilization << '\n';
  }
}

double gflops(double nnz, double seconds) {
  if (!(seconds > 0.0)) throw std::invalid_argument("gflops: time must be positive");
  return 2.0 * nnz / seconds / 1e9;
}

TimingStats time_kernel(const std::function<void()>& fn, std::size_t iterations, std::size_t warmup) {
  if (iterations == 0) throw std::invalid_argument("time_kernel: need at least one iteration");
  for (std::size_t i = 0; i < warmup; ++i) fn();

  TimingStats t;
  t.samples.reserve(iterations);
  for (std::size_t i = 0; i < iterations; ++i) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    const auto stop = std::chrono::steady_clock::now();
    t.samples.push_back(std::chrono::duration<double>(stop - start).count());
  }
  auto sorted = t.samples;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  t.median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  t.min = sorted.front();
  t.max = sorted.back();
  return t;
}

KernelReport make_kernel_report(std::string name, std::size_t nnz, const TimingStats& t) {
  KernelReport k;
  k.name = std::move(name);
  // Guard against a zero-duration sample on coarse clocks.
  k.seconds = std::max(t.median, 1e-9);
  k.min_seconds = t.min;
  k.max_seconds = t.max;
  k.gflops = gflops(static_cast<double>(nnz), k.seconds);
  return k;
}

nlohmann::json to_json(const BenchReport& r) {
  nlohmann::json kernels = nlohmann::json::array();
  for (const auto& k : r.kernels) {
    nlohmann::json j = {{"name", k.name},
                        {"seconds", k.seconds},
                        {"gflops", k.gflops},
                        {"min_seconds", k.min_seconds},
                        {"max_seconds", k.max_seconds}};
    if (k.spmv_seconds) j["spmv_seconds"] = *k.spmv_seconds;
    if (k.combine_seconds) j["combine_seconds"] = *k.combine_seconds;
    kernels.push_back(std::move(j));
  }
  return {
      {"matrix", r.matrix},
      {"rows", r.rows},
      {"cols", r.cols},
      {"nnz", r.nnz},
      {"workers", r.workers},
      {"iterations", r.iterations},
      {"config",
       {{"col_width", r.config.col_width},
        {"row_height", r.config.row_height},
        {"warp_size", r.config.warp_size},
        {"fixed_fraction", r.config.fixed_fraction}}},
      {"grid", {{"num_row_blocks", r.num_row_blocks}, {"num_col_blocks", r.num_col_blocks}}},
      {"hash",
       {{"shift", r.hash.shift},
        {"stride", r.hash.stride},
        {"multiplier", r.hash.multiplier},
        {"modulus", r.hash.modulus},
        {"bucket_max", r.hash.bucket_max}}},
      {"kernels", std::move(kernels)},
      {"preprocessing",
       {{"grid_seconds", r.preprocessing.grid_seconds},
        {"sampling_seconds", r.preprocessing.sampling_seconds},
        {"hash_reorder_seconds", r.preprocessing.hash_reorder_seconds},
        {"sort_reorder_seconds", r.preprocessing.sort_reorder_seconds},
        {"format_build_seconds", r.preprocessing.format_build_seconds}}},
  };
}

}  // namespace hbp
