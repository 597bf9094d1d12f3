#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <thread>

#include "hbp/metrics.hpp"
#include "test_support.hpp"

namespace hbp {
namespace {

TEST(SummarizeLanes, Examples) {
  const auto flat = summarize_lanes(std::vector<std::uint32_t>{2, 2, 2, 2});
  EXPECT_EQ(flat.std_dev, 0.0);
  EXPECT_EQ(flat.utilization, 1.0);
  const auto g = summarize_lanes(std::vector<std::uint32_t>{0, 1, 2, 1});
  EXPECT_DOUBLE_EQ(g.mean, 1.0);
  EXPECT_DOUBLE_EQ(g.std_dev, std::sqrt(0.5));
  EXPECT_DOUBLE_EQ(g.utilization, 0.5);
  EXPECT_EQ(g.max, 2u);
  EXPECT_EQ(summarize_lanes(std::vector<std::uint32_t>{0, 0}).utilization, 1.0);
}

TEST(GroupStats, SixteenGroupsPerFullBlock) {
  const auto g = make_grid(coo_to_csr(test::identity(1024)), PartitionConfig{});
  const auto stats = group_stats(g);
  EXPECT_EQ(stats.size(), 2u * 16);
  for (const auto& s : stats) EXPECT_EQ(s.lane_nnz.size(), 32u);
}

TEST(GroupStats, FollowsPermutation) {
  const auto g = make_grid(coo_to_csr(TripletMatrix{4, 4, {{0, 0, 1}, {0, 1, 1}, {3, 3, 1}}}), {4, 4, 2, 0.7});
  EXPECT_EQ(group_stats(g)[0].lane_nnz, (std::vector<std::uint32_t>{2, 0}));
  const std::vector<BlockPermutation> perms{BlockPermutation{{1, 2, 0, 3}}};
  const auto s = group_stats(g, &perms);
  EXPECT_EQ(s[0].lane_nnz, (std::vector<std::uint32_t>{0, 0}));
  EXPECT_EQ(s[1].lane_nnz, (std::vector<std::uint32_t>{2, 1}));
  const auto id = reorder_blocks(g, Reordering::None, {});
  EXPECT_EQ(group_stats(g, &id)[0].lane_nnz, group_stats(g)[0].lane_nnz);
}

TEST(Reduction, Examples) {
  const auto g = make_grid(coo_to_csr(test::powerlaw(256, 6, 1)), {4096, 64, 8, 0.7});
  const auto before = group_stats(g);
  EXPECT_EQ(reduction_summary(before, before, 8), 0.0);

  auto zeroed = before;
  for (auto& s : zeroed) s.std_dev = 0.0;
  if (mean_std_dev(before, 8) > 0) EXPECT_EQ(reduction_summary(before, zeroed, 8), 1.0);

  auto two = before, half = before;
  for (auto& s : two) s.std_dev = 2.0;
  for (auto& s : half) s.std_dev = 0.5;
  EXPECT_DOUBLE_EQ(reduction_summary(two, half, 8), 0.75);

  auto fewer = before;
  fewer.pop_back();
  EXPECT_THROW(reduction_summary(before, fewer, 8), std::invalid_argument);
}

TEST(MeanStdDev, SkipsPartialGroups) {
  std::vector<GroupStats> stats(2);
  stats[0].lane_nnz = {1, 2, 3, 4};
  stats[0].std_dev = 1.0;
  stats[1].lane_nnz = {9, 0};
  stats[1].std_dev = 4.5;
  EXPECT_EQ(mean_std_dev(stats, 4), 1.0);
}

TEST(Csv, HeaderAndRows) {
  const auto g = make_grid(coo_to_csr(test::identity(8)), {8, 4, 2, 0.7});
  std::ostringstream out;
  write_group_stats_csv(out, group_stats(g), "none");
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "block_br,block_bc,group,ordering,mean,std_dev,utilization");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 4);
}

TEST(Gflops, Formula) {
  EXPECT_DOUBLE_EQ(gflops(1e9, 1.0), 2.0);
  EXPECT_EQ(gflops(0, 1.0), 0.0);
  EXPECT_NEAR(gflops(6.2e6, 1e-3), 12.4, 1e-12);
  for (double nnz : {1e3, 1e6, 5e7})
    for (double t : {1e-4, 0.5, 3.0}) {
      EXPECT_DOUBLE_EQ(gflops(2 * nnz, t), 2 * gflops(nnz, t));
      EXPECT_DOUBLE_EQ(gflops(nnz, 2 * t), gflops(nnz, t) / 2);
    }
  EXPECT_THROW(gflops(10, 0.0), std::invalid_argument);
  EXPECT_THROW(gflops(10, -1.0), std::invalid_argument);
}

TEST(TimeKernel, Statistics) {
  int calls = 0;
  const auto one = time_kernel([&] { ++calls; }, 1, 2);
  EXPECT_EQ(calls, 3);
  ASSERT_EQ(one.samples.size(), 1u);
  EXPECT_EQ(one.median, one.samples[0]);
  const auto t = time_kernel([] { std::this_thread::sleep_for(std::chrono::microseconds(50)); }, 7, 0);
  EXPECT_EQ(t.samples.size(), 7u);
  EXPECT_LE(t.min, t.median);
  EXPECT_LE(t.median, t.max);
  EXPECT_THROW(time_kernel([] {}, 0), std::invalid_argument);
}

TEST(KernelReport, GflopsFromOwnSeconds) {
  TimingStats t;
  t.median = 0.002;
  t.min = 0.001;
  t.max = 0.003;
  t.samples = {0.001, 0.002, 0.003};
  const auto k = make_kernel_report("hbp", 123456, t);
  EXPECT_EQ(k.seconds, 0.002);
  EXPECT_DOUBLE_EQ(k.gflops, 2.0 * 123456 / k.seconds / 1e9);
}

TEST(Json, ReportFields) {
  BenchReport r;
  r.matrix = "m";
  r.nnz = 10;
  r.kernels.push_back(make_kernel_report("csr", 10, TimingStats{1e-3, 1e-3, 1e-3, {1e-3}}));
  const auto j = to_json(r);
  EXPECT_EQ(j["matrix"], "m");
  EXPECT_EQ(j["kernels"].size(), 1u);
  EXPECT_EQ(j["kernels"][0]["name"], "csr");
  EXPECT_TRUE(j.contains("preprocessing"));
}

}  // namespace
}  // namespace hbp
