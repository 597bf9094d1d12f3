// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "commands.hpp"
#include "hbp/error.hpp"
#include "hbp/fetch.hpp"
#include "hbp/hbp_format.hpp"
#include "hbp/matrix_market.hpp"
#include "hbp/metrics.hpp"
#include "hbp/pipeline.hpp"
#include "hbp/spmv_engine.hpp"
#include "hbp/worker_pool.hpp"
#include "test_support.hpp"

namespace hbp {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Case {
  std::string name;
  TripletMatrix matrix;
  PartitionConfig config;
};

std::vector<Case> corpus() {
  const PartitionConfig small{256, 64, 8, 0.7};
  const PartitionConfig odd{100, 48, 16, 0.3};
  const PartitionConfig defaults{};
  std::vector<Case> cases;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const std::size_t rows = 50 + s * 97, cols = 40 + s * 101;
    const auto& cfg = s % 3 == 0 ? small : s % 3 == 1 ? odd : defaults;
    cases.push_back({"uniform-" + std::to_string(s),
                     generate_synthetic({rows, cols, SyntheticPattern::Uniform, 1.0 + s % 7, 2.0, 100 + s}), cfg});
  }
  for (std::uint64_t s = 0; s < 20; ++s) {
    const std::size_t n = 64 + s * 101;
    const auto& cfg = s % 3 == 0 ? odd : s % 3 == 1 ? small : defaults;
    cases.push_back({"powerlaw-" + std::to_string(s),
                     generate_synthetic({n, n, SyntheticPattern::PowerLaw, 4.0 + s % 5, 1.5 + 0.1 * (s % 6), 200 + s}),
                     cfg});
  }
  cases.push_back({"uniform-2000", generate_synthetic({2000, 2000, SyntheticPattern::Uniform, 12, 2.0, 7}), small});
  cases.push_back({"powerlaw-2000", generate_synthetic({2000, 2000, SyntheticPattern::PowerLaw, 12, 2.0, 8}), odd});
  cases.push_back({"identity-1", test::identity(1), small});
  cases.push_back({"identity-1000", test::identity(1000), odd});
  cases.push_back({"identity-4096", test::identity(4096), defaults});
  cases.push_back({"zero", TripletMatrix{300, 200, {}}, small});
  cases.push_back({"single-row", generate_synthetic({1, 2000, SyntheticPattern::Uniform, 500, 2.0, 9}), odd});
  cases.push_back({"single-column", generate_synthetic({2000, 1, SyntheticPattern::Uniform, 0.5, 2.0, 10}), odd});
  cases.push_back({"indivisible", test::random_matrix(1999, 1013, 15000, 11), PartitionConfig{100, 48, 16, 0.7}});
  cases.push_back({"indivisible-small-warp", test::random_matrix(777, 333, 5000, 12), PartitionConfig{50, 21, 7, 0.5}});
  return cases;
}

std::string serialized(const HbpMatrix& h) {
  std::ostringstream out;
  serialize_hbp(h, out);
  return out.str();
}

bool bitwise_equal(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

class Report {
 public:
  void line(const std::string& criterion, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS" : "FAIL") << "  " << criterion << ": " << detail << std::endl;
    failed_ += !ok;
  }
  void skip(const std::string& criterion, const std::string& detail) {
    std::cout << "SKIP  " << criterion << ": " << detail << std::endl;
  }
  int failed() const { return failed_; }

 private:
  int failed_ = 0;
};

std::string fmt(double v, int precision = 3) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

void oracle_and_round_trip(Report& report, WorkerPool& pool) {
  const auto t0 = Clock::now();
  const auto cases = corpus();
  double worst = 0.0;
  std::string worst_case, round_trip_failure;
  for (const auto& c : cases) {
    const auto csr = coo_to_csr(c.matrix);
    const auto build = build_hbp_pipeline(csr, c.config, {}, &pool);
    const auto x = test::random_vector(c.matrix.cols, c.matrix.nnz() + 1);
    const double err = max_relative_error(hbp_spmv(build.matrix, x, pool), dense_oracle_spmv(c.matrix, x));
    if (!(err <= worst)) {
      worst = err;
      worst_case = c.name;
    }

    if (round_trip_failure.empty()) {
      if (hbp_to_triplets(build.matrix) != c.matrix) {
        round_trip_failure = c.name + " (triplets)";
      } else {
        const auto bytes = serialized(build.matrix);
        std::istringstream in(bytes);
        auto back = deserialize_hbp(in);
        // The schedule fraction is a run-time knob, not part of the stored format.
        back.fixed_fraction = build.matrix.fixed_fraction;
        if (!(back == build.matrix) || serialized(back) != bytes) round_trip_failure = c.name + " (serialization)";
      }
    }
  }
  const double elapsed = seconds_since(t0);
  report.line("oracle correctness", cases.size() >= 50 && worst <= 1e-12 && elapsed < 60.0,
              std::to_string(cases.size()) + " matrices, max relative error " + fmt(worst) +
                  (worst_case.empty() ? "" : " (" + worst_case + ")") + ", " + fmt(elapsed) + " s");
  report.line("format round trip", round_trip_failure.empty(),
              round_trip_failure.empty() ? std::to_string(cases.size()) + " matrices, triplets and bytes identical"
                                         : "mismatch on " + round_trip_failure);
}

void determinism(Report& report) {
  std::vector<Case> cases{
      {"uniform", generate_synthetic({1500, 1700, SyntheticPattern::Uniform, 9, 2.0, 31}), {128, 64, 8, 0.7}},
      {"powerlaw", generate_synthetic({1800, 1800, SyntheticPattern::PowerLaw, 10, 2.0, 32}), {256, 32, 8, 0.7}},
  };
  std::string failure;
  std::size_t runs = 0;
  for (const auto& c : cases) {
    const auto build = build_hbp_pipeline(coo_to_csr(c.matrix), c.config);
    const auto x = test::random_vector(c.matrix.cols, 5);
    DenseVector reference;
    for (std::size_t workers : {1, 2, 4, 8}) {
      WorkerPool pool(workers);
      for (double f : {0.0, 0.3, 0.7, 1.0}) {
        auto h = build.matrix;
        h.fixed_fraction = f;
        const auto plan = plan_execution(h, workers);
        const auto run = run_spmv(h, x, plan, pool);
        const auto y = combine(run.partial, h.layout, &pool);
        ++runs;
        if (reference.empty()) reference = y;
        const std::string where = c.name + " workers=" + std::to_string(workers) + " f=" + fmt(f);
        if (!bitwise_equal(y, reference) && failure.empty()) failure = "result differs at " + where;

        std::vector<int> seen(build.grid.num_blocks(), 0);
        for (const auto& e : run.log.entries) ++seen[build.grid.block_index(e.block.br, e.block.bc)];
        for (std::size_t b = 0; b < seen.size(); ++b) {
          const int want = build.grid.block_nnz[b] > 0 ? 1 : 0;
          if (seen[b] != want && failure.empty()) failure = "block executed " + std::to_string(seen[b]) + "x at " + where;
        }
      }
    }
  }
  report.line("determinism and exactly-once scheduling", failure.empty(),
              failure.empty() ? std::to_string(runs) + " runs bitwise identical, every non-empty block logged once"
                              : failure);
}

void off_by_one(Report& report, WorkerPool& pool) {
  TripletMatrix m{3000, 2500, {}};
  for (Index r = 0; r < 3000; ++r) m.entries.push_back({r, static_cast<Index>((r * 37) % 2500), 0.5 + r % 13});
  const auto x = test::random_vector(2500, 77);
  const auto h = build_hbp_pipeline(coo_to_csr(m), {512, 64, 8, 0.7}, {}, &pool).matrix;
  const auto y = hbp_spmv(h, x, pool);
  const auto want = dense_oracle_spmv(m, x);
  report.line("single-nonzero rows (last element of every row is accumulated)", y == want,
              "3000 rows, max relative error " + fmt(max_relative_error(y, want)));
}

double measured_reduction(const TripletMatrix& m, const PartitionConfig& cfg) {
  const auto grid = make_grid(coo_to_csr(m), cfg);
  const auto perms = reorder_blocks(grid, Reordering::Hash, sample_hash_params(grid));
  return reduction_summary(group_stats(grid), group_stats(grid, &perms), cfg.warp_size);
}

void load_balance(Report& report) {
  const auto t0 = Clock::now();
  const PartitionConfig cfg{4096, 64, 8, 0.7};
  double none = 0.0, hash = 0.0, sort = 0.0;
  std::size_t hash_below_sort = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto m = generate_synthetic({1024, 1024, SyntheticPattern::PowerLaw, 8.0, 2.0, seed});
    const auto grid = make_grid(coo_to_csr(m), cfg);
    const auto params = sample_hash_params(grid);
    const auto hashed = reorder_blocks(grid, Reordering::Hash, params);
    const auto sorted = reorder_blocks(grid, Reordering::Sort, params);
    const double n = mean_std_dev(group_stats(grid), cfg.warp_size);
    const double h = mean_std_dev(group_stats(grid, &hashed), cfg.warp_size);
    const double s = mean_std_dev(group_stats(grid, &sorted), cfg.warp_size);
    none += n / 20;
    hash += h / 20;
    sort += s / 20;
    hash_below_sort += h < s;
  }
  const double elapsed = seconds_since(t0);
  const bool ok = hash <= 0.6 * none && hash >= sort && elapsed < 10.0;
  report.line("load-balance reduction", ok,
              "mean group std-dev none " + fmt(none, 4) + ", hash " + fmt(hash, 4) + " (" + fmt(hash / none, 3) +
                  " of none, bound 0.6), sort " + fmt(sort, 4) + " (" + fmt(sort / none, 3) + " of none); " +
                  std::to_string(hash_below_sort) + "/20 matrices with hash below sort; " + fmt(elapsed) + " s");

  const char* online = std::getenv("HBP_ONLINE");
  if (online == nullptr || std::string(online) != "1") {
    report.skip("load-balance reduction on ASIC_680k", "networked check, set HBP_ONLINE=1 to run");
    return;
  }
  try {
    const auto path = fetch_matrix("ASIC_680k");
    const double r = measured_reduction(load_matrix(path), PartitionConfig{});
    report.line("load-balance reduction on ASIC_680k", r >= 0.4, "reduction " + fmt(r) + " (bound 0.4)");
  } catch (const std::exception& e) {
    report.line("load-balance reduction on ASIC_680k", false, e.what());
  }
}

void preprocessing(Report& report, WorkerPool& pool) {
  // Counters on a skewed matrix: probes per row must not grow with the block height.
  const auto skewed = coo_to_csr(generate_synthetic({32768, 32768, SyntheticPattern::PowerLaw, 10, 1.8, 41}));
  std::uint64_t comparisons = 0, sort_comparisons = 0;
  std::vector<double> per_row;
  for (std::size_t height : {512, 4096}) {
    const auto grid = make_grid(skewed, PartitionConfig{4096, height, 32, 0.7}, &pool);
    ReorderCounters hash_counters, sort_counters;
    reorder_blocks(grid, Reordering::Hash, sample_hash_params(grid), &pool, &hash_counters);
    reorder_blocks(grid, Reordering::Sort, {}, &pool, &sort_counters);
    comparisons += hash_counters.comparisons;
    sort_comparisons += sort_counters.comparisons;
    per_row.push_back(static_cast<double>(hash_counters.probes) / static_cast<double>(grid.num_slots()));
  }
  const bool counters_ok = comparisons == 0 && per_row[1] <= 1.5 * per_row[0];
  const std::string counter_detail = "hash comparisons " + std::to_string(comparisons) + " (sort " +
                                     std::to_string(sort_comparisons) + "), probes per row " + fmt(per_row[0]) +
                                     " at R=512, " + fmt(per_row[1]) + " at R=4096";

  // Wall time on a 4M-nonzero matrix.
  const auto big = generate_synthetic({65536, 65536, SyntheticPattern::Uniform, 64, 2.0, 42});
  const auto big_grid = make_grid(coo_to_csr(big), PartitionConfig{}, &pool);
  std::vector<double> hash_t, sort_t;
  for (int i = 0; i < 10; ++i) {
    auto t0 = Clock::now();
    const auto params = sample_hash_params(big_grid);
    reorder_blocks(big_grid, Reordering::Hash, params, &pool);
    hash_t.push_back(seconds_since(t0));
    t0 = Clock::now();
    reorder_blocks(big_grid, Reordering::Sort, params, &pool);
    sort_t.push_back(seconds_since(t0));
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return (v[v.size() / 2] + v[(v.size() - 1) / 2]) / 2;
  };
  const double mh = median(hash_t), ms = median(sort_t);
  report.line("preprocessing cost", counters_ok && big.nnz() >= 4000000 && mh <= ms,
              counter_detail + "; " + std::to_string(big.nnz()) + " nnz: median hash " + fmt(mh * 1e3) + " ms vs sort " +
                  fmt(ms * 1e3) + " ms");
}

struct CliRun {
  int code;
  std::string err;
};

CliRun cli_run(std::vector<std::string> args) {
  args.insert(args.begin(), "hbp");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, err.str()};
}

nlohmann::json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

void gflops_bookkeeping(Report& report, const test::TempDir& dir) {
  std::string failure;
  std::size_t checked = 0;
  const std::vector<std::pair<std::string, TripletMatrix>> inputs{
      {"uniform", generate_synthetic({3000, 3000, SyntheticPattern::Uniform, 16, 2.0, 51})},
      {"powerlaw", generate_synthetic({3000, 3000, SyntheticPattern::PowerLaw, 16, 2.0, 52})},
  };
  for (const auto& [name, m] : inputs) {
    const auto mtx = dir / (name + ".mtx");
    const auto json_path = dir / (name + ".json");
    write_matrix_market(mtx, m);
    const auto r = cli_run({"bench", mtx.string(), "--iters", "5", "--warmup", "1", "--col-width", "512",
                            "--row-height", "128", "--json", json_path.string()});
    if (r.code != 0) {
      failure = "bench exited " + std::to_string(r.code) + ": " + r.err;
      break;
    }
    const auto j = read_json(json_path);
    const double nnz = j["nnz"];
    for (const auto& k : j["kernels"]) {
      const double t = k["seconds"], g = k["gflops"];
      ++checked;
      if (std::abs(g - 2 * nnz / t / 1e9) > 1e-12 * std::max(1.0, g) && failure.empty())
        failure = name + "/" + k["name"].get<std::string>() + ": G " + fmt(g, 17) + " vs " + fmt(2 * nnz / t / 1e9, 17);
    }
  }
  report.line("GFLOPS bookkeeping", failure.empty() && checked > 0,
              failure.empty() ? std::to_string(checked) + " kernel reports satisfy G = 2*nnz/t" : failure);
}

void combine_split(Report& report, const test::TempDir& dir) {
  std::vector<double> combine_t, spmv_t;
  std::vector<std::size_t> widths;
  std::string failure;
  for (std::size_t blocks : {4, 16, 64}) {
    const std::size_t cols = 4096 * blocks;
    const auto mtx = dir / ("wide-" + std::to_string(blocks) + ".mtx");
    const auto json_path = dir / ("wide-" + std::to_string(blocks) + ".json");
    write_matrix_market(mtx, generate_synthetic({20000, cols, SyntheticPattern::Uniform, 8, 2.0, 60 + blocks}));
    const auto r = cli_run({"bench", mtx.string(), "--kernels", "hbp", "--iters", "20", "--json", json_path.string()});
    if (r.code != 0) {
      failure = "bench exited " + std::to_string(r.code) + ": " + r.err;
      break;
    }
    const auto j = read_json(json_path);
    const auto& k = j["kernels"][0];
    if (!k.contains("spmv_seconds") || !k.contains("combine_seconds")) {
      failure = "report lacks the spmv/combine split";
      break;
    }
    widths.push_back(j["grid"]["num_col_blocks"]);
    spmv_t.push_back(k["spmv_seconds"]);
    combine_t.push_back(k["combine_seconds"]);
  }
  std::string detail = failure;
  if (failure.empty()) {
    for (std::size_t i = 0; i < widths.size(); ++i) {
      detail += (i ? ", " : "") + std::to_string(widths[i]) + " column blocks: spmv " + fmt(spmv_t[i] * 1e3) +
                " ms, combine " + fmt(combine_t[i] * 1e3) + " ms";
    }
  }
  const bool ok = failure.empty() && combine_t[0] < combine_t[1] && combine_t[1] < combine_t[2];
  report.line("combine split reporting", ok, detail);
}

}  // namespace
}  // namespace hbp

int main() {
  using namespace hbp;
  Report report;
  WorkerPool pool(std::min<std::size_t>(8, WorkerPool::hardware_workers()));
  test::TempDir dir;
  const std::vector<std::function<void()>> steps{
      [&] { oracle_and_round_trip(report, pool); },
      [&] { determinism(report); },
      [&] { off_by_one(report, pool); },
      [&] { load_balance(report); },
      [&] { preprocessing(report, pool); },
      [&] { gflops_bookkeeping(report, dir); },
      [&] { combine_split(report, dir); },
  };
  for (const auto& step : steps) {
    try {
      step();
    } catch (const std::exception& e) {
      report.line("unexpected error", false, e.what());
    }
  }
  std::cout << (report.failed() == 0 ? "all criteria passed" : std::to_string(report.failed()) + " criteria failed")
            << std::endl;
  return report.failed() == 0 ? 0 : 1;
}
