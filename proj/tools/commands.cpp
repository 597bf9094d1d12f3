#include "commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "hbp/core_formats.hpp"
#include "hbp/error.hpp"
#include "hbp/fetch.hpp"
#include "hbp/hash_reorder.hpp"
#include "hbp/hbp_format.hpp"
#include "hbp/matrix_market.hpp"
#include "hbp/metrics.hpp"
#include "hbp/partition.hpp"
#include "hbp/pipeline.hpp"
#include "hbp/spmv_engine.hpp"
#include "hbp/synthetic.hpp"
#include "hbp/worker_pool.hpp"

namespace hbp::cli {

namespace {

// Flags shared by every command that partitions a matrix. Values given on
// the command line override a --config file, which overrides defaults.
struct EngineFlags {
  std::optional<std::size_t> col_width, row_height, warp_size, workers;
  std::optional<double> fixed_fraction, hash_quantile;
  std::optional<std::size_t> hash_sample_size;
  std::optional<std::uint64_t> hash_seed;
  std::string config_file;
  std::uint64_t seed = 42;

  void attach(CLI::App& cmd) {
    cmd.add_option("--col-width", col_width, "Column block width (default 4096)");
    cmd.add_option("--row-height", row_height, "Row block height (default 512)");
    cmd.add_option("--warp-size", warp_size, "Lanes per warp group (default 32)");
    cmd.add_option("--fixed-fraction", fixed_fraction, "Share of statically assigned blocks (default 0.7)");
    cmd.add_option("--workers", workers, "Worker threads (default: hardware concurrency)");
    cmd.add_option("--seed", seed, "Seed for the input vector")->capture_default_str();
    cmd.add_option("--hash-sample-size", hash_sample_size, "Rows sampled to pick hash constants (default 4096)");
    cmd.add_option("--hash-seed", hash_seed, "Seed of the hash sampling");
    cmd.add_option("--hash-quantile", hash_quantile, "Quantile kept within the 0..8 buckets (default 0.9)");
    cmd.add_option("--config", config_file, "JSON file with partition.* and hash.* keys");
  }

  struct Resolved {
    PartitionConfig partition;
    HashConfig hash;
    std::size_t workers;
  };

  Resolved resolve() const {
    Resolved r{PartitionConfig{}, HashConfig{}, WorkerPool::hardware_workers()};
    if (!config_file.empty()) apply_file(r);
    if (col_width) r.partition.col_width = *col_width;
    if (row_height) r.partition.row_height = *row_height;
    if (warp_size) r.partition.warp_size = *warp_size;
    if (fixed_fraction) r.partition.fixed_fraction = *fixed_fraction;
    if (hash_sample_size) r.hash.sample_size = *hash_sample_size;
    if (hash_seed) r.hash.seed = *hash_seed;
    if (hash_quantile) r.hash.quantile = *hash_quantile;
    if (workers) r.workers = *workers;
    if (r.workers == 0) throw std::invalid_argument("--workers must be >= 1");
    r.partition.validate();
    return r;
  }

 private:
  void apply_file(Resolved& r) const {
    std::ifstream in(config_file);
    if (!in) throw IoError("cannot open config '" + config_file + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("config '" + config_file + "': " + e.what());
    }
    // Accept nested objects and dotted keys alike.
    const nlohmann::json flat = j.flatten();
    for (const auto& [key, value] : flat.items()) {
      if (!value.is_number()) throw ParseError("config '" + config_file + "': '" + key + "' must be a number");
      std::string k = key.substr(1);
      std::replace(k.begin(), k.end(), '/', '.');
      if (k == "partition.col_width") {
        r.partition.col_width = value.get<std::size_t>();
      } else if (k == "partition.row_height") {
        r.partition.row_height = value.get<std::size_t>();
      } else if (k == "partition.warp_size") {
        r.partition.warp_size = value.get<std::size_t>();
      } else if (k == "partition.fixed_fraction") {
        r.partition.fixed_fraction = value.get<double>();
      } else if (k == "hash.sample_size") {
        r.hash.sample_size = value.get<std::size_t>();
      } else if (k == "hash.seed") {
        r.hash.seed = value.get<std::uint64_t>();
      } else if (k == "hash.quantile") {
        r.hash.quantile = value.get<double>();
      } else if (k == "workers") {
        r.workers = value.get<std::size_t>();
      } else {
        throw std::invalid_argument("config '" + config_file + "': unknown key '" + k + "'");
      }
    }
  }
};

struct LoadedInput {
  std::string name;
  TripletMatrix triplets;
  CsrMatrix csr;
  std::optional<HbpMatrix> hbp;  // set when the input was a .hbp file
};

LoadedInput load_input(const std::string& path) {
  LoadedInput in;
  in.name = std::filesystem::path(path).stem().string();
  if (std::filesystem::path(path).extension() == ".hbp") {
    in.hbp = load_hbp(path);
    in.triplets = hbp_to_triplets(*in.hbp);
  } else {
    in.triplets = load_matrix(path);
  }
  in.csr = coo_to_csr(in.triplets);
  return in;
}

DenseVector random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  DenseVector x(n);
  for (auto& v : x) v = dist(rng);
  return x;
}

std::string fmt_seconds(double s) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(3) << s;
  return os.str();
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// ---------------------------------------------------------------- convert

struct ConvertArgs {
  std::string input;
  std::string output;
  EngineFlags flags;
};

int cmd_convert(const ConvertArgs& a, std::ostream& out) {
  const auto cfg = a.flags.resolve();
  const auto csr = coo_to_csr(load_matrix(a.input));
  WorkerPool pool(cfg.workers);
  const auto build = build_hbp_pipeline(csr, cfg.partition, cfg.hash, &pool);
  save_hbp(build.matrix, a.output);

  out << "wrote " << a.output << " (" << csr.rows << "x" << csr.cols << ", nnz " << csr.nnz() << ", "
      << build.grid.num_row_blocks << "x" << build.grid.num_col_blocks << " blocks)\n";
  out << "hash: shift=" << build.params.shift << " stride=" << build.params.stride
      << " multiplier=" << build.params.multiplier << " modulus=" << build.params.modulus << '\n';
  out << "preprocessing seconds: grid " << fmt_seconds(build.times.grid_seconds) << ", sampling "
      << fmt_seconds(build.times.sampling_seconds) << ", hash " << fmt_seconds(build.times.hash_reorder_seconds)
      << ", build " << fmt_seconds(build.times.format_build_seconds) << '\n';
  return kOk;
}

// ----------------------------------------------------------------- verify

struct VerifyArgs {
  std::string input;
  double tolerance = 1e-10;
  EngineFlags flags;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out, std::ostream& err) {
  auto cfg = a.flags.resolve();
  const auto in = load_input(a.input);
  if (in.hbp) cfg.partition = in.hbp->config();

  const auto x = random_vector(in.csr.cols, a.flags.seed);
  const auto want = dense_oracle_spmv(in.triplets, x);
  WorkerPool pool(cfg.workers);

  const auto grid = make_grid(in.csr, cfg.partition, &pool);
  const HbpMatrix hbp =
      in.hbp ? *in.hbp : build_hbp_pipeline(in.csr, cfg.partition, cfg.hash, &pool).matrix;

  const std::vector<std::pair<std::string, DenseVector>> results = {
      {"csr", csr_spmv(in.csr, x)},
      {"2d", block2d_spmv_baseline(in.csr, grid, x, cfg.workers)},
      {"hbp", hbp_spmv(hbp, x, pool)},
  };

  int status = kOk;
  for (const auto& [name, got] : results) {
    const double e = max_relative_error(got, want);
    const bool ok = e <= a.tolerance;
    out << std::left << std::setw(4) << name << " max_rel_err " << std::scientific << std::setprecision(3) << e
        << (ok ? "  ok" : "  FAIL") << '\n';
    if (!ok) {
      err << "verification failed: kernel '" << name << "' exceeds tolerance " << a.tolerance << '\n';
      status = kVerifyFailed;
    }
  }
  return status;
}

// ------------------------------------------------------------------ bench

struct BenchArgs {
  std::string input;
  std::string kernels = "csr,2d,hbp";
  std::size_t iterations = 20;
  std::size_t warmup = 3;
  std::string json_path;
  EngineFlags flags;
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  const auto names = split_list(a.kernels);
  for (const auto& k : names) {
    if (k != "csr" && k != "2d" && k != "hbp") throw std::invalid_argument("unknown kernel '" + k + "'");
  }
  if (names.empty()) throw std::invalid_argument("--kernels is empty");
  if (a.iterations == 0) throw std::invalid_argument("--iters must be >= 1");

  auto cfg = a.flags.resolve();
  const auto in = load_input(a.input);
  if (in.hbp) cfg.partition = in.hbp->config();
  WorkerPool pool(cfg.workers);

  auto build = build_hbp_pipeline(in.csr, cfg.partition, cfg.hash, &pool);
  {
    const auto start = std::chrono::steady_clock::now();
    const auto sorted = reorder_blocks(build.grid, Reordering::Sort, build.params, &pool);
    build.times.sort_reorder_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  const HbpMatrix& hbp = in.hbp ? *in.hbp : build.matrix;

  BenchReport report;
  report.matrix = in.name;
  report.rows = in.csr.rows;
  report.cols = in.csr.cols;
  report.nnz = in.csr.nnz();
  report.workers = cfg.workers;
  report.iterations = a.iterations;
  report.config = cfg.partition;
  report.num_row_blocks = build.grid.num_row_blocks;
  report.num_col_blocks = build.grid.num_col_blocks;
  report.hash = build.params;
  report.preprocessing = build.times;

  const auto x = random_vector(in.csr.cols, a.flags.seed);
  DenseVector y(in.csr.rows);
  PartialVector partial;
  const std::size_t nnz = in.csr.nnz();

  for (const auto& name : names) {
    if (name == "csr") {
      const auto t = time_kernel([&] { csr_spmv_parallel(in.csr, x, y, pool); }, a.iterations, a.warmup);
      report.kernels.push_back(make_kernel_report("csr", nnz, t));
      continue;
    }

    std::function<void()> spmv_part;
    const auto plan = name == "hbp" ? plan_execution(hbp, cfg.workers)
                                    : plan_execution(build.grid, cfg.partition, cfg.workers);
    Block2dMatrix b2d;
    if (name == "hbp") {
      spmv_part = [&] { run_spmv(hbp, x, plan, pool, partial); };
    } else {
      b2d = build_block2d(in.csr, build.grid);
      spmv_part = [&] { run_block2d(b2d, x, plan, pool, partial); };
    }
    const BlockLayout& layout = name == "hbp" ? hbp.layout : b2d.layout;
    auto combine_part = [&] { combine_into(partial, layout, y, &pool); };

    const auto total = time_kernel([&] { spmv_part(); combine_part(); }, a.iterations, a.warmup);
    const auto spmv_t = time_kernel(spmv_part, a.iterations, a.warmup);
    const auto combine_t = time_kernel(combine_part, a.iterations, a.warmup);
    auto k = make_kernel_report(name, nnz, total);
    k.spmv_seconds = spmv_t.median;
    k.combine_seconds = combine_t.median;
    report.kernels.push_back(std::move(k));
  }

  out << report.matrix << ": " << report.rows << "x" << report.cols << ", nnz " << report.nnz << ", "
      << report.workers << " workers, " << report.num_row_blocks << "x" << report.num_col_blocks << " blocks\n";
  for (const auto& k : report.kernels) {
    out << "  " << std::left << std::setw(4) << k.name << " t=" << fmt_seconds(k.seconds) << " s  "
        << std::fixed << std::setprecision(3) << k.gflops << " GFLOPS";
    if (k.spmv_seconds) out << "  (spmv " << fmt_seconds(*k.spmv_seconds) << ", combine " << fmt_seconds(*k.combine_seconds) << ")";
    out << '\n';
  }
  const auto& p = report.preprocessing;
  out << "  preprocessing: grid " << fmt_seconds(p.grid_seconds) << ", sampling " << fmt_seconds(p.sampling_seconds)
      << ", hash " << fmt_seconds(p.hash_reorder_seconds) << ", sort " << fmt_seconds(p.sort_reorder_seconds)
      << ", build " << fmt_seconds(p.format_build_seconds) << '\n';

  if (!a.json_path.empty()) {
    std::ofstream f(a.json_path);
    if (!f) throw IoError("cannot create '" + a.json_path + "'");
    f << to_json(report).dump(2) << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
  std::string input;
  std::string reorder = "hash";
  std::string csv_path;
  EngineFlags flags;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
  const Reordering wanted = parse_reordering(a.reorder);
  auto cfg = a.flags.resolve();
  const auto in = load_input(a.input);
  if (in.hbp) cfg.partition = in.hbp->config();

  WorkerPool pool(cfg.workers);
  const auto grid = make_grid(in.csr, cfg.partition, &pool);
  const auto params = sample_hash_params(grid, cfg.hash);
  const auto hashed = reorder_blocks(grid, Reordering::Hash, params, &pool);
  const auto sorted = reorder_blocks(grid, Reordering::Sort, params, &pool);

  const auto none_stats = group_stats(grid);
  const auto hash_stats = group_stats(grid, &hashed);
  const auto sort_stats = group_stats(grid, &sorted);
  const auto& chosen = wanted == Reordering::None ? none_stats : wanted == Reordering::Hash ? hash_stats : sort_stats;

  std::ostream* summary = &out;
  if (a.csv_path.empty()) {
    write_group_stats_csv(out, chosen, to_string(wanted));
    summary = &err;
  } else {
    std::ofstream f(a.csv_path);
    if (!f) throw IoError("cannot create '" + a.csv_path + "'");
    write_group_stats_csv(f, chosen, to_string(wanted));
  }

  const std::size_t W = grid.warp_size;
  *summary << std::fixed << std::setprecision(4) << "groups " << chosen.size() << " (full: "
           << std::count_if(chosen.begin(), chosen.end(), [&](const GroupStats& s) { return s.lane_nnz.size() == W; })
           << ")\n"
           << "mean std_dev none " << mean_std_dev(none_stats, W) << ", hash " << mean_std_dev(hash_stats, W)
           << ", sort " << mean_std_dev(sort_stats, W) << '\n'
           << "reduction hash_vs_none " << reduction_summary(none_stats, hash_stats, W) << ", sort_vs_none "
           << reduction_summary(none_stats, sort_stats, W) << '\n';
  return kOk;
}

// --------------------------------------------------------------- generate

struct GenerateArgs {
  SyntheticSpec spec;
  std::string pattern = "uniform";
  std::string output;
};

int cmd_generate(GenerateArgs a, std::ostream& out) {
  a.spec.pattern = parse_pattern(a.pattern);
  const auto m = generate_synthetic(a.spec);
  write_matrix_market(a.output, m);
  out << "wrote " << a.output << " (" << m.rows << "x" << m.cols << ", nnz " << m.nnz() << ")\n";
  return kOk;
}

// ------------------------------------------------------------------ fetch

struct FetchArgs {
  std::string name;
  std::string cache_dir;
  std::string base_url = FetchOptions{}.base_url;
};

int cmd_fetch(const FetchArgs& a, std::ostream& out) {
  FetchOptions opts;
  opts.cache_dir = a.cache_dir;
  opts.base_url = a.base_url;
  out << fetch_matrix(a.name, opts).string() << '\n';
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hash-based partition SpMV toolkit"};
  app.require_subcommand(1);

  ConvertArgs convert;
  auto* c = app.add_subcommand("convert", "Convert a Matrix Market file to .hbp");
  c->add_option("input", convert.input, "Input .mtx")->required();
  c->add_option("output", convert.output, "Output .hbp")->required();
  convert.flags.attach(*c);

  VerifyArgs verify;
  auto* v = app.add_subcommand("verify", "Check CSR, 2D and HBP kernels against the dense oracle");
  v->add_option("input", verify.input, "Input .mtx or .hbp")->required();
  v->add_option("--tolerance", verify.tolerance, "Maximum relative error")->capture_default_str();
  verify.flags.attach(*v);

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Time SpMV kernels and preprocessing");
  b->add_option("input", bench.input, "Input .mtx or .hbp")->required();
  b->add_option("--kernels", bench.kernels, "Comma-separated subset of csr,2d,hbp")->capture_default_str();
  b->add_option("--iters", bench.iterations, "Timed iterations (median reported)")->capture_default_str();
  b->add_option("--warmup", bench.warmup, "Untimed warmup runs")->capture_default_str();
  b->add_option("--json", bench.json_path, "Write the report as JSON");
  bench.flags.attach(*b);

  AnalyzeArgs analyze;
  auto* an = app.add_subcommand("analyze", "Per-warp-group load balance statistics");
  an->add_option("input", analyze.input, "Input .mtx or .hbp")->required();
  an->add_option("--reorder", analyze.reorder, "none, hash or sort")->capture_default_str();
  an->add_option("--csv", analyze.csv_path, "Write the CSV here instead of stdout");
  analyze.flags.attach(*an);

  GenerateArgs generate;
  auto* g = app.add_subcommand("generate", "Write a seeded synthetic matrix");
  g->add_option("output", generate.output, "Output .mtx")->required();
  g->add_option("--rows", generate.spec.rows)->required();
  g->add_option("--cols", generate.spec.cols)->required();
  g->add_option("--pattern", generate.pattern, "uniform or powerlaw")->capture_default_str();
  g->add_option("--mean", generate.spec.mean_nnz_per_row, "Mean nonzeros per row")->capture_default_str();
  g->add_option("--alpha", generate.spec.alpha, "Power-law exponent")->capture_default_str();
  g->add_option("--seed", generate.spec.seed)->capture_default_str();

  FetchArgs fetch;
  auto* f = app.add_subcommand("fetch", "Download a SuiteSparse collection matrix into the cache");
  f->add_option("name", fetch.name, "Group/Name, or a bare name from the evaluation set")->required();
  f->add_option("--cache-dir", fetch.cache_dir, "Cache directory (default $HBP_CACHE_DIR)");
  f->add_option("--base-url", fetch.base_url)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (c->parsed()) return cmd_convert(convert, out);
    if (v->parsed()) return cmd_verify(verify, out, err);
    if (b->parsed()) return cmd_bench(bench, out);
    if (an->parsed()) return cmd_analyze(analyze, out, err);
    if (g->parsed()) return cmd_generate(generate, out);
    if (f->parsed()) return cmd_fetch(fetch, out);
  } catch (const NetworkError& e) {
    err << "error: " << e.what() << '\n';
    return kNetworkError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  }
  return kUsage;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace hbp::cli
