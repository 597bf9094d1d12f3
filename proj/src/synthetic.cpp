#include "hbp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace hbp {

namespace {

// Floyd's sampling of k distinct values from [0, n), returned sorted.
std::vector<Index> distinct_columns(std::size_t k, std::size_t n, std::mt19937_64& rng) {
  std::unordered_set<std::size_t> chosen;
  chosen.reserve(k * 2);
  for (std::size_t j = n - k; j < n; ++j) {
    const std::size_t t = std::uniform_int_distribution<std::size_t>(0, j)(rng);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  std::vector<Index> cols(chosen.begin(), chosen.end());
  std::sort(cols.begin(), cols.end());
  return cols;
}

std::vector<std::size_t> powerlaw_row_counts(const SyntheticSpec& spec, std::mt19937_64& rng) {
  const std::size_t n = spec.rows;
  const double cap = static_cast<double>(spec.cols);
  const double target = spec.mean_nnz_per_row * static_cast<double>(n);

  std::vector<double> weight(n);
  for (std::size_t k = 0; k < n; ++k) weight[k] = std::pow(static_cast<double>(k + 1), -spec.alpha);

  auto total = [&](double scale) {
    double sum = 0.0;
    for (double w : weight) sum += std::min(cap, scale * w);
    return sum;
  };
  // total() is monotone in scale; bisect for total(scale) = target.
  double lo = 0.0;
  double hi = 1.0;
  while (total(hi) < target && hi < 1e300) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (total(mid) < target ? lo : hi) = mid;
  }

  std::vector<std::size_t> rank(n);
  std::iota(rank.begin(), rank.end(), std::size_t{0});
  std::shuffle(rank.begin(), rank.end(), rng);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::size_t> counts(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double expected = std::min(cap, hi * weight[rank[r]]);
    const double whole = std::floor(expected);
    counts[r] = static_cast<std::size_t>(whole) + (unit(rng) < expected - whole ? 1 : 0);
    counts[r] = std::min(counts[r], spec.cols);
  }
  return counts;
}

}  // namespace

SyntheticPattern parse_pattern(std::string_view name) {
  if (name == "uniform") return SyntheticPattern::Uniform;
  if (name == "powerlaw") return SyntheticPattern::PowerLaw;
  throw std::invalid_argument("unknown pattern '" + std::string(name) + "' (expected uniform or powerlaw)");
}

void SyntheticSpec::validate() const {
  if (rows < 1 || cols < 1) throw std::invalid_argument("synthetic matrix needs rows, cols >= 1");
  if (!(mean_nnz_per_row >= 0.0)) throw std::invalid_argument("mean nnz per row must be non-negative");
  if (mean_nnz_per_row > static_cast<double>(cols)) {
    throw std::invalid_argument("mean nnz per row exceeds the column count");
  }
  if (pattern == SyntheticPattern::PowerLaw && !(alpha > 0.0)) {
    throw std::invalid_argument("power-law alpha must be positive");
  }
}

TripletMatrix generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);

  std::vector<std::size_t> counts(spec.rows);
  if (spec.pattern == SyntheticPattern::Uniform) {
    // A mean equal to cols is only reachable with every row full.
    const bool full = spec.mean_nnz_per_row == static_cast<double>(spec.cols);
    std::poisson_distribution<std::size_t> poisson(std::max(spec.mean_nnz_per_row, 1e-12));
    for (auto& c : counts) {
      c = full ? spec.cols : spec.mean_nnz_per_row > 0.0 ? std::min(poisson(rng), spec.cols) : 0;
    }
  } else {
    counts = powerlaw_row_counts(spec, rng);
  }

  TripletMatrix m{spec.rows, spec.cols, {}};
  m.entries.reserve(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  std::uniform_real_distribution<double> value(-1.0, 1.0);
  for (std::size_t r = 0; r < spec.rows; ++r) {
    for (Index c : distinct_columns(counts[r], spec.cols, rng)) {
      m.entries.push_back({static_cast<Index>(r), c, value(rng)});
    }
  }
  return m;
}

}  // namespace hbp
