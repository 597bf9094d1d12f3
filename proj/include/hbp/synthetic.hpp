#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "hbp/core_formats.hpp"

namespace hbp {

enum class SyntheticPattern { Uniform, PowerLaw };

SyntheticPattern parse_pattern(std::string_view name);

struct SyntheticSpec {
  std::size_t rows = 1;
  std::size_t cols = 1;
  SyntheticPattern pattern = SyntheticPattern::Uniform;
  double mean_nnz_per_row = 1.0;
  double alpha = 2.0;  // power-law exponent
  std::uint64_t seed = 1;

  // Throws std::invalid_argument for empty dimensions, a negative mean, a
  // mean above cols, or a non-positive alpha.
  void validate() const;
};

// Uniform: each row draws Poisson(mean) distinct columns.
// PowerLaw: rows receive random ranks k; the expected nnz of rank k is
// proportional to k^-alpha, capped at cols, with the scale chosen so the
// expected total is mean * rows. Columns are uniform and distinct.
// Values are uniform in [-1, 1). Output is canonical and seed-deterministic.
TripletMatrix generate_synthetic(const SyntheticSpec& spec);

}  // namespace hbp
