#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "hbp/core_formats.hpp"

namespace hbp {

enum class MmField { Real, Integer, Pattern };
enum class MmSymmetry { General, Symmetric };

// Only "matrix coordinate" objects are accepted, so those parts of the
// banner are implied.
struct MatrixMarketHeader {
  MmField field = MmField::Real;
  MmSymmetry symmetry = MmSymmetry::General;

  friend bool operator==(const MatrixMarketHeader&, const MatrixMarketHeader&) = default;
};

struct MatrixMarketFile {
  MatrixMarketHeader header;
  TripletMatrix matrix;  // canonical; symmetric files keep the stored triangle only
};

// Throws ParseError on a malformed banner, short size line, out-of-bounds
// entry or an entry count that differs from the size line.
MatrixMarketFile parse_matrix_market(std::istream& in);
MatrixMarketFile read_matrix_market(const std::filesystem::path& path);

// Writes a general coordinate real file with 17 significant digits, which
// parses back to the identical matrix.
void write_matrix_market(std::ostream& out, const TripletMatrix& m);
void write_matrix_market(const std::filesystem::path& path, const TripletMatrix& m);

// Reads a file and returns its full matrix, mirroring symmetric storage.
TripletMatrix load_matrix(const std::filesystem::path& path);

}  // namespace hbp
