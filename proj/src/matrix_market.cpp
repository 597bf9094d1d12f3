#include "hbp/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>
#include <vector>

#include "hbp/error.hpp"

namespace hbp {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

template <typename T>
bool parse_number(std::string_view token, T& out) {
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

MatrixMarketHeader parse_banner(const std::string& line) {
  const auto tokens = split_ws(line);
  if (tokens.size() != 5 || tokens[0] != "%%MatrixMarket") {
    throw ParseError("malformed Matrix Market banner: '" + line + "'");
  }
  if (lowercase(tokens[1]) != "matrix" || lowercase(tokens[2]) != "coordinate") {
    throw ParseError("unsupported Matrix Market object/format: '" + line + "'");
  }
  MatrixMarketHeader header;
  const auto field = lowercase(tokens[3]);
  if (field == "real") {
    header.field = MmField::Real;
  } else if (field == "integer") {
    header.field = MmField::Integer;
  } else if (field == "pattern") {
    header.field = MmField::Pattern;
  } else {
    throw ParseError("unsupported Matrix Market field '" + std::string(tokens[3]) + "'");
  }
  const auto symmetry = lowercase(tokens[4]);
  if (symmetry == "general") {
    header.symmetry = MmSymmetry::General;
  } else if (symmetry == "symmetric") {
    header.symmetry = MmSymmetry::Symmetric;
  } else {
    throw ParseError("unsupported Matrix Market symmetry '" + std::string(tokens[4]) + "'");
  }
  return header;
}

bool is_skippable(const std::string& line) {
  const auto first = line.find_first_not_of(" \t\r");
  return first == std::string::npos || line[first] == '%';
}

}  // namespace

MatrixMarketFile parse_matrix_market(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty Matrix Market stream");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  MatrixMarketFile file;
  file.header = parse_banner(line);

  std::size_t line_no = 1;
  std::size_t declared = 0;
  bool have_size = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_skippable(line)) continue;
    const auto tokens = split_ws(line);
    std::size_t rows = 0, cols = 0, nnz = 0;
    if (tokens.size() < 3 || !parse_number(tokens[0], rows) || !parse_number(tokens[1], cols) ||
        !parse_number(tokens[2], nnz)) {
      throw ParseError("line " + std::to_string(line_no) + ": size line needs three integers");
    }
    file.matrix.rows = rows;
    file.matrix.cols = cols;
    declared = nnz;
    file.matrix.entries.reserve(std::min<std::size_t>(nnz, std::size_t{1} << 26));
    have_size = true;
    break;
  }
  if (!have_size) throw ParseError("missing Matrix Market size line");

  const std::size_t want_tokens = file.header.field == MmField::Pattern ? 2 : 3;
  auto& m = file.matrix;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_skippable(line)) continue;
    const auto tokens = split_ws(line);
    std::size_t r = 0, c = 0;
    double v = 1.0;
    if (tokens.size() < want_tokens || !parse_number(tokens[0], r) || !parse_number(tokens[1], c) ||
        (want_tokens == 3 && !parse_number(tokens[2], v))) {
      throw ParseError("line " + std::to_string(line_no) + ": malformed entry '" + line + "'");
    }
    if (r < 1 || r > m.rows || c < 1 || c > m.cols) {
      throw ParseError("line " + std::to_string(line_no) + ": entry (" + std::to_string(r) + ", " +
                       std::to_string(c) + ") outside declared " + std::to_string(m.rows) + "x" +
                       std::to_string(m.cols));
    }
    m.entries.push_back({static_cast<Index>(r - 1), static_cast<Index>(c - 1), v});
  }
  if (m.entries.size() != declared) {
    throw ParseError("entry count mismatch: declared " + std::to_string(declared) + ", found " +
                     std::to_string(m.entries.size()));
  }
  canonicalize(m);
  return file;
}

MatrixMarketFile read_matrix_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return parse_matrix_market(in);
}

void write_matrix_market(std::ostream& out, const TripletMatrix& m) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows << ' ' << m.cols << ' ' << m.nnz() << '\n';
  char buf[64];
  for (const auto& t : m.entries) {
    const int n = std::snprintf(buf, sizeof buf, "%u %u %.17g\n", t.row + 1, t.col + 1, t.value);
    out.write(buf, n);
  }
}

void write_matrix_market(const std::filesystem::path& path, const TripletMatrix& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot create '" + path.string() + "'");
  write_matrix_market(out, m);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

TripletMatrix load_matrix(const std::filesystem::path& path) {
  auto file = read_matrix_market(path);
  if (file.header.symmetry == MmSymmetry::Symmetric) return expand_symmetric(file.matrix);
  return std::move(file.matrix);
}

}  // namespace hbp
