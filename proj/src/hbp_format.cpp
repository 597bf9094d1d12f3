#include "hbp/hbp_format.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "hbp/error.hpp"
#include "hbp/worker_pool.hpp"

namespace hbp {

static_assert(sizeof(Offset) == 8, "group_start is stored as u64");

namespace {

void build_block(const CsrMatrix& m, const BlockGrid& grid, const BlockPermutation& perm, std::size_t br,
                 std::size_t bc, HbpMatrix& h) {
  const auto slices = block_rows_of(m, grid, br, bc);
  const std::size_t W = grid.warp_size;
  const std::size_t rows = grid.rows_in_block(br);
  const std::size_t slot_base = grid.slot_offset(br, bc);
  const std::size_t group_base = grid.group_offset(br, bc);
  Offset pos = grid.elem_start(br, bc);

  std::vector<std::size_t> active;
  std::vector<std::size_t> still_active;
  std::vector<Offset> last(W);
  active.reserve(W);
  still_active.reserve(W);

  for (std::size_t g = 0; g * W < rows; ++g) {
    h.group_start[group_base + g] = pos;
    const std::size_t lanes = std::min(W, rows - g * W);

    active.clear();
    std::int32_t zeros = 0;
    for (std::size_t q = 0; q < lanes; ++q) {
      const std::size_t slot = g * W + q;
      const std::uint32_t row = perm.output_hash[slot];
      h.output_hash[slot_base + slot] = row;
      if (slices[row].cols.empty()) {
        h.zero_row[slot_base + slot] = -1;
        ++zeros;
      } else {
        h.zero_row[slot_base + slot] = zeros;
        active.push_back(q);
      }
    }

    for (std::size_t step = 0; !active.empty(); ++step) {
      still_active.clear();
      for (const std::size_t q : active) {
        const RowSlice& row = slices[perm.output_hash[g * W + q]];
        h.col[pos] = row.cols[step];
        h.data[pos] = row.values[step];
        h.add_sign[pos] = -1;
        if (step > 0) h.add_sign[last[q]] = static_cast<std::int32_t>(pos - last[q]);
        last[q] = pos;
        ++pos;
        if (step + 1 < row.cols.size()) still_active.push_back(q);
      }
      active.swap(still_active);
    }
  }
}

[[noreturn]] void fail(const std::string& what) { throw FormatError("hbp: " + what); }

// Walks every stored row and reports (global row, element index) pairs,
// checking structure on the way.
template <typename Visit>
void walk(const HbpMatrix& h, Visit&& visit) {
  const BlockLayout& L = h.layout;
  if (L.warp_size == 0 || L.row_height == 0 || L.col_width == 0 || L.row_height % L.warp_size != 0) {
    fail("invalid partition sizes");
  }
  const std::size_t nnz = h.col.size();
  if (h.data.size() != nnz || h.add_sign.size() != nnz) fail("col/data/add_sign lengths differ");
  if (h.zero_row.size() != L.num_slots() || h.output_hash.size() != L.num_slots()) {
    fail("zero_row/output_hash length does not match rows * column blocks");
  }
  if (h.group_start.size() != L.num_groups() + 1) fail("group_start length does not match group count");
  if (h.group_start.front() != 0 || h.group_start.back() != nnz) fail("group_start does not span [0, nnz]");
  for (std::size_t i = 0; i + 1 < h.group_start.size(); ++i) {
    if (h.group_start[i] > h.group_start[i + 1]) fail("group_start decreases at group " + std::to_string(i));
  }

  std::vector<bool> seen_row;
  std::vector<bool> seen_elem;
  for (std::size_t b = 0; b < L.num_blocks(); ++b) {
    const auto [br, bc] = L.block_at(b);
    const std::size_t rows = L.rows_in_block(br);
    const std::size_t slot_base = L.slot_offset(br, bc);
    const std::size_t group_base = L.group_offset(br, bc);
    const Index col_lo = static_cast<Index>(L.col_begin(bc));
    const Index col_hi = static_cast<Index>(L.col_end(bc));

    seen_row.assign(rows, false);
    for (std::size_t s = 0; s < rows; ++s) {
      const std::uint32_t row = h.output_hash[slot_base + s];
      if (row >= rows || seen_row[row]) fail("output_hash of block " + std::to_string(b) + " is not a permutation");
      seen_row[row] = true;
    }

    for (std::size_t g = 0; g * L.warp_size < rows; ++g) {
      const Offset begin = h.group_start[group_base + g];
      const Offset end = h.group_start[group_base + g + 1];
      const std::size_t lanes = std::min(L.warp_size, rows - g * L.warp_size);
      seen_elem.assign(end - begin, false);
      std::size_t visited = 0;
      std::int32_t zeros = 0;
      for (std::size_t q = 0; q < lanes; ++q) {
        const std::size_t slot = slot_base + g * L.warp_size + q;
        const std::int32_t z = h.zero_row[slot];
        if (z == -1) {
          ++zeros;
          continue;
        }
        if (z != zeros) fail("zero_row[" + std::to_string(slot) + "] = " + std::to_string(z) + ", expected " +
                             std::to_string(zeros));
        const std::size_t global_row = br * L.row_height + h.output_hash[slot];
        Offset j = begin + q - static_cast<Offset>(z);
        for (;;) {
          if (j < begin || j >= end) fail("element chain leaves group region at slot " + std::to_string(slot));
          if (seen_elem[j - begin]) fail("element " + std::to_string(j) + " reached twice");
          seen_elem[j - begin] = true;
          ++visited;
          if (h.col[j] < col_lo || h.col[j] >= col_hi) fail("column outside block at element " + std::to_string(j));
          visit(global_row, j);
          const std::int32_t stride = h.add_sign[j];
          if (stride == -1) break;
          if (stride < 1) fail("invalid add_sign " + std::to_string(stride) + " at element " + std::to_string(j));
          j += static_cast<Offset>(stride);
        }
      }
      if (visited != end - begin) fail("group " + std::to_string(group_base + g) + " has unreachable elements");
    }
  }
}

// Little-endian array I/O. Hosts are little-endian in practice; the
// byte-swapping path keeps the format portable.
template <typename T>
void put_scalar(std::ostream& out, T v) {
  auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(v);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), bytes.size());
}

template <typename T>
void put_array(std::ostream& out, const std::vector<T>& v) {
  put_scalar<std::uint64_t>(out, v.size());
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
  } else {
    for (const T& x : v) put_scalar(out, x);
  }
}

void read_exact(std::istream& in, char* dst, std::size_t n) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) fail("truncated stream");
}

template <typename T>
T get_scalar(std::istream& in) {
  std::array<char, sizeof(T)> bytes;
  read_exact(in, bytes.data(), bytes.size());
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

template <typename T>
std::vector<T> get_array(std::istream& in, std::size_t expected, const char* name) {
  const auto n = get_scalar<std::uint64_t>(in);
  if (n != expected) {
    fail(std::string(name) + " length " + std::to_string(n) + " does not match header (" +
         std::to_string(expected) + ")");
  }
  std::vector<T> v(n);
  read_exact(in, reinterpret_cast<char*>(v.data()), n * sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (T& x : v) {
      auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(x);
      std::reverse(bytes.begin(), bytes.end());
      x = std::bit_cast<T>(bytes);
    }
  }
  return v;
}

}  // namespace

HbpMatrix build_hbp(const CsrMatrix& m, const BlockGrid& grid, const std::vector<BlockPermutation>& perms,
                    const PartitionConfig& config, WorkerPool* pool) {
  config.validate();
  if (grid.rows != m.rows || grid.cols != m.cols || grid.nnz() != m.nnz()) {
    throw std::invalid_argument("build_hbp: grid does not describe the matrix");
  }
  if (grid.col_width != config.col_width || grid.row_height != config.row_height ||
      grid.warp_size != config.warp_size) {
    throw std::invalid_argument("build_hbp: grid was built with a different partition config");
  }
  if (perms.size() != grid.num_blocks()) {
    throw std::invalid_argument("build_hbp: expected " + std::to_string(grid.num_blocks()) + " permutations, got " +
                                std::to_string(perms.size()));
  }
  for (std::size_t b = 0; b < perms.size(); ++b) {
    if (perms[b].output_hash.size() != grid.rows_in_block(grid.block_at(b).br) ||
        !is_permutation(perms[b].output_hash)) {
      throw std::invalid_argument("build_hbp: permutation of block " + std::to_string(b) + " is not a bijection");
    }
  }

  HbpMatrix h;
  h.layout = grid;
  h.fixed_fraction = config.fixed_fraction;
  h.group_start.assign(grid.num_groups() + 1, 0);
  h.col.resize(m.nnz());
  h.data.resize(m.nnz());
  h.add_sign.resize(m.nnz());
  h.zero_row.resize(grid.num_slots());
  h.output_hash.resize(grid.num_slots());
  h.group_start.back() = m.nnz();

  auto body = [&](std::size_t begin, std::size_t end) {
    for (std::size_t b = begin; b < end; ++b) {
      const auto id = grid.block_at(b);
      build_block(m, grid, perms[b], id.br, id.bc, h);
    }
  };
  if (pool != nullptr) {
    parallel_for(*pool, grid.num_blocks(), body);
  } else {
    body(0, grid.num_blocks());
  }
  return h;
}

void validate(const HbpMatrix& h) {
  walk(h, [](std::size_t, Offset) {});
}

TripletMatrix hbp_to_triplets(const HbpMatrix& h) {
  TripletMatrix out{h.rows(), h.cols(), {}};
  out.entries.reserve(h.nnz());
  walk(h, [&](std::size_t row, Offset j) { out.entries.push_back({static_cast<Index>(row), h.col[j], h.data[j]}); });
  std::sort(out.entries.begin(), out.entries.end(),
            [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
  return out;
}

void serialize_hbp(const HbpMatrix& h, std::ostream& out) {
  const BlockLayout& L = h.layout;
  out.write("HBP1", 4);
  put_scalar<std::uint32_t>(out, kHbpVersion);
  for (std::uint64_t v : {std::uint64_t{L.rows}, std::uint64_t{L.cols}, std::uint64_t{h.nnz()},
                          std::uint64_t{L.col_width}, std::uint64_t{L.row_height}, std::uint64_t{L.warp_size},
                          std::uint64_t{L.num_row_blocks}, std::uint64_t{L.num_col_blocks}}) {
    put_scalar(out, v);
  }
  put_array(out, h.group_start);
  put_array(out, h.col);
  put_array(out, h.data);
  put_array(out, h.add_sign);
  put_array(out, h.zero_row);
  put_array(out, h.output_hash);
}

HbpMatrix deserialize_hbp(std::istream& in) {
  char magic[4];
  read_exact(in, magic, 4);
  if (std::memcmp(magic, "HBP1", 4) != 0) fail("bad magic");
  if (const auto version = get_scalar<std::uint32_t>(in); version != kHbpVersion) {
    fail("unsupported version " + std::to_string(version));
  }
  std::uint64_t fields[8];
  for (auto& f : fields) f = get_scalar<std::uint64_t>(in);
  const auto [rows, cols, nnz, col_width, row_height, warp_size, nrb, ncb] = std::to_array(fields);

  HbpMatrix h;
  try {
    h.layout = BlockLayout::make(rows, cols, {col_width, row_height, warp_size, h.fixed_fraction});
  } catch (const std::invalid_argument& e) {
    fail(std::string("invalid header: ") + e.what());
  }
  if (h.layout.num_row_blocks != nrb || h.layout.num_col_blocks != ncb) fail("block counts inconsistent with sizes");
  if (nnz / cols > rows) fail("nnz exceeds rows * cols");

  h.group_start = get_array<Offset>(in, h.layout.num_groups() + 1, "group_start");
  h.col = get_array<Index>(in, nnz, "col");
  h.data = get_array<double>(in, nnz, "data");
  h.add_sign = get_array<std::int32_t>(in, nnz, "add_sign");
  h.zero_row = get_array<std::int32_t>(in, h.layout.num_slots(), "zero_row");
  h.output_hash = get_array<std::uint32_t>(in, h.layout.num_slots(), "output_hash");
  validate(h);
  return h;
}

void save_hbp(const HbpMatrix& h, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create '" + path.string() + "'");
  serialize_hbp(h, out);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

HbpMatrix load_hbp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return deserialize_hbp(in);
}

}  // namespace hbp
