#include "hbp/fetch.hpp"

#include <curl/curl.h>
#include <zlib.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <stdexcept>
#include <system_error>

#include "hbp/error.hpp"

namespace hbp {

namespace {

// Groups of the matrices used in the evaluation, so they can be fetched
// by bare name.
const std::map<std::string, std::string, std::less<>>& known_groups() {
  static const std::map<std::string, std::string, std::less<>> groups = {
      {"ASIC_320k", "Sandia"},          {"ASIC_680k", "Sandia"},          {"barrier2-3", "Schenk_ISEI"},
      {"kron_g500-logn18", "DIMACS10"}, {"kron_g500-logn19", "DIMACS10"}, {"kron_g500-logn20", "DIMACS10"},
      {"kron_g500-logn21", "DIMACS10"}, {"mip1", "Andrianov"},            {"nxp1", "Freescale"},
      {"ohne2", "Schenk_ISEI"},         {"rajat21", "Rajat"},             {"rajat24", "Rajat"},
      {"rajat29", "Rajat"},             {"rajat30", "Rajat"},
  };
  return groups;
}

std::size_t append_body(char* ptr, std::size_t size, std::size_t nmemb, void* userdata) {
  static_cast<std::string*>(userdata)->append(ptr, size * nmemb);
  return size * nmemb;
}

std::uint64_t parse_octal(std::string_view field) {
  std::uint64_t v = 0;
  for (char c : field) {
    if (c == '\0' || c == ' ') {
      if (v > 0) break;
      continue;
    }
    if (c < '0' || c > '7') throw IoError("tar: malformed numeric field");
    v = v * 8 + static_cast<std::uint64_t>(c - '0');
  }
  return v;
}

std::string_view c_field(std::string_view block, std::size_t offset, std::size_t len) {
  auto f = block.substr(offset, len);
  return f.substr(0, f.find('\0'));
}

std::string base_name(std::string_view path) {
  const auto slash = path.find_last_of('/');
  return std::string(slash == std::string_view::npos ? path : path.substr(slash + 1));
}

}  // namespace

Downloader curl_downloader() {
  return [](const std::string& url) {
    static std::once_flag init;
    std::call_once(init, [] { curl_global_init(CURL_GLOBAL_DEFAULT); });

    CURL* curl = curl_easy_init();
    if (curl == nullptr) throw NetworkError("curl initialisation failed");
    std::string body;
    curl_easy_setopt(curl, CURLOPT_URL, url.c_str());
    curl_easy_setopt(curl, CURLOPT_FOLLOWLOCATION, 1L);
    curl_easy_setopt(curl, CURLOPT_FAILONERROR, 1L);
    curl_easy_setopt(curl, CURLOPT_WRITEFUNCTION, append_body);
    curl_easy_setopt(curl, CURLOPT_WRITEDATA, &body);
    curl_easy_setopt(curl, CURLOPT_CONNECTTIMEOUT, 30L);
    const CURLcode rc = curl_easy_perform(curl);
    long status = 0;
    curl_easy_getinfo(curl, CURLINFO_RESPONSE_CODE, &status);
    curl_easy_cleanup(curl);
    if (rc != CURLE_OK) {
      throw NetworkError("GET " + url + " failed: " + curl_easy_strerror(rc) +
                         (status != 0 ? " (HTTP " + std::to_string(status) + ")" : ""));
    }
    return body;
  };
}

std::filesystem::path default_cache_dir() {
  if (const char* dir = std::getenv("HBP_CACHE_DIR"); dir != nullptr && *dir != '\0') return dir;
  if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg != nullptr && *xdg != '\0') {
    return std::filesystem::path(xdg) / "hbp";
  }
  if (const char* home = std::getenv("HOME"); home != nullptr && *home != '\0') {
    return std::filesystem::path(home) / ".cache" / "hbp";
  }
  return std::filesystem::current_path() / ".hbp-cache";
}

CollectionName resolve_collection_name(std::string_view spec) {
  if (const auto slash = spec.find('/'); slash != std::string_view::npos) {
    if (slash == 0 || slash + 1 == spec.size() || spec.find('/', slash + 1) != std::string_view::npos) {
      throw std::invalid_argument("expected Group/Name, got '" + std::string(spec) + "'");
    }
    return {std::string(spec.substr(0, slash)), std::string(spec.substr(slash + 1))};
  }
  const auto& groups = known_groups();
  if (auto it = groups.find(spec); it != groups.end()) return {it->second, it->first};
  throw std::invalid_argument("unknown matrix '" + std::string(spec) + "'; use Group/Name");
}

std::filesystem::path cached_matrix_path(const std::filesystem::path& cache_dir, const CollectionName& id) {
  return cache_dir / id.group / (id.name + ".mtx");
}

std::string gunzip(std::string_view compressed) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw IoError("gzip: inflateInit failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(compressed.data()));
  zs.avail_in = static_cast<uInt>(compressed.size());

  std::string out;
  char buf[1 << 16];
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof buf;
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw IoError(rc == Z_BUF_ERROR ? "gzip: truncated archive" : "gzip: corrupt archive (CRC or data error)");
    }
    out.append(buf, sizeof buf - zs.avail_out);
  }
  inflateEnd(&zs);
  return out;
}

std::string extract_tar_member(std::string_view tar, std::string_view file_name) {
  constexpr std::size_t kBlock = 512;
  std::string long_name;
  std::size_t pos = 0;
  while (pos + kBlock <= tar.size()) {
    const std::string_view header = tar.substr(pos, kBlock);
    if (header.find_first_not_of('\0') == std::string_view::npos) break;  // end-of-archive marker

    std::uint64_t checksum = 0;
    for (std::size_t i = 0; i < kBlock; ++i) {
      checksum += (i >= 148 && i < 156) ? ' ' : static_cast<unsigned char>(header[i]);
    }
    if (checksum != parse_octal(header.substr(148, 8))) throw IoError("tar: header checksum mismatch");

    const std::uint64_t size = parse_octal(header.substr(124, 12));
    const char type = header[156];
    const std::size_t data = pos + kBlock;
    if (data + size > tar.size()) throw IoError("tar: member extends past end of archive");
    const std::string_view content = tar.substr(data, size);

    std::string name;
    if (!long_name.empty()) {
      name = std::move(long_name);
      long_name.clear();
    } else {
      const auto prefix = c_field(header, 345, 155);
      name = prefix.empty() ? std::string(c_field(header, 0, 100))
                            : std::string(prefix) + "/" + std::string(c_field(header, 0, 100));
    }

    if (type == 'L') {
      long_name = std::string(content.substr(0, content.find('\0')));
    } else if ((type == '0' || type == '\0') && base_name(name) == file_name) {
      return std::string(content);
    }
    pos = data + (size + kBlock - 1) / kBlock * kBlock;
  }
  throw IoError("tar: archive has no member named '" + std::string(file_name) + "'");
}

std::filesystem::path fetch_matrix(std::string_view spec, const FetchOptions& options) {
  const CollectionName id = resolve_collection_name(spec);
  const auto cache = options.cache_dir.empty() ? default_cache_dir() : options.cache_dir;
  const auto target = cached_matrix_path(cache, id);
  if (std::filesystem::exists(target)) return target;

  const Downloader download = options.download ? options.download : curl_downloader();
  const std::string archive = download(options.base_url + "/" + id.group + "/" + id.name + ".tar.gz");
  const std::string mtx = extract_tar_member(gunzip(archive), id.name + ".mtx");

  std::error_code ec;
  std::filesystem::create_directories(target.parent_path(), ec);
  if (ec) throw IoError("cannot create cache directory '" + target.parent_path().string() + "': " + ec.message());
  auto tmp = target;
  tmp += ".part";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(mtx.data(), static_cast<std::streamsize>(mtx.size()));
    if (!out) {
      out.close();
      std::filesystem::remove(tmp, ec);
      throw IoError("cannot write '" + tmp.string() + "'");
    }
  }
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move fetched matrix into place at '" + target.string() + "'");
  }
  return target;
}

}  // namespace hbp
