#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace hbp {

// Returns the response body for `url`; throws NetworkError on failure,
// including HTTP error statuses.
using Downloader = std::function<std::string(const std::string& url)>;

Downloader curl_downloader();

struct FetchOptions {
  std::filesystem::path cache_dir;  // empty: default_cache_dir()
  std::string base_url = "https://sparse.tamu.edu/MM";
  Downloader download;  // empty: curl_downloader()
};

// $HBP_CACHE_DIR, else $XDG_CACHE_HOME/hbp, else $HOME/.cache/hbp.
std::filesystem::path default_cache_dir();

struct CollectionName {
  std::string group;
  std::string name;
};

// Accepts "Group/Name", or a bare name for the matrices of the evaluation
// set (ASIC_680k, rajat30, ...). Throws std::invalid_argument otherwise.
CollectionName resolve_collection_name(std::string_view spec);

std::filesystem::path cached_matrix_path(const std::filesystem::path& cache_dir, const CollectionName& id);

// Downloads <base>/<group>/<name>.tar.gz, extracts <name>.mtx and stores it
// at cached_matrix_path(). An existing cache entry is returned without any
// network access. The file is written to a temporary name and renamed, so
// a failed fetch leaves no partial file behind.
std::filesystem::path fetch_matrix(std::string_view spec, const FetchOptions& options = {});

// Archive helpers, exposed for tests.
// Throws IoError on corrupt or truncated gzip data (CRC and length are checked).
std::string gunzip(std::string_view compressed);
// Content of the first regular tar member whose base name equals
// `file_name`. Throws IoError on a bad header checksum, truncation, or a
// missing member.
std::string extract_tar_member(std::string_view tar, std::string_view file_name);

}  // namespace hbp
