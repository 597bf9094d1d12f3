#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "archive_support.hpp"
#include "hbp/error.hpp"
#include "hbp/fetch.hpp"
#include "hbp/matrix_market.hpp"
#include "test_support.hpp"

namespace hbp {
namespace {

const std::string kMtx = "%%MatrixMarket matrix coordinate real general\n3 3 2\n1 1 1.5\n3 2 -2\n";

std::string archive_for(const std::string& name) {
  return test::gzip(test::make_tar({{name + "/README.txt", "about"}, {name + "/" + name + ".mtx", kMtx}}));
}

std::size_t files_in(const std::filesystem::path& dir) {
  std::size_t n = 0;
  if (!std::filesystem::exists(dir)) return 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) n += e.is_regular_file();
  return n;
}

TEST(Archive, GunzipAndExtract) {
  const std::string payload(5000, 'x');
  EXPECT_EQ(gunzip(test::gzip(payload)), payload);
  const auto tar = test::make_tar({{"a/one.txt", "1"}, {"a/two.mtx", "two"}});
  EXPECT_EQ(extract_tar_member(tar, "two.mtx"), "two");
  EXPECT_THROW(extract_tar_member(tar, "three.mtx"), IoError);
  auto bad = tar;
  bad[0] ^= 1;
  EXPECT_THROW(extract_tar_member(bad, "two.mtx"), IoError);
  const auto big = test::make_tar({{"big.mtx", std::string(1000, 'z')}});
  EXPECT_THROW(extract_tar_member(big.substr(0, 700), "big.mtx"), IoError);
}

TEST(Archive, CorruptGzip) {
  const auto gz = test::gzip(std::string(1000, 'y'));
  EXPECT_THROW(gunzip(gz.substr(0, gz.size() / 2)), IoError);
  auto crc = gz;
  crc[crc.size() - 6] ^= 0x55;
  EXPECT_THROW(gunzip(crc), IoError);
  EXPECT_THROW(gunzip("not gzip at all"), IoError);
}

TEST(Names, Resolution) {
  const auto a = resolve_collection_name("ASIC_680k");
  EXPECT_EQ(a.group, "Sandia");
  EXPECT_EQ(resolve_collection_name("rajat30").group, "Rajat");
  EXPECT_EQ(resolve_collection_name("kron_g500-logn21").group, "DIMACS10");
  const auto g = resolve_collection_name("HB/bcsstk01");
  EXPECT_EQ(g.group, "HB");
  EXPECT_EQ(g.name, "bcsstk01");
  EXPECT_THROW(resolve_collection_name("nonexistent_matrix"), std::invalid_argument);
  EXPECT_THROW(resolve_collection_name("a/b/c"), std::invalid_argument);
}

TEST(Fetch, DownloadsExtractsAndCaches) {
  test::TempDir dir;
  std::vector<std::string> urls;
  FetchOptions opts;
  opts.cache_dir = dir.path();
  opts.base_url = "https://example.invalid/MM";
  opts.download = [&](const std::string& url) {
    urls.push_back(url);
    return archive_for("rajat30");
  };
  const auto path = fetch_matrix("rajat30", opts);
  ASSERT_EQ(urls.size(), 1u);
  EXPECT_EQ(urls[0], "https://example.invalid/MM/Rajat/rajat30.tar.gz");
  EXPECT_EQ(path, cached_matrix_path(dir.path(), {"Rajat", "rajat30"}));
  EXPECT_EQ(read_matrix_market(path).matrix.nnz(), 2u);

  // A second call is served from the cache.
  EXPECT_EQ(fetch_matrix("Rajat/rajat30", opts), path);
  EXPECT_EQ(urls.size(), 1u);
}

TEST(Fetch, ErrorsLeaveNoFiles) {
  test::TempDir dir;
  FetchOptions opts;
  opts.cache_dir = dir.path();
  opts.download = [](const std::string&) -> std::string { throw NetworkError("HTTP 404"); };
  EXPECT_THROW(fetch_matrix("Foo/bar", opts), NetworkError);
  EXPECT_EQ(files_in(dir.path()), 0u);

  const auto good = archive_for("bar");
  opts.download = [&](const std::string&) { return good.substr(0, good.size() / 2); };
  EXPECT_THROW(fetch_matrix("Foo/bar", opts), IoError);
  EXPECT_EQ(files_in(dir.path()), 0u);

  opts.download = [&](const std::string&) { return archive_for("other"); };
  EXPECT_THROW(fetch_matrix("Foo/bar", opts), IoError);
  EXPECT_EQ(files_in(dir.path()), 0u);
}

TEST(Fetch, CacheDirFromEnvironment) {
  ::setenv("HBP_CACHE_DIR", "/tmp/hbp-env-cache", 1);
  EXPECT_EQ(default_cache_dir(), std::filesystem::path("/tmp/hbp-env-cache"));
  ::unsetenv("HBP_CACHE_DIR");
  EXPECT_FALSE(default_cache_dir().empty());
}

}  // namespace
}  // namespace hbp
