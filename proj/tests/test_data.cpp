#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <zlib.h>

#include "oswi/data.hpp"
#include "oswi/error.hpp"

using namespace oswi;
namespace fs = std::filesystem;

namespace {

void put_be32(std::string& s, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) s.push_back(static_cast<char>((v >> shift) & 0xff));
}

std::string idx_images(const std::vector<std::vector<unsigned char>>& images, std::uint32_t rows, std::uint32_t cols,
                       std::uint32_t magic = 0x803) {
  std::string s;
  put_be32(s, magic);
  put_be32(s, static_cast<std::uint32_t>(images.size()));
  put_be32(s, rows);
  put_be32(s, cols);
  for (const auto& im : images) s.append(im.begin(), im.end());
  return s;
}

std::string idx_labels(const std::vector<unsigned char>& labels, std::uint32_t magic = 0x801) {
  std::string s;
  put_be32(s, magic);
  put_be32(s, static_cast<std::uint32_t>(labels.size()));
  s.append(labels.begin(), labels.end());
  return s;
}

void write_raw(const fs::path& p, const std::string& bytes) {
  std::ofstream os(p, std::ios::binary);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void write_gz(const fs::path& p, const std::string& bytes) {
  gzFile f = gzopen(p.string().c_str(), "wb");
  REQUIRE(f != nullptr);
  gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
  gzclose(f);
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Dataset synthetic(std::size_t per_class, std::size_t classes) {
  Dataset ds;
  const std::size_t n = per_class * classes;
  ds.images.resize(static_cast<Eigen::Index>(n), 4);
  for (std::size_t i = 0; i < n; ++i) {
    ds.labels.push_back(static_cast<std::uint8_t>(i % classes));
    for (int f = 0; f < 4; ++f) ds.images(static_cast<Eigen::Index>(i), f) = static_cast<float>(i) / static_cast<float>(n);
  }
  ds.classes = classes;
  return ds;
}

std::string data_root() { return std::string(OSWI_SOURCE_DIR) + "/data"; }

} // namespace

TEST_CASE("idx fixture round trip, raw and gzip") {
  TempDir dir("oswi_idx_test");
  const std::vector<std::vector<unsigned char>> images{{0, 255, 17, 128, 3, 9}, {255, 0, 1, 2, 254, 100}};
  const std::vector<unsigned char> labels{7, 2};
  for (bool gz : {false, true}) {
    const auto img = dir.path / (gz ? "i.gz" : "i");
    const auto lab = dir.path / (gz ? "l.gz" : "l");
    (gz ? write_gz : write_raw)(img, idx_images(images, 2, 3));
    (gz ? write_gz : write_raw)(lab, idx_labels(labels));
    const auto ds = load_idx(img.string(), lab.string(), "fixture");
    REQUIRE(ds.size() == 2);
    CHECK(ds.features() == 6);
    CHECK(ds.name == "fixture");
    CHECK(ds.labels == std::vector<std::uint8_t>{7, 2});
    for (int i = 0; i < 2; ++i) {
      for (int f = 0; f < 6; ++f) CHECK(ds.images(i, f) == static_cast<float>(images[i][f]) / 255.0f);
    }
    CHECK(ds.images.minCoeff() >= 0.0f);
    CHECK(ds.images.maxCoeff() <= 1.0f);
  }
}

TEST_CASE("idx error paths") {
  TempDir dir("oswi_idx_err");
  const std::vector<std::vector<unsigned char>> images{{1, 2, 3, 4}, {5, 6, 7, 8}};
  const auto good_img = dir.path / "img";
  const auto good_lab = dir.path / "lab";
  write_raw(good_img, idx_images(images, 2, 2));
  write_raw(good_lab, idx_labels({1, 2}));

  const auto bad_magic = dir.path / "bad";
  write_raw(bad_magic, idx_images(images, 2, 2, 0x804));
  CHECK_THROWS_AS(load_idx(bad_magic.string(), good_lab.string()), BadMagic);
  const auto lab_as_img = dir.path / "labmagic";
  write_raw(lab_as_img, idx_labels({1, 2}, 0x803));
  CHECK_THROWS_AS(load_idx(good_img.string(), lab_as_img.string()), BadMagic);

  auto cut = idx_images(images, 2, 2);
  cut.resize(cut.size() - 1);
  const auto short_img = dir.path / "short";
  write_raw(short_img, cut);
  CHECK_THROWS_AS(load_idx(short_img.string(), good_lab.string()), TruncatedFile);
  const auto header_only = dir.path / "hdr";
  write_raw(header_only, std::string("\0\0\x08", 3));
  CHECK_THROWS_AS(load_idx(header_only.string(), good_lab.string()), TruncatedFile);

  const auto three = dir.path / "three";
  write_raw(three, idx_labels({1, 2, 3}));
  CHECK_THROWS_AS(load_idx(good_img.string(), three.string()), CountMismatch);

  CHECK_THROWS_AS(load_idx((dir.path / "missing").string(), good_lab.string()), IoError);
}

TEST_CASE("bundled mnist sample") {
  const auto ds = load_named("mnist-5k", data_root());
  CHECK(ds.size() == 5000);
  CHECK(ds.features() == 784);
  CHECK(ds.images.minCoeff() >= 0.0f);
  CHECK(ds.images.maxCoeff() <= 1.0f);
  CHECK(*std::max_element(ds.labels.begin(), ds.labels.end()) == 9);

  const auto sub = subset_indices(ds, 100, 0);
  std::vector<int> per_class(10, 0);
  for (auto i : sub) ++per_class[ds.labels[i]];
  for (int c : per_class) CHECK(c == 10);

  CHECK_THROWS_AS(load_named("no-such-set", data_root()), IoError);
}

TEST_CASE("subset") {
  const auto ds = synthetic(30, 10);
  const auto all = subset_indices(ds, ds.size(), 3);
  std::vector<std::size_t> sorted = all;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);

  CHECK(subset_indices(ds, 57, 1) == subset_indices(ds, 57, 1));
  CHECK(subset_indices(ds, 57, 1) != subset_indices(ds, 57, 2));

  const auto strat = subset_indices(ds, 105, 4);
  std::vector<int> counts(10, 0);
  for (auto i : strat) ++counts[ds.labels[i]];
  // Each class gets floor(n / classes); the remainder is drawn from the leftovers.
  for (int c : counts) CHECK(c >= 10);
  CHECK(std::set<std::size_t>(strat.begin(), strat.end()).size() == 105);

  const auto small = subset_indices(ds, 7, 4);
  CHECK(std::set<std::size_t>(small.begin(), small.end()).size() == 7);

  CHECK_THROWS_AS(subset_indices(ds, ds.size() + 1, 0), TooLarge);
  const auto sub = subset(ds, 40, 2);
  CHECK(sub.size() == 40);
  CHECK(sub.features() == 4);
}

TEST_CASE("validation split") {
  const auto [train, val] = split_indices(1000, 0.15, 5);
  CHECK(train.size() == 850);
  CHECK(val.size() == 150);
  std::set<std::size_t> all(train.begin(), train.end());
  for (auto v : val) CHECK(all.insert(v).second);
  CHECK(all.size() == 1000);
  CHECK(*all.rbegin() == 999);
  CHECK(split_indices(1000, 0.15, 5) == split_indices(1000, 0.15, 5));
  CHECK_THROWS_AS(split_indices(10, 0.0, 1), DomainError);
  CHECK_THROWS_AS(split_indices(10, 1.0, 1), DomainError);

  const auto ds = synthetic(100, 10);
  const auto [tr, va] = split_validation(ds, 0.15, 2);
  CHECK(tr.size() + va.size() == ds.size());
  CHECK(va.size() == 150);
}

TEST_CASE("fetch verifies digests") {
  TempDir dir("oswi_fetch_test");
  const auto mirror = dir.path / "mirror";
  fs::create_directories(mirror);
  write_raw(mirror / "a.bin", "hello");
  write_raw(mirror / "b.bin", "world");
  const std::string sha_a = sha256_file((mirror / "a.bin").string());
  CHECK(sha_a == "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824");
  const std::string sha_b = sha256_file((mirror / "b.bin").string());

  auto write_manifest = [&](const std::string& b_digest) {
    std::ofstream os(dir.path / "manifest.json");
    os << R"({"toy": {"base_url": "mirror", "files": [)"
       << R"({"name": "a.bin", "sha256": ")" << sha_a << R"("},)"
       << R"({"name": "b.bin", "sha256": )" << b_digest << "}]}}";
  };

  FetchRequest req;
  req.dataset = "toy";
  req.dir = (dir.path / "out").string();
  req.manifest_path = (dir.path / "manifest.json").string();

  write_manifest("\"" + sha_b + "\"");
  const auto files = fetch_dataset(req);
  REQUIRE(files.size() == 2);
  CHECK(files[0].verified);
  CHECK(files[1].sha256 == sha_b);
  CHECK(fs::exists(dir.path / "out" / "toy" / "b.bin"));

  fs::remove_all(dir.path / "out");
  write_manifest("\"" + std::string(64, '0') + "\"");
  CHECK_THROWS_AS(fetch_dataset(req), ChecksumMismatch);
  CHECK_FALSE(fs::exists(dir.path / "out" / "toy" / "b.bin"));
  CHECK_FALSE(fs::exists(dir.path / "out" / "toy" / "b.bin.part"));

  fs::remove_all(dir.path / "out");
  write_manifest("null");
  CHECK_THROWS_AS(fetch_dataset(req), ChecksumMismatch);
  req.allow_unpinned = true;
  const auto loose = fetch_dataset(req);
  CHECK(loose[0].verified);
  CHECK_FALSE(loose[1].verified);

  req.dataset = "other";
  CHECK_THROWS_AS(fetch_dataset(req), ConfigError);
  req.dataset = "toy";
  req.base_url = (dir.path / "nowhere").string();
  CHECK_THROWS_AS(fetch_dataset(req), IoError);
}
