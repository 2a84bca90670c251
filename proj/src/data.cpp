#include "oswi/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>

#include <zlib.h>

#include "oswi/error.hpp"
#include "oswi/rng.hpp"

namespace oswi {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

// gzread passes uncompressed input through unchanged.
std::vector<unsigned char> read_all(const std::string& path) {
  gzFile fh = gzopen(path.c_str(), "rb");
  if (fh == nullptr) throw IoError("cannot open " + path);
  std::vector<unsigned char> out;
  unsigned char buf[1 << 16];
  int got = 0;
  while ((got = gzread(fh, buf, sizeof(buf))) > 0) out.insert(out.end(), buf, buf + got);
  int errnum = Z_OK;
  const char* msg = gzerror(fh, &errnum);
  const bool failed = got < 0 || (errnum != Z_OK && errnum != Z_STREAM_END);
  const std::string what = failed ? std::string(msg) : std::string();
  gzclose(fh);
  if (failed) throw TruncatedFile(path + ": " + what);
  return out;
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off) {
  return (static_cast<std::uint32_t>(b[off]) << 24) | (static_cast<std::uint32_t>(b[off + 1]) << 16) |
         (static_cast<std::uint32_t>(b[off + 2]) << 8) | static_cast<std::uint32_t>(b[off + 3]);
}

} // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path, std::string name) {
  const auto img = read_all(images_path);
  const auto lab = read_all(labels_path);

  if (img.size() < 16) throw TruncatedFile(images_path + ": header too short");
  if (be32(img, 0) != kImageMagic) throw BadMagic(images_path + ": not an IDX image file");
  if (lab.size() < 8) throw TruncatedFile(labels_path + ": header too short");
  if (be32(lab, 0) != kLabelMagic) throw BadMagic(labels_path + ": not an IDX label file");

  const std::size_t n = be32(img, 4);
  const std::size_t rows = be32(img, 8);
  const std::size_t cols = be32(img, 12);
  const std::size_t n_labels = be32(lab, 4);
  const std::size_t feat = rows * cols;
  if (img.size() < 16 + n * feat) throw TruncatedFile(images_path + ": fewer pixels than the header declares");
  if (lab.size() < 8 + n_labels) throw TruncatedFile(labels_path + ": fewer labels than the header declares");
  if (n != n_labels) throw CountMismatch("image count " + std::to_string(n) + " != label count " + std::to_string(n_labels));

  Dataset ds;
  ds.name = std::move(name);
  ds.images.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(feat));
  const unsigned char* px = img.data() + 16;
  for (std::size_t i = 0; i < n * feat; ++i) ds.images.data()[i] = static_cast<float>(px[i]) / 255.0f;
  ds.labels.assign(lab.begin() + 8, lab.begin() + 8 + static_cast<std::ptrdiff_t>(n));
  std::size_t max_label = 0;
  for (auto l : ds.labels) max_label = std::max<std::size_t>(max_label, l);
  ds.classes = std::max<std::size_t>(10, max_label + 1);
  return ds;
}

Dataset select(const Dataset& ds, const std::vector<std::size_t>& indices) {
  Dataset out;
  out.name = ds.name;
  out.classes = ds.classes;
  out.images.resize(static_cast<Eigen::Index>(indices.size()), ds.images.cols());
  out.labels.resize(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= ds.size()) throw DomainError("sample index out of range");
    out.images.row(static_cast<Eigen::Index>(r)) = ds.images.row(static_cast<Eigen::Index>(indices[r]));
    out.labels[r] = ds.labels[indices[r]];
  }
  return out;
}

std::vector<std::size_t> subset_indices(const Dataset& ds, std::size_t n, std::uint64_t seed) {
  if (n > ds.size()) {
    throw TooLarge("subset of " + std::to_string(n) + " requested from " + std::to_string(ds.size()) + " samples");
  }
  Rng rng = Rng::substream(seed, {0x5ab5e7ULL});
  std::vector<std::size_t> chosen;
  chosen.reserve(n);

  if (n >= 10 * ds.classes) {
    std::vector<std::vector<std::size_t>> by_class(ds.classes);
    for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.labels[i]].push_back(i);
    const std::size_t per_class = n / ds.classes;
    std::vector<std::size_t> leftover;
    for (auto& members : by_class) {
      shuffle(members.begin(), members.end(), rng);
      const std::size_t take = std::min(per_class, members.size());
      chosen.insert(chosen.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
      leftover.insert(leftover.end(), members.begin() + static_cast<std::ptrdiff_t>(take), members.end());
    }
    std::sort(leftover.begin(), leftover.end());
    shuffle(leftover.begin(), leftover.end(), rng);
    const std::size_t rest = n - chosen.size();
    chosen.insert(chosen.end(), leftover.begin(), leftover.begin() + static_cast<std::ptrdiff_t>(rest));
  } else {
    std::vector<std::size_t> all(ds.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    shuffle(all.begin(), all.end(), rng);
    chosen.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n));
  }
  shuffle(chosen.begin(), chosen.end(), rng);
  return chosen;
}

Dataset subset(const Dataset& ds, std::size_t n, std::uint64_t seed) { return select(ds, subset_indices(ds, n, seed)); }

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t size, double fraction,
                                                                            std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw DomainError("validation fraction must be in (0, 1)");
  std::vector<std::size_t> idx(size);
  for (std::size_t i = 0; i < size; ++i) idx[i] = i;
  Rng rng = Rng::substream(seed, {0x5b117ULL});
  shuffle(idx.begin(), idx.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(size)));
  std::vector<std::size_t> val(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  return {std::move(train), std::move(val)};
}

std::pair<Dataset, Dataset> split_validation(const Dataset& ds, double fraction, std::uint64_t seed) {
  auto [train, val] = split_indices(ds.size(), fraction, seed);
  return {select(ds, train), select(ds, val)};
}

std::string default_data_dir() {
  if (const char* env = std::getenv("OSWI_DATA_DIR"); env != nullptr && *env != '\0') return env;
  return "data";
}

Dataset load_named(const std::string& name, const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root = fs::path(dir.empty() ? default_data_dir() : dir) / name;
  auto find = [&](const std::string& stem) {
    for (const char* ext : {".gz", ""}) {
      const fs::path p = root / (stem + ext);
      if (fs::exists(p)) return p.string();
    }
    throw IoError("dataset file " + (root / stem).string() + "[.gz] not found (see the fetch subcommand)");
  };
  return load_idx(find("train-images-idx3-ubyte"), find("train-labels-idx1-ubyte"), name);
}

} // namespace oswi
