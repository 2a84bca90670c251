#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oswi {

using ImageMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Dataset {
  ImageMatrix images;               // samples x features, pixels in [0, 1]
  std::vector<std::uint8_t> labels; // class ids in [0, classes)
  std::size_t classes = 10;
  std::string name;

  [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
  [[nodiscard]] std::size_t features() const noexcept { return static_cast<std::size_t>(images.cols()); }
};

/// Reads an IDX image file (magic 0x00000803) and label file (0x00000801),
/// gzip-compressed or raw. Pixels are divided by 255. Throws BadMagic,
/// TruncatedFile or CountMismatch.
Dataset load_idx(const std::string& images_path, const std::string& labels_path, std::string name = "idx");

/// Rows of `ds` at `indices`, in that order.
Dataset select(const Dataset& ds, const std::vector<std::size_t>& indices);

/// Seeded sample of n rows without replacement. With n >= 10 * classes the
/// sample is stratified (floor(n / classes) per class, the remainder drawn
/// uniformly from what is left); otherwise uniform. The result is shuffled.
/// Throws TooLarge if n exceeds the dataset size.
std::vector<std::size_t> subset_indices(const Dataset& ds, std::size_t n, std::uint64_t seed);
Dataset subset(const Dataset& ds, std::size_t n, std::uint64_t seed);

/// Seeded shuffle then split; validation gets round(fraction * size) rows.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t size, double fraction,
                                                                            std::uint64_t seed);
std::pair<Dataset, Dataset> split_validation(const Dataset& ds, double fraction, std::uint64_t seed);

/// Locates <dir>/<name>/train-{images-idx3,labels-idx1}-ubyte[.gz]. `dir`
/// defaults to $OSWI_DATA_DIR, then ./data.
Dataset load_named(const std::string& name, const std::string& dir = "");
std::string default_data_dir();

// Fetching ----------------------------------------------------------------------

struct FetchRequest {
  std::string dataset;       // key in the manifest (mnist, fmnist, mnist-5k, ...)
  std::string dir;           // destination root; files go to <dir>/<dataset>/
  std::string manifest_path; // JSON manifest; empty = built-in defaults
  std::string base_url;      // optional mirror override
  bool allow_unpinned = false;
};

struct FetchedFile {
  std::string path;
  std::string sha256;
  bool verified = false;
};

/// Downloads every file of `dataset` listed in the manifest and verifies its
/// SHA-256. Files failing verification are deleted and ChecksumMismatch is
/// thrown. Manifest entries without a digest are refused unless
/// allow_unpinned is set. The library never touches the network otherwise.
std::vector<FetchedFile> fetch_dataset(const FetchRequest& request);

/// Hex SHA-256 of a file.
std::string sha256_file(const std::string& path);

} // namespace oswi
