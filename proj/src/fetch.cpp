#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <curl/curl.h>
#include <openssl/evp.h>

#include <json.hpp>

#include "oswi/data.hpp"
#include "oswi/error.hpp"

namespace oswi {

namespace fs = std::filesystem;

namespace {

// Digests are not pinned for the public mirrors; pass a manifest with
// sha256 values (or --allow-unpinned) to fetch them.
constexpr const char* kBuiltinManifest = R"({
  "mnist": {
    "base_url": "https://ossci-datasets.s3.amazonaws.com/mnist/",
    "files": [
      {"name": "train-images-idx3-ubyte.gz", "sha256": null},
      {"name": "train-labels-idx1-ubyte.gz", "sha256": null},
      {"name": "t10k-images-idx3-ubyte.gz", "sha256": null},
      {"name": "t10k-labels-idx1-ubyte.gz", "sha256": null}
    ]
  },
  "fmnist": {
    "base_url": "http://fashion-mnist.s3-website.eu-central-1.amazonaws.com/",
    "files": [
      {"name": "train-images-idx3-ubyte.gz", "sha256": null},
      {"name": "train-labels-idx1-ubyte.gz", "sha256": null},
      {"name": "t10k-images-idx3-ubyte.gz", "sha256": null},
      {"name": "t10k-labels-idx1-ubyte.gz", "sha256": null}
    ]
  }
})";

std::size_t write_to_file(char* ptr, std::size_t size, std::size_t nmemb, void* userdata) {
  auto* out = static_cast<std::FILE*>(userdata);
  return std::fwrite(ptr, size, nmemb, out);
}

void download(const std::string& url, const fs::path& dest) {
  std::FILE* out = std::fopen(dest.string().c_str(), "wb");
  if (out == nullptr) throw IoError("cannot write " + dest.string());
  CURL* curl = curl_easy_init();
  if (curl == nullptr) {
    std::fclose(out);
    throw IoError("curl initialisation failed");
  }
  curl_easy_setopt(curl, CURLOPT_URL, url.c_str());
  curl_easy_setopt(curl, CURLOPT_WRITEFUNCTION, write_to_file);
  curl_easy_setopt(curl, CURLOPT_WRITEDATA, out);
  curl_easy_setopt(curl, CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(curl, CURLOPT_FAILONERROR, 1L);
  curl_easy_setopt(curl, CURLOPT_CONNECTTIMEOUT, 30L);
  const CURLcode rc = curl_easy_perform(curl);
  curl_easy_cleanup(curl);
  std::fclose(out);
  if (rc != CURLE_OK) {
    fs::remove(dest);
    throw IoError("download of " + url + " failed: " + curl_easy_strerror(rc));
  }
}

// Plain paths become file:// URLs; relative ones resolve against `base_dir`.
std::string resolve_base(const std::string& base, const fs::path& base_dir) {
  if (base.find("://") != std::string::npos) return base.back() == '/' ? base : base + "/";
  fs::path p(base);
  if (p.is_relative()) p = base_dir / p;
  return "file://" + fs::absolute(p).lexically_normal().string() + "/";
}

} // namespace

std::string sha256_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(is.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

std::vector<FetchedFile> fetch_dataset(const FetchRequest& request) {
  nlohmann::json manifest;
  fs::path manifest_dir = fs::current_path();
  if (request.manifest_path.empty()) {
    manifest = nlohmann::json::parse(kBuiltinManifest);
  } else {
    std::ifstream is(request.manifest_path);
    if (!is) throw IoError("cannot open manifest " + request.manifest_path);
    try {
      manifest = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
      throw IoError("bad manifest " + request.manifest_path + ": " + e.what());
    }
    manifest_dir = fs::absolute(request.manifest_path).parent_path();
  }
  if (!manifest.contains(request.dataset)) throw ConfigError("dataset '" + request.dataset + "' is not in the manifest");
  const auto& entry = manifest.at(request.dataset);
  const std::string base =
      resolve_base(request.base_url.empty() ? entry.at("base_url").get<std::string>() : request.base_url, manifest_dir);

  const fs::path dest_dir = fs::path(request.dir.empty() ? default_data_dir() : request.dir) / request.dataset;
  fs::create_directories(dest_dir);

  std::vector<FetchedFile> out;
  for (const auto& file : entry.at("files")) {
    const auto name = file.at("name").get<std::string>();
    const bool pinned = file.contains("sha256") && file.at("sha256").is_string();
    if (!pinned && !request.allow_unpinned) {
      throw ChecksumMismatch(name + " has no pinned sha256 in the manifest (use a pinned manifest or allow unpinned)");
    }
    const fs::path dest = dest_dir / name;
    const fs::path partial = dest_dir / (name + ".part");
    download(base + name, partial);
    FetchedFile f{dest.string(), sha256_file(partial.string()), false};
    if (pinned) {
      const auto expected = file.at("sha256").get<std::string>();
      if (f.sha256 != expected) {
        fs::remove(partial);
        fs::remove(dest);
        throw ChecksumMismatch(name + ": sha256 " + f.sha256 + " does not match manifest " + expected);
      }
      f.verified = true;
    }
    fs::rename(partial, dest);
    out.push_back(std::move(f));
  }
  return out;
}

} // namespace oswi
