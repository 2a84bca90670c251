#include "oswi/initializers.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "oswi/error.hpp"

namespace oswi {

InitScheme InitScheme::proposed(double sigma_star, double omega, std::uint64_t seed) {
  if (!(sigma_star >= 0.0) || !std::isfinite(sigma_star)) throw DomainError("sigma* must be finite and >= 0");
  if (!(omega > 0.0) || !std::isfinite(omega)) throw DomainError("omega must be finite and > 0");
  return {InitKind::Proposed, sigma_star, omega, seed};
}

std::string to_string(InitKind kind) {
  switch (kind) {
  case InitKind::Proposed: return "proposed";
  case InitKind::XavierUniform: return "xavier";
  case InitKind::HeNormal: return "he";
  case InitKind::Orthogonal: return "orthogonal";
  }
  return "?";
}

InitKind parse_init_kind(const std::string& name) {
  if (name == "proposed") return InitKind::Proposed;
  if (name == "xavier") return InitKind::XavierUniform;
  if (name == "he") return InitKind::HeNormal;
  if (name == "orthogonal") return InitKind::Orthogonal;
  throw ConfigError("unknown init scheme '" + name + "' (proposed|xavier|he|orthogonal)");
}

RowSampler::RowSampler(const InitScheme& scheme, std::size_t rows, std::size_t cols)
    : kind_(scheme.kind), cols_(cols), scale_(0.0), omega_(scheme.omega) {
  if (rows == 0 || cols == 0) throw DomainError("layer shape must be at least 1x1");
  const double fan_in = static_cast<double>(cols);
  switch (kind_) {
  case InitKind::Proposed: scale_ = scheme.sigma_star / std::sqrt(fan_in); break;
  case InitKind::XavierUniform: scale_ = std::sqrt(6.0 / static_cast<double>(rows + cols)); break;
  case InitKind::HeNormal: scale_ = std::sqrt(2.0 / fan_in); break;
  case InitKind::Orthogonal: throw DomainError("orthogonal init cannot be sampled row by row");
  }
}

void RowSampler::fill(std::size_t row, std::span<double> out, Rng& rng) const {
  switch (kind_) {
  case InitKind::Proposed:
    if (scale_ == 0.0) {
      std::fill(out.begin(), out.end(), 0.0);
    } else {
      for (double& v : out) v = scale_ * rng.normal();
    }
    out[row % cols_] += omega_;
    break;
  case InitKind::XavierUniform:
    for (double& v : out) v = rng.uniform(-scale_, scale_);
    break;
  case InitKind::HeNormal:
    for (double& v : out) v = scale_ * rng.normal();
    break;
  case InitKind::Orthogonal: break;
  }
}

namespace {

WeightMatrix orthogonal(std::size_t rows, std::size_t cols, Rng& rng) {
  const bool tall = rows >= cols;
  const Eigen::Index m = static_cast<Eigen::Index>(tall ? rows : cols);
  const Eigen::Index n = static_cast<Eigen::Index>(tall ? cols : rows);
  Eigen::MatrixXd a(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m, n);
  const auto& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  if (tall) return q;
  return q.transpose();
}

} // namespace

void init_layer_into(const InitScheme& scheme, WeightMatrix& out, std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows == 0 || cols == 0) throw DomainError("layer shape must be at least 1x1");
  if (scheme.kind == InitKind::Orthogonal) {
    out = orthogonal(rows, cols, rng);
    return;
  }
  const RowSampler sampler(scheme, rows, cols);
  out.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    sampler.fill(i, std::span<double>(out.row(static_cast<Eigen::Index>(i)).data(), cols), rng);
  }
}

WeightMatrix init_layer(const InitScheme& scheme, std::size_t rows, std::size_t cols, Rng& rng) {
  WeightMatrix w;
  init_layer_into(scheme, w, rows, cols, rng);
  return w;
}

double GainStatistics::mean_standard_error() const {
  return samples == 0 ? 0.0 : std::sqrt(var_hat / static_cast<double>(samples));
}

GainStatistics gain_statistics(const InitScheme& scheme, std::span<const double> x_prev, std::size_t i,
                               std::size_t samples, Rng& rng) {
  if (scheme.kind != InitKind::Proposed) throw DomainError("gain statistics are defined for the proposed scheme");
  const std::size_t width = x_prev.size();
  if (i >= width) throw DomainError("coordinate index out of range");
  if (x_prev[i] == 0.0) throw ZeroCoordinate("x_prev[i] == 0: the effective gain is undefined there");
  if (samples < 2) throw DomainError("need at least 2 samples");

  const RowSampler sampler(scheme, width, width);
  std::vector<double> row(width);
  const double xi = x_prev[i];

  // Welford accumulation of a_i.
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    sampler.fill(i, row, rng);
    double dot = 0.0;
    for (std::size_t j = 0; j < width; ++j) dot += row[j] * x_prev[j];
    const double a = dot / xi;
    const double delta = a - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta * (a - mean);
  }

  const double sz2 = scheme.sigma_star * scheme.sigma_star;
  double ratio_sum = 0.0;
  for (std::size_t j = 0; j < width; ++j) {
    if (j == i) continue;
    const double r = x_prev[j] / xi;
    ratio_sum += r * r;
  }

  GainStatistics g;
  g.samples = samples;
  g.mean_hat = mean;
  g.var_hat = m2 / static_cast<double>(samples - 1);
  g.var_floor = sz2 / static_cast<double>(width);
  g.var_conditional = g.var_floor * (1.0 + ratio_sum);
  return g;
}

// ---------------------------------------------------------------------------
// Binary container.

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& os, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  unsigned char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw TruncatedFile("weight container: truncated header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

} // namespace

void write_weights(std::ostream& os, const WeightMatrix& w) {
  os.write("OSWI", 4);
  put_u32(os, kWeightFormatVersion);
  put_u32(os, static_cast<std::uint32_t>(w.rows()));
  put_u32(os, static_cast<std::uint32_t>(w.cols()));
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) put_f64(os, w(i, j));
  }
}

WeightMatrix read_weights(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4)) throw TruncatedFile("weight container: truncated header");
  if (std::memcmp(magic, "OSWI", 4) != 0) throw BadMagic("weight container: bad magic");
  const std::uint32_t version = get_u32(is);
  if (version != kWeightFormatVersion) throw BadMagic("weight container: unsupported version");
  const std::uint32_t rows = get_u32(is);
  const std::uint32_t cols = get_u32(is);
  WeightMatrix w(rows, cols);
  std::vector<unsigned char> buf(static_cast<std::size_t>(rows) * cols * 8);
  if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
    throw TruncatedFile("weight container: truncated payload");
  }
  std::size_t off = 0;
  for (std::uint32_t i = 0; i < rows; ++i) {
    for (std::uint32_t j = 0; j < cols; ++j) {
      std::uint64_t v = 0;
      for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(buf[off + k]) << (8 * k);
      off += 8;
      w(i, j) = std::bit_cast<double>(v);
    }
  }
  return w;
}

void write_weights_file(const std::string& path, const WeightMatrix& w) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  write_weights(os, w);
  if (!os) throw IoError("write failed: " + path);
}

WeightMatrix read_weights_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  return read_weights(is);
}

} // namespace oswi
