#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oswi/rng.hpp"

namespace oswi {

/// N_l x N_{l-1}, row-major.
using WeightMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class InitKind { Proposed, XavierUniform, HeNormal, Orthogonal };

struct InitScheme {
  InitKind kind = InitKind::Proposed;
  double sigma_star = 0.0; // Proposed only
  double omega = 1.0;      // Proposed only
  std::uint64_t seed = 0;

  static InitScheme proposed(double sigma_star, double omega, std::uint64_t seed = 0);
  static InitScheme xavier(std::uint64_t seed = 0) { return {InitKind::XavierUniform, 0.0, 1.0, seed}; }
  static InitScheme he(std::uint64_t seed = 0) { return {InitKind::HeNormal, 0.0, 1.0, seed}; }
  static InitScheme orthogonal(std::uint64_t seed = 0) { return {InitKind::Orthogonal, 0.0, 1.0, seed}; }

  /// Stream for layer `layer` (1-based by convention).
  [[nodiscard]] Rng layer_stream(std::uint64_t layer) const { return Rng::substream(seed, {0x1a7e5ULL, layer}); }
};

std::string to_string(InitKind kind);
/// Accepts proposed | xavier | he | orthogonal.
InitKind parse_init_kind(const std::string& name);

/// Row-by-row sampler for the elementwise schemes (everything but Orthogonal).
/// init_layer uses it in row-major order, so consumers that stream rows see
/// exactly the matrix init_layer would have built from the same stream.
class RowSampler {
public:
  RowSampler(const InitScheme& scheme, std::size_t rows, std::size_t cols);
  void fill(std::size_t row, std::span<double> out, Rng& rng) const;

private:
  InitKind kind_;
  std::size_t cols_;
  double scale_;
  double omega_;
};

/// Proposed:    W = D + Z, D_ij = omega iff i == j (mod cols), Z_ij ~ N(0, sigma*^2/cols)
/// Xavier:      U(-sqrt(6/(rows+cols)), +sqrt(6/(rows+cols)))
/// He:          N(0, 2/cols)
/// Orthogonal:  orthonormal rows or columns (whichever is fewer) from the QR
///              factor of a Gaussian matrix, diag(R) sign-fixed positive, gain 1.
WeightMatrix init_layer(const InitScheme& scheme, std::size_t rows, std::size_t cols, Rng& rng);

/// Same as init_layer, reusing `out`'s storage when the shape already matches.
void init_layer_into(const InitScheme& scheme, WeightMatrix& out, std::size_t rows, std::size_t cols, Rng& rng);

struct GainStatistics {
  double mean_hat = 0.0;
  double var_hat = 0.0;
  double var_floor = 0.0;       // sigma_z^2 / width
  double var_conditional = 0.0; // sigma_z^2/width * (1 + sum_{j != i} (x_j/x_i)^2)
  std::size_t samples = 0;

  [[nodiscard]] double mean_standard_error() const;
};

/// Samples the effective gain a_i = (W x_prev)_i / x_prev[i] for a square
/// Proposed layer of width x_prev.size(). Only row i of W influences a_i, so
/// each sample draws a fresh row i. Throws ZeroCoordinate if x_prev[i] == 0.
GainStatistics gain_statistics(const InitScheme& scheme, std::span<const double> x_prev, std::size_t i,
                               std::size_t samples, Rng& rng);

// Weight container: "OSWI", u32 version, u32 rows, u32 cols (little endian),
// then rows*cols little-endian float64 in row-major order.
inline constexpr std::uint32_t kWeightFormatVersion = 1;

void write_weights(std::ostream& os, const WeightMatrix& w);
WeightMatrix read_weights(std::istream& is);
void write_weights_file(const std::string& path, const WeightMatrix& w);
WeightMatrix read_weights_file(const std::string& path);

} // namespace oswi
