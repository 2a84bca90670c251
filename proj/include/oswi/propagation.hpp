#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "oswi/activations.hpp"
#include "oswi/initializers.hpp"

namespace oswi {

inline constexpr std::size_t kDefaultSpreadBins = 50;

struct HistogramRange {
  double lo;
  double hi;
};

/// [-sup|f|, sup|f|].
HistogramRange default_range(const ActivationSpec& spec);

/// Equal-width bin counts over [lo, hi]; out-of-range values clamp to the end
/// bins and NaNs are skipped.
std::vector<std::uint64_t> histogram(std::span<const double> values, std::size_t bins, HistogramRange range);

/// Normalized histogram entropy -sum p_i ln p_i / ln(bins), in [0, 1].
/// Throws EmptyInput for no values, DomainError for bins < 2 or lo >= hi.
double spread_metric(std::span<const double> values, std::size_t bins, HistogramRange range);

struct PropagationTrace {
  std::size_t depth = 0;
  std::size_t width = 0;                     // chains for the scalar model
  std::vector<double> negative_rate_per_depth; // entry j-1 is depth j
  std::vector<double> last_layer_values;
  std::vector<std::uint64_t> last_layer_histogram;
  HistogramRange range{-1.0, 1.0};
  double spread = 0.0;
};

/// Closed-form pi_1 .. pi_depth for gains N(omega, sigma^2).
std::vector<double> theory_negative_rates(double sigma, std::size_t depth, double omega);

/// n_chains independent scalar chains X_j = f(A_j X_{j-1}), A_j ~ N(omega, sigma^2),
/// X_0 = x0. Chain c uses Rng::substream(seed, c).
PropagationTrace scalar_chain(const ActivationSpec& spec, double sigma, std::size_t depth, std::size_t n_chains,
                              double x0, std::uint64_t seed, std::size_t bins = kDefaultSpreadBins);

struct InputDistribution {
  enum class Kind { PositiveConstant, UniformSym } kind = Kind::PositiveConstant;
  double value = 0.1; // constant value, or half-width of the symmetric range

  static InputDistribution positive_constant(double v) { return {Kind::PositiveConstant, v}; }
  static InputDistribution uniform_sym(double range) { return {Kind::UniformSym, range}; }
};

/// Bias-free width x width chain x^l = f(W^l x^{l-1}); layer l is drawn from
/// scheme.layer_stream(l) exactly as init_layer would, x0 (when random) from
/// Rng::substream(scheme.seed, {0x0, 0}). Negative rate counts coordinates < 0.
PropagationTrace ffnn_chain(const ActivationSpec& spec, const InitScheme& scheme, std::size_t width,
                            std::size_t depth, InputDistribution x0, std::size_t bins = kDefaultSpreadBins);

struct SpreadSweepRow {
  double p;
  double sigma_star;
  double spread;              // mean over seeds
  std::vector<double> spreads; // per seed
};

/// For each p: calibrate sigma*(p, depth, omega), run a Proposed ffnn_chain
/// from x0 = 0.1 per seed (seed index s uses the first draw of
/// Rng::substream(seed, {0x5eed, s}) as scheme seed, shared across p), and
/// average the last-layer spread over [-sup|f|, sup|f|].
std::vector<SpreadSweepRow> spread_vs_p_sweep(const ActivationSpec& spec, std::size_t depth, std::size_t width,
                                              std::span<const double> p_grid, std::size_t bins, std::uint64_t seed,
                                              std::size_t n_seeds = 1);

} // namespace oswi
