#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "oswi/activations.hpp"
#include "oswi/data.hpp"
#include "oswi/initializers.hpp"
#include "oswi/network.hpp"

namespace oswi {

/// Shape of the MLPs used by the training experiments: `hidden_layers`
/// layers of `width` units between the input and the class layer.
struct MlpShape {
  std::size_t hidden_layers = 10;
  std::size_t width = 128;
};

/// Builds the network configuration for one initialization. The Proposed
/// scheme is calibrated with sigma*(p, hidden_layers, omega(activation)).
NetworkConfig make_network_config(const ActivationSpec& activation, InitKind init, const MlpShape& shape,
                                  std::size_t inputs, std::size_t classes, double p, std::uint64_t seed,
                                  bool batch_norm = false);

/// Subset -> 85/15 split, or, with `val_from_full`, a 15% held-out split of
/// the full dataset first and the subset drawn from the remainder.
struct PreparedData {
  Dataset train;
  Dataset val;
};
PreparedData prepare_data(const Dataset& full, std::size_t subset_size, double val_fraction, std::uint64_t seed,
                          bool val_from_full = false);

/// Decades 10^lo .. 10^hi.
std::vector<double> decade_grid(int lo_exponent, int hi_exponent);

struct LrSweepConfig {
  ActivationSpec base = ActivationSpec::tanh();
  std::vector<double> alphas{0.01, 1.0, 100.0};
  std::vector<InitKind> inits{InitKind::Proposed, InitKind::XavierUniform, InitKind::HeNormal, InitKind::Orthogonal};
  std::vector<double> lrs = decade_grid(-9, 0);
  MlpShape shape;
  std::size_t subset_size = 1000;
  std::size_t epochs = 1;
  double p = 0.3;
  std::uint64_t seed = 0;
  bool val_from_full = false;
};

struct LrSweepCell {
  double alpha;
  double omega;
  InitKind init;
  double lr;
  double best_val_acc;
  bool learned;
};

struct LearnableWindow {
  double alpha;
  double omega;
  InitKind init;
  std::optional<double> lo; // empty when nothing in the grid learned
  std::optional<double> hi;
};

struct LrSweepResult {
  std::vector<LrSweepCell> cells;
  std::vector<LearnableWindow> windows;
};

/// One training run per (alpha, init, lr) on the same data split.
LrSweepResult sweep_learning_rates(const Dataset& full, const LrSweepConfig& cfg);

/// True when the window is nonempty and lies inside [1e-6 omega, 1e-2 omega],
/// i.e. within one decade of the band [1e-5 omega, 1e-3 omega].
bool window_near_band(const LearnableWindow& w);

struct InitComparisonConfig {
  std::vector<ActivationSpec> activations{ActivationSpec::tanh(), ActivationSpec::erf()};
  std::vector<InitKind> inits{InitKind::Proposed, InitKind::XavierUniform, InitKind::HeNormal, InitKind::Orthogonal};
  std::vector<std::uint64_t> seeds{0, 1, 2};
  MlpShape shape;
  std::size_t subset_size = 500;
  std::size_t epochs = 10;
  double p = 0.3;
  /// Learning rate as a multiple of omega; 1e-3 omega is the top of the band.
  double lr_over_omega = 1e-3;
  bool batch_norm = false;
  bool val_from_full = false;
};

struct InitComparisonRow {
  std::string activation;
  InitKind init;
  std::uint64_t seed;
  double lr;
  TrainReport report;
};

std::vector<InitComparisonRow> compare_initializations(const Dataset& full, const InitComparisonConfig& cfg);

} // namespace oswi
