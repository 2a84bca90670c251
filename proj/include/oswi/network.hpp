#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oswi/activations.hpp"
#include "oswi/data.hpp"
#include "oswi/initializers.hpp"

namespace oswi {

/// Features x batch. Every sample is a column.
using Activations = Eigen::MatrixXd;

struct NetworkConfig {
  std::vector<std::size_t> layer_widths; // N_0 .. N_L; N_L is the number of classes
  ActivationSpec activation = ActivationSpec::tanh();
  InitScheme init = InitScheme::xavier();
  bool batch_norm = false;
};

enum class Mode { Train, Eval };

/// Per-feature batch normalization of pre-activations.
struct BatchNorm {
  Eigen::VectorXd gamma;
  Eigen::VectorXd beta;
  Eigen::VectorXd running_mean;
  Eigen::VectorXd running_var;
  double eps = 1e-3;
  double momentum = 0.99;

  explicit BatchNorm(std::size_t features = 0);
};

struct BatchNormCache {
  Activations normalized;  // (z - mean) / sqrt(var + eps)
  Eigen::VectorXd inv_std; // Train mode only
};

/// Train mode normalizes with batch statistics (biased variance) and updates
/// the running averages; Eval mode uses the running averages. Throws
/// BatchTooSmall for a single-sample batch in Train mode.
Activations batch_norm_layer(const Activations& z, BatchNorm& bn, Mode mode, BatchNormCache* cache = nullptr);

struct DenseLayer {
  WeightMatrix weights; // out x in
  Eigen::VectorXd bias;
  std::optional<BatchNorm> bn;
};

struct LayerGradients {
  WeightMatrix weights;
  Eigen::VectorXd bias;
  Eigen::VectorXd gamma; // empty without batch norm
  Eigen::VectorXd beta;
};

struct Gradients {
  std::vector<LayerGradients> layers;
};

struct ForwardPass {
  Activations logits;            // classes x batch
  std::vector<Activations> pre;  // hidden layer pre-activations W x + b
  std::vector<Activations> act_in; // input to f (post-BN when enabled)
  std::vector<Activations> post; // post[0] = input, post[l] = f(...) for hidden l
  std::vector<BatchNormCache> bn;
};

struct LossAndGrads {
  double loss = 0.0;
  Gradients grads;
  Activations logits; // of the forward pass the gradients belong to
};

class Mlp {
public:
  /// Builds and initializes all layers; layer l (1-based) draws from
  /// config.init.layer_stream(l). Biases start at zero. Throws ShapeMismatch
  /// for fewer than two widths or a zero width.
  explicit Mlp(NetworkConfig config);

  [[nodiscard]] const NetworkConfig& config() const noexcept { return config_; }
  [[nodiscard]] std::vector<DenseLayer>& layers() noexcept { return layers_; }
  [[nodiscard]] const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  [[nodiscard]] std::size_t inputs() const noexcept { return config_.layer_widths.front(); }
  [[nodiscard]] std::size_t classes() const noexcept { return config_.layer_widths.back(); }

  /// `batch` is samples x N_0. Train mode updates batch-norm running stats.
  ForwardPass forward(const Eigen::Ref<const Eigen::MatrixXd>& batch, Mode mode = Mode::Eval);

  /// Mean softmax cross-entropy and exact gradients of every parameter.
  LossAndGrads loss_and_grads(const Eigen::Ref<const Eigen::MatrixXd>& batch, std::span<const std::uint8_t> labels,
                              Mode mode = Mode::Train);

  /// Visits (parameter, gradient) blocks in a fixed order.
  template <typename F>
  void for_each_parameter(Gradients& g, F&& fn) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      auto& L = layers_[l];
      auto& G = g.layers[l];
      fn(std::span<double>(L.weights.data(), static_cast<std::size_t>(L.weights.size())),
         std::span<const double>(G.weights.data(), static_cast<std::size_t>(G.weights.size())));
      fn(std::span<double>(L.bias.data(), static_cast<std::size_t>(L.bias.size())),
         std::span<const double>(G.bias.data(), static_cast<std::size_t>(G.bias.size())));
      if (L.bn) {
        fn(std::span<double>(L.bn->gamma.data(), static_cast<std::size_t>(L.bn->gamma.size())),
           std::span<const double>(G.gamma.data(), static_cast<std::size_t>(G.gamma.size())));
        fn(std::span<double>(L.bn->beta.data(), static_cast<std::size_t>(L.bn->beta.size())),
           std::span<const double>(G.beta.data(), static_cast<std::size_t>(G.beta.size())));
      }
    }
  }

private:
  NetworkConfig config_;
  std::vector<DenseLayer> layers_;
};

/// Mean cross-entropy of softmax(logits) against labels; logits are classes x batch.
double softmax_cross_entropy(const Activations& logits, std::span<const std::uint8_t> labels);

/// Columns whose argmax equals the label; columns with non-finite logits count as wrong.
std::size_t count_correct(const Activations& logits, std::span<const std::uint8_t> labels);

// Adam ------------------------------------------------------------------------

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Eigen::VectorXd> m;
  std::vector<Eigen::VectorXd> v;
  std::uint64_t t = 0;
};

/// One bias-corrected Adam update of every parameter of `net`.
void adam_step(Mlp& net, Gradients& grads, AdamState& state, double lr, const AdamConfig& cfg = {});

/// Adam on a single flat parameter block (state t already advanced by the caller).
void adam_update(std::span<double> param, std::span<const double> grad, Eigen::VectorXd& m, Eigen::VectorXd& v,
                 std::uint64_t t, double lr, const AdamConfig& cfg);

// Training --------------------------------------------------------------------

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch_size = 128;
  std::size_t epochs = 1;
  double val_fraction = 0.15;
  AdamConfig adam;
  std::uint64_t seed = 0;       // shuffling
  double learned_margin = 0.05; // learned = best val acc >= 1/classes + margin
};

struct EpochStats {
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  double best_val_acc = 0.0;
  bool learned = false;
};

/// Full training loop on a pre-split dataset. Epoch e shuffles with
/// Rng::substream(seed, {epoch}); train loss/accuracy are running averages
/// over the epoch's batches and validation is evaluated in Eval mode after
/// each epoch.
TrainReport train(Mlp& net, const TrainConfig& tc, const Dataset& train_set, const Dataset& val_set);

/// Convenience: split `data` with tc.val_fraction (seed tc.seed) then train.
TrainReport train(const NetworkConfig& config, const TrainConfig& tc, const Dataset& data);

/// samples x features double copy of rows [first, first + count) of `indices`.
Eigen::MatrixXd gather_batch(const Dataset& ds, std::span<const std::size_t> indices);

// Persistence -----------------------------------------------------------------

/// <dir>/weights.oswi holds, per layer, the weight container followed by a
/// 1 x N bias container (and gamma, beta, running mean, running var when
/// batch norm is enabled); <dir>/manifest.json records the configuration.
void save_checkpoint(const Mlp& net, const std::string& dir);
Mlp load_checkpoint(const std::string& dir);

std::string report_to_csv(const TrainReport& report);

} // namespace oswi
