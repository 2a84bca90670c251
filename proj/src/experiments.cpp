#include "oswi/experiments.hpp"

#include <cmath>

#include "oswi/calibration.hpp"
#include "oswi/error.hpp"

namespace oswi {

NetworkConfig make_network_config(const ActivationSpec& activation, InitKind init, const MlpShape& shape,
                                  std::size_t inputs, std::size_t classes, double p, std::uint64_t seed,
                                  bool batch_norm) {
  if (shape.hidden_layers == 0 || shape.width == 0) throw ConfigError("network needs >= 1 hidden layer of width >= 1");
  NetworkConfig cfg;
  cfg.layer_widths.push_back(inputs);
  for (std::size_t l = 0; l < shape.hidden_layers; ++l) cfg.layer_widths.push_back(shape.width);
  cfg.layer_widths.push_back(classes);
  cfg.activation = activation;
  cfg.batch_norm = batch_norm;
  switch (init) {
  case InitKind::Proposed: {
    const double w = omega(activation);
    cfg.init = InitScheme::proposed(sigma_star(p, shape.hidden_layers, w), w, seed);
    break;
  }
  case InitKind::XavierUniform: cfg.init = InitScheme::xavier(seed); break;
  case InitKind::HeNormal: cfg.init = InitScheme::he(seed); break;
  case InitKind::Orthogonal: cfg.init = InitScheme::orthogonal(seed); break;
  }
  return cfg;
}

PreparedData prepare_data(const Dataset& full, std::size_t subset_size, double val_fraction, std::uint64_t seed,
                          bool val_from_full) {
  if (!val_from_full) {
    const Dataset sub = subset(full, subset_size, seed);
    auto [tr, va] = split_validation(sub, val_fraction, seed);
    return {std::move(tr), std::move(va)};
  }
  auto [rest_idx, val_idx] = split_indices(full.size(), val_fraction, seed);
  const Dataset rest = select(full, rest_idx);
  return {subset(rest, subset_size, seed), select(full, val_idx)};
}

std::vector<double> decade_grid(int lo_exponent, int hi_exponent) {
  std::vector<double> out;
  for (int e = lo_exponent; e <= hi_exponent; ++e) out.push_back(std::pow(10.0, e));
  return out;
}

LrSweepResult sweep_learning_rates(const Dataset& full, const LrSweepConfig& cfg) {
  const PreparedData data = prepare_data(full, cfg.subset_size, 0.15, cfg.seed, cfg.val_from_full);
  LrSweepResult result;
  for (double alpha : cfg.alphas) {
    const ActivationSpec act = cfg.base.scaled(alpha);
    const double w = omega(act);
    for (InitKind init : cfg.inits) {
      LearnableWindow window{alpha, w, init, std::nullopt, std::nullopt};
      const NetworkConfig net_cfg =
          make_network_config(act, init, cfg.shape, full.features(), full.classes, cfg.p, cfg.seed);
      for (double lr : cfg.lrs) {
        Mlp net(net_cfg);
        TrainConfig tc;
        tc.lr = lr;
        tc.epochs = cfg.epochs;
        tc.seed = cfg.seed;
        const TrainReport report = train(net, tc, data.train, data.val);
        result.cells.push_back({alpha, w, init, lr, report.best_val_acc, report.learned});
        if (report.learned) {
          if (!window.lo || lr < *window.lo) window.lo = lr;
          if (!window.hi || lr > *window.hi) window.hi = lr;
        }
      }
      result.windows.push_back(window);
    }
  }
  return result;
}

bool window_near_band(const LearnableWindow& w) {
  if (!w.lo || !w.hi) return false;
  // Relative slack absorbs decade-grid rounding (10^k is not exact in binary).
  constexpr double kSlack = 1.0 + 1e-9;
  return *w.lo * kSlack >= 1e-6 * w.omega && *w.hi <= 1e-2 * w.omega * kSlack;
}

std::vector<InitComparisonRow> compare_initializations(const Dataset& full, const InitComparisonConfig& cfg) {
  std::vector<InitComparisonRow> rows;
  for (std::uint64_t seed : cfg.seeds) {
    const PreparedData data = prepare_data(full, cfg.subset_size, 0.15, seed, cfg.val_from_full);
    for (const auto& act : cfg.activations) {
      const double lr = cfg.lr_over_omega * omega(act);
      for (InitKind init : cfg.inits) {
        Mlp net(make_network_config(act, init, cfg.shape, full.features(), full.classes, cfg.p, seed, cfg.batch_norm));
        TrainConfig tc;
        tc.lr = lr;
        tc.epochs = cfg.epochs;
        tc.seed = seed;
        rows.push_back({to_string(act), init, seed, lr, train(net, tc, data.train, data.val)});
      }
    }
  }
  return rows;
}

} // namespace oswi
