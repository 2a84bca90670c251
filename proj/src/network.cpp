#include "oswi/network.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "oswi/error.hpp"
#include "oswi/json_text.hpp"
#include "oswi/rng.hpp"

namespace oswi {

BatchNorm::BatchNorm(std::size_t features)
    : gamma(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(features))),
      beta(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(features))),
      running_mean(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(features))),
      running_var(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(features))) {}

Activations batch_norm_layer(const Activations& z, BatchNorm& bn, Mode mode, BatchNormCache* cache) {
  if (z.rows() != bn.gamma.size()) throw ShapeMismatch("batch norm feature count does not match its input");
  const Eigen::Index batch = z.cols();
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
  if (mode == Mode::Train) {
    if (batch < 2) throw BatchTooSmall("batch norm in training mode needs at least 2 samples");
    mean = z.rowwise().mean();
    var = (z.colwise() - mean).array().square().rowwise().mean();
    bn.running_mean = bn.momentum * bn.running_mean + (1.0 - bn.momentum) * mean;
    bn.running_var = bn.momentum * bn.running_var + (1.0 - bn.momentum) * var;
  } else {
    mean = bn.running_mean;
    var = bn.running_var;
  }
  const Eigen::VectorXd inv_std = (var.array() + bn.eps).rsqrt();
  Activations normalized = (z.colwise() - mean).array().colwise() * inv_std.array();
  Activations out = (normalized.array().colwise() * bn.gamma.array()).colwise() + bn.beta.array();
  if (cache != nullptr) {
    cache->normalized = std::move(normalized);
    cache->inv_std = inv_std;
  }
  return out;
}

Mlp::Mlp(NetworkConfig config) : config_(std::move(config)) {
  const auto& w = config_.layer_widths;
  if (w.size() < 2) throw ShapeMismatch("a network needs at least an input and an output width");
  for (auto n : w) {
    if (n == 0) throw ShapeMismatch("layer widths must be >= 1");
  }
  layers_.resize(w.size() - 1);
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    auto& layer = layers_[l];
    Rng rng = config_.init.layer_stream(l + 1);
    layer.weights = init_layer(config_.init, w[l + 1], w[l], rng);
    layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(w[l + 1]));
    const bool hidden = l + 2 < w.size();
    if (hidden && config_.batch_norm) layer.bn.emplace(w[l + 1]);
  }
}

ForwardPass Mlp::forward(const Eigen::Ref<const Eigen::MatrixXd>& batch, Mode mode) {
  if (static_cast<std::size_t>(batch.cols()) != inputs()) {
    throw ShapeMismatch("batch has " + std::to_string(batch.cols()) + " features, network expects " +
                        std::to_string(inputs()));
  }
  const auto& spec = config_.activation;
  ForwardPass fp;
  fp.post.push_back(batch.transpose());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    auto& layer = layers_[l];
    Activations z = layer.weights * fp.post.back();
    z.colwise() += layer.bias;
    if (l + 1 == layers_.size()) {
      fp.logits = std::move(z);
      break;
    }
    Activations y;
    if (layer.bn) {
      BatchNormCache cache;
      y = batch_norm_layer(z, *layer.bn, mode, &cache);
      fp.bn.push_back(std::move(cache));
    } else {
      y = z;
      fp.bn.emplace_back();
    }
    fp.post.push_back(y.unaryExpr([&](double v) { return eval(spec, v); }));
    fp.pre.push_back(std::move(z));
    fp.act_in.push_back(std::move(y));
  }
  return fp;
}

double softmax_cross_entropy(const Activations& logits, std::span<const std::uint8_t> labels) {
  if (static_cast<std::size_t>(logits.cols()) != labels.size()) throw ShapeMismatch("logits/labels batch mismatch");
  double total = 0.0;
  for (Eigen::Index b = 0; b < logits.cols(); ++b) {
    const auto col = logits.col(b);
    const double mx = col.maxCoeff();
    const double lse = mx + std::log((col.array() - mx).exp().sum());
    total += lse - col(labels[static_cast<std::size_t>(b)]);
  }
  return total / static_cast<double>(logits.cols());
}

std::size_t count_correct(const Activations& logits, std::span<const std::uint8_t> labels) {
  std::size_t correct = 0;
  for (Eigen::Index b = 0; b < logits.cols(); ++b) {
    const auto col = logits.col(b);
    if (!col.allFinite()) continue;
    Eigen::Index arg = 0;
    col.maxCoeff(&arg);
    if (static_cast<std::size_t>(arg) == labels[static_cast<std::size_t>(b)]) ++correct;
  }
  return correct;
}

LossAndGrads Mlp::loss_and_grads(const Eigen::Ref<const Eigen::MatrixXd>& batch, std::span<const std::uint8_t> labels,
                                 Mode mode) {
  if (static_cast<std::size_t>(batch.rows()) != labels.size()) throw ShapeMismatch("batch/labels size mismatch");
  for (auto y : labels) {
    if (y >= classes()) throw ShapeMismatch("label out of range");
  }
  ForwardPass fp = forward(batch, mode);
  const auto& spec = config_.activation;
  const auto n = static_cast<double>(batch.rows());

  LossAndGrads out;
  out.loss = softmax_cross_entropy(fp.logits, labels);
  out.logits = fp.logits;

  // d loss / d logits = (softmax - onehot) / n
  Activations dz = fp.logits;
  for (Eigen::Index b = 0; b < dz.cols(); ++b) {
    auto col = dz.col(b);
    const double mx = col.maxCoeff();
    col = (col.array() - mx).exp();
    col /= col.sum();
    col(labels[static_cast<std::size_t>(b)]) -= 1.0;
  }
  dz /= n;

  out.grads.layers.resize(layers_.size());
  for (std::size_t l = layers_.size(); l-- > 0;) {
    auto& g = out.grads.layers[l];
    g.weights = dz * fp.post[l].transpose();
    g.bias = dz.rowwise().sum();
    if (l == 0) break;

    // Back into hidden layer l-1 (its output is post[l]).
    Activations da = layers_[l].weights.transpose() * dz;
    const Activations& y = fp.act_in[l - 1];
    Activations dy = da.array() * y.unaryExpr([&](double v) { return deriv(spec, v); }).array();

    auto& prev = layers_[l - 1];
    auto& gp = out.grads.layers[l - 1];
    if (prev.bn) {
      const auto& cache = fp.bn[l - 1];
      const Activations& xhat = cache.normalized;
      gp.gamma = (dy.array() * xhat.array()).rowwise().sum();
      gp.beta = dy.rowwise().sum();
      Activations dxhat = dy.array().colwise() * prev.bn->gamma.array();
      if (mode == Mode::Train) {
        const Eigen::VectorXd sum_dxhat = dxhat.rowwise().sum();
        const Eigen::VectorXd sum_dxhat_xhat = (dxhat.array() * xhat.array()).rowwise().sum();
        Activations t = (n * dxhat).colwise() - sum_dxhat;
        t -= (xhat.array().colwise() * sum_dxhat_xhat.array()).matrix();
        dz = (t.array().colwise() * (cache.inv_std.array() / n)).matrix();
      } else {
        dz = (dxhat.array().colwise() * cache.inv_std.array()).matrix();
      }
    } else {
      dz = std::move(dy);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Adam

void adam_update(std::span<double> param, std::span<const double> grad, Eigen::VectorXd& m, Eigen::VectorXd& v,
                 std::uint64_t t, double lr, const AdamConfig& cfg) {
  if (param.size() != grad.size()) throw ShapeMismatch("parameter/gradient size mismatch");
  const auto size = static_cast<Eigen::Index>(param.size());
  if (m.size() != size) m = Eigen::VectorXd::Zero(size);
  if (v.size() != size) v = Eigen::VectorXd::Zero(size);
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (Eigen::Index i = 0; i < size; ++i) {
    const double g = grad[static_cast<std::size_t>(i)];
    m(i) = cfg.beta1 * m(i) + (1.0 - cfg.beta1) * g;
    v(i) = cfg.beta2 * v(i) + (1.0 - cfg.beta2) * g * g;
    const double mhat = m(i) / c1;
    const double vhat = v(i) / c2;
    param[static_cast<std::size_t>(i)] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

void adam_step(Mlp& net, Gradients& grads, AdamState& state, double lr, const AdamConfig& cfg) {
  ++state.t;
  std::size_t k = 0;
  net.for_each_parameter(grads, [&](std::span<double> p, std::span<const double> g) {
    if (state.m.size() <= k) {
      state.m.emplace_back();
      state.v.emplace_back();
    }
    adam_update(p, g, state.m[k], state.v[k], state.t, lr, cfg);
    ++k;
  });
}

// ---------------------------------------------------------------------------
// Training

Eigen::MatrixXd gather_batch(const Dataset& ds, std::span<const std::size_t> indices) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(indices.size()), ds.images.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = ds.images.row(static_cast<Eigen::Index>(indices[r])).cast<double>();
  }
  return out;
}

namespace {

struct Evaluation {
  double loss;
  double acc;
};

Evaluation evaluate(Mlp& net, const Dataset& ds) {
  if (ds.size() == 0) return {std::numeric_limits<double>::quiet_NaN(), 0.0};
  constexpr std::size_t kChunk = 512;
  double loss_sum = 0.0;
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t first = 0; first < ds.size(); first += kChunk) {
    const std::size_t count = std::min(kChunk, ds.size() - first);
    idx.resize(count);
    for (std::size_t i = 0; i < count; ++i) idx[i] = first + i;
    const auto fp = net.forward(gather_batch(ds, idx), Mode::Eval);
    const std::span<const std::uint8_t> labels(ds.labels.data() + first, count);
    loss_sum += softmax_cross_entropy(fp.logits, labels) * static_cast<double>(count);
    correct += count_correct(fp.logits, labels);
  }
  const auto n = static_cast<double>(ds.size());
  return {loss_sum / n, static_cast<double>(correct) / n};
}

} // namespace

TrainReport train(Mlp& net, const TrainConfig& tc, const Dataset& train_set, const Dataset& val_set) {
  if (!(tc.lr > 0.0)) throw ConfigError("learning rate must be > 0");
  if (tc.batch_size == 0) throw ConfigError("batch size must be >= 1");
  if (train_set.size() == 0) throw ConfigError("empty training set");
  if (train_set.features() != net.inputs()) throw ShapeMismatch("dataset features do not match the input width");

  TrainReport report;
  AdamState adam;
  std::vector<std::size_t> order(train_set.size());
  std::vector<std::uint8_t> labels;
  const bool bn = net.config().batch_norm;

  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng = Rng::substream(tc.seed, {0xe90c4ULL, epoch});
    shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::size_t seen = 0;
    std::size_t correct = 0;
    for (std::size_t first = 0; first < order.size(); first += tc.batch_size) {
      const std::size_t count = std::min(tc.batch_size, order.size() - first);
      if (bn && count < 2) break; // a trailing singleton cannot be batch-normalized
      const std::span<const std::size_t> idx(order.data() + first, count);
      labels.resize(count);
      for (std::size_t i = 0; i < count; ++i) labels[i] = train_set.labels[idx[i]];
      const Eigen::MatrixXd batch = gather_batch(train_set, idx);

      auto lg = net.loss_and_grads(batch, labels, Mode::Train);
      loss_sum += lg.loss * static_cast<double>(count);
      correct += count_correct(lg.logits, labels);
      seen += count;
      adam_step(net, lg.grads, adam, tc.lr, tc.adam);
    }

    EpochStats s;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    s.train_loss = seen > 0 ? loss_sum / static_cast<double>(seen) : nan;
    s.train_acc = seen > 0 ? static_cast<double>(correct) / static_cast<double>(seen) : 0.0;
    const auto va = evaluate(net, val_set);
    s.val_loss = va.loss;
    s.val_acc = va.acc;
    report.best_val_acc = std::max(report.best_val_acc, s.val_acc);
    report.epochs.push_back(s);
  }
  const double chance = 1.0 / static_cast<double>(net.classes());
  report.learned = report.best_val_acc >= chance + tc.learned_margin;
  return report;
}

TrainReport train(const NetworkConfig& config, const TrainConfig& tc, const Dataset& data) {
  auto [tr, va] = split_validation(data, tc.val_fraction, tc.seed);
  Mlp net(config);
  return train(net, tc, tr, va);
}

std::string report_to_csv(const TrainReport& report) {
  std::ostringstream os;
  os << "epoch,train_loss,train_acc,val_loss,val_acc\n";
  for (std::size_t e = 0; e < report.epochs.size(); ++e) {
    const auto& s = report.epochs[e];
    os << (e + 1) << ',' << format_double(s.train_loss) << ',' << format_double(s.train_acc) << ','
       << format_double(s.val_loss) << ',' << format_double(s.val_acc) << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

WeightMatrix as_row(const Eigen::VectorXd& v) { return v.transpose(); }

Eigen::VectorXd read_row(std::istream& is, Eigen::Index expected) {
  const WeightMatrix m = read_weights(is);
  if (m.rows() != 1 || m.cols() != expected) throw ShapeMismatch("checkpoint vector has the wrong shape");
  return m.transpose();
}

} // namespace

void save_checkpoint(const Mlp& net, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto& cfg = net.config();
  nlohmann::json manifest;
  manifest["format"] = "oswi-checkpoint";
  manifest["version"] = 1;
  manifest["layer_widths"] = cfg.layer_widths;
  manifest["activation"] = to_string(cfg.activation);
  manifest["init"] = {{"kind", to_string(cfg.init.kind)},
                      {"sigma_star", cfg.init.sigma_star},
                      {"omega", cfg.init.omega},
                      {"seed", cfg.init.seed}};
  manifest["batch_norm"] = cfg.batch_norm;
  nlohmann::json blocks = nlohmann::json::array();

  std::ofstream os(fs::path(dir) / "weights.oswi", std::ios::binary);
  if (!os) throw IoError("cannot write checkpoint in " + dir);
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const auto& layer = net.layers()[l];
    const std::string tag = "layer" + std::to_string(l + 1);
    write_weights(os, layer.weights);
    blocks.push_back(tag + ".weights");
    write_weights(os, as_row(layer.bias));
    blocks.push_back(tag + ".bias");
    if (layer.bn) {
      write_weights(os, as_row(layer.bn->gamma));
      write_weights(os, as_row(layer.bn->beta));
      write_weights(os, as_row(layer.bn->running_mean));
      write_weights(os, as_row(layer.bn->running_var));
      for (const char* n : {".gamma", ".beta", ".running_mean", ".running_var"}) blocks.push_back(tag + n);
    }
  }
  if (!os) throw IoError("checkpoint write failed in " + dir);
  manifest["blocks"] = blocks;
  std::ofstream ms(fs::path(dir) / "manifest.json");
  ms << to_json_text(manifest) << '\n';
}

Mlp load_checkpoint(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream ms(fs::path(dir) / "manifest.json");
  if (!ms) throw IoError("no manifest.json in " + dir);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(ms);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad checkpoint manifest: ") + e.what());
  }
  NetworkConfig cfg;
  cfg.layer_widths = manifest.at("layer_widths").get<std::vector<std::size_t>>();
  cfg.activation = parse_activation(manifest.at("activation").get<std::string>());
  const auto& init = manifest.at("init");
  cfg.init = InitScheme{parse_init_kind(init.at("kind").get<std::string>()), init.at("sigma_star").get<double>(),
                        init.at("omega").get<double>(), init.at("seed").get<std::uint64_t>()};
  cfg.batch_norm = manifest.at("batch_norm").get<bool>();
  Mlp net(cfg);

  std::ifstream is(fs::path(dir) / "weights.oswi", std::ios::binary);
  if (!is) throw IoError("no weights.oswi in " + dir);
  for (auto& layer : net.layers()) {
    WeightMatrix w = read_weights(is);
    if (w.rows() != layer.weights.rows() || w.cols() != layer.weights.cols()) {
      throw ShapeMismatch("checkpoint weights have the wrong shape");
    }
    layer.weights = std::move(w);
    layer.bias = read_row(is, layer.bias.size());
    if (layer.bn) {
      const auto n = layer.bn->gamma.size();
      layer.bn->gamma = read_row(is, n);
      layer.bn->beta = read_row(is, n);
      layer.bn->running_mean = read_row(is, n);
      layer.bn->running_var = read_row(is, n);
    }
  }
  return net;
}

} // namespace oswi
