// oswi: experiment drivers for odd-sigmoid weight initialization.
//
// Exit codes: 0 success, 2 configuration/validation error, 3 I/O error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "oswi/activations.hpp"
#include "oswi/calibration.hpp"
#include "oswi/data.hpp"
#include "oswi/dynamics.hpp"
#include "oswi/error.hpp"
#include "oswi/experiments.hpp"
#include "oswi/initializers.hpp"
#include "oswi/json_text.hpp"
#include "oswi/network.hpp"
#include "oswi/propagation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using oswi::format_double;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct Common {
  std::uint64_t seed = 0;
  bool json = false;
  bool paper_scale = false;
  std::string config;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "RNG seed")->capture_default_str();
  sub->add_flag("--json", c.json, "Emit one JSON object on stdout");
  sub->add_flag("--paper-scale", c.paper_scale, "Use the full-size settings (slow)");
  sub->add_option("--config", c.config, "JSON file with option defaults");
}

void paper_scale_warning() {
  std::cerr << "warning: --paper-scale selected; this run may take hours and a lot of memory\n";
}

// Option defaults from a JSON config file. Keys are long option names without
// dashes; a nested object named after the subcommand overrides top-level keys.
// Values become option defaults, so flags given on the command line win.
void apply_config(CLI::App* sub, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw oswi::IoError("cannot open config " + path);
  json cfg;
  try {
    cfg = json::parse(is);
  } catch (const json::exception& e) {
    throw oswi::ConfigError("bad config " + path + ": " + e.what());
  }
  if (!cfg.is_object()) throw oswi::ConfigError("config must be a JSON object");
  std::map<std::string, json> merged;
  for (auto& [k, v] : cfg.items()) {
    if (!v.is_object()) merged[k] = v;
  }
  if (cfg.contains(sub->get_name()) && cfg.at(sub->get_name()).is_object()) {
    for (auto& [k, v] : cfg.at(sub->get_name()).items()) merged[k] = v;
  }
  auto scalar = [](const json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
    if (v.is_number()) return format_double(v.get<double>());
    throw oswi::ConfigError("unsupported config value " + v.dump());
  };
  for (auto& [key, value] : merged) {
    if (key == "config") continue;
    CLI::Option* opt = nullptr;
    try {
      opt = sub->get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      throw oswi::ConfigError("unknown config key '" + key + "' for " + sub->get_name());
    }
    std::string text;
    if (value.is_array()) {
      for (std::size_t i = 0; i < value.size(); ++i) text += (i ? "," : "") + scalar(value[i]);
    } else {
      text = scalar(value);
    }
    opt->default_val(text);
  }
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw oswi::IoError("cannot create " + dir + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw oswi::IoError("cannot write " + path.string());
  return os;
}

// Human mode: "key  value" lines from a flat JSON object.
void print_table(const json& obj) {
  std::size_t w = 0;
  for (auto& [k, v] : obj.items()) w = std::max(w, k.size());
  for (auto& [k, v] : obj.items()) {
    std::string val;
    if (v.is_number_float()) {
      val = format_double(v.get<double>());
    } else if (v.is_string()) {
      val = v.get<std::string>();
    } else if (v.is_null()) {
      val = "-";
    } else {
      val = v.dump();
    }
    std::cout << k << std::string(w + 2 - k.size(), ' ') << val << '\n';
  }
}

void emit(const Common& c, const json& obj) {
  if (c.json) {
    std::cout << oswi::to_json_text(obj) << '\n';
  } else {
    print_table(obj);
  }
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// calibrate -------------------------------------------------------------------

struct CalibrateArgs {
  double p = 0.3;
  std::uint64_t depth = 20;
  std::optional<double> omega;
  std::string activation = "tanh";
};

int run_calibrate(const CalibrateArgs& a, const Common& c) {
  const double w = a.omega ? *a.omega : oswi::omega(oswi::parse_activation(a.activation));
  const auto r = oswi::calibrate(a.p, a.depth, w);
  json out;
  out["p"] = r.p_target;
  out["depth"] = r.depth;
  if (!a.omega) out["activation"] = a.activation;
  out["omega"] = r.omega;
  out["sigma_star"] = r.sigma_star;
  out["lr_low"] = r.lr.low;
  out["lr_high"] = r.lr.high;
  emit(c, out);
  return 0;
}

// bifurcate -------------------------------------------------------------------

struct BifurcateArgs {
  std::string activation = "tanh";
  std::vector<double> a;       // absolute gains
  std::vector<double> offsets{0.1, 0.2, 0.3, 0.4, 0.5}; // a = omega + offset when --a is absent
  std::vector<double> x0{0.1};
  std::size_t n = 50;
  std::string out = "out/bifurcate";
};

int run_bifurcate(const BifurcateArgs& args, const Common& c) {
  const auto spec = oswi::parse_activation(args.activation);
  const double w = oswi::omega(spec);
  std::vector<double> gains = args.a;
  if (gains.empty()) {
    for (double off : args.offsets) gains.push_back(w + off);
  }
  if (args.n == 0) throw oswi::ConfigError("--n must be >= 1");
  ensure_dir(args.out);
  auto traj = open_out(fs::path(args.out) / "trajectories.csv");
  traj << "a,x0,n,x_n\n";
  for (double a : gains) {
    for (double x0 : args.x0) {
      const auto t = oswi::iterate(spec, a, x0, args.n);
      for (std::size_t k = 0; k < t.values.size(); ++k) {
        traj << format_double(a) << ',' << format_double(x0) << ',' << k << ',' << format_double(t.values[k]) << '\n';
      }
    }
  }
  auto fp = open_out(fs::path(args.out) / "fixed_points.csv");
  fp << "a,regime,xi,residual\n";
  json points = json::array();
  for (double a : gains) {
    const auto s = oswi::solve_xi(spec, a);
    const char* regime = s.regime == oswi::Regime::SuperCritical ? "supercritical" : "subcritical";
    fp << format_double(a) << ',' << regime << ',' << format_double(s.xi) << ',' << format_double(s.residual) << '\n';
    points.push_back({{"a", a}, {"regime", regime}, {"xi", s.xi}, {"residual", s.residual}});
  }
  const auto rows = oswi::bifurcation_scan(spec, gains, args.x0, args.n);
  auto fin = open_out(fs::path(args.out) / "finals.csv");
  fin << "a,x0,final,xi\n";
  for (const auto& r : rows) {
    fin << format_double(r.a) << ',' << format_double(r.x0) << ',' << format_double(r.final_value) << ','
        << format_double(r.xi) << '\n';
  }
  json out;
  out["activation"] = oswi::to_string(spec);
  out["omega"] = w;
  out["n"] = args.n;
  out["out"] = args.out;
  if (c.json) {
    out["fixed_points"] = points;
  } else {
    out["gains"] = gains.size();
    out["initial_values"] = args.x0.size();
  }
  emit(c, out);
  return 0;
}

// propagate -------------------------------------------------------------------

struct PropagateArgs {
  std::string activation = "tanh";
  std::string mode = "scalar"; // scalar | ffnn
  std::string init = "proposed";
  double p = 0.3;
  std::optional<double> sigma;
  std::size_t depth = 50;
  std::size_t width = 2000;   // ffnn
  std::size_t chains = 20000; // scalar
  double x0 = 0.1;
  std::string input = "const"; // const | uniform
  std::size_t bins = oswi::kDefaultSpreadBins;
  std::vector<double> sweep_p; // ffnn spread-vs-p sweep when nonempty
  std::size_t n_seeds = 1;
  std::string out = "out/propagate";
};

int run_propagate(PropagateArgs args, const Common& c) {
  if (c.paper_scale) {
    paper_scale_warning();
    args.depth = 10000;
    args.width = 20000;
  }
  const auto spec = oswi::parse_activation(args.activation);
  const double w = oswi::omega(spec);
  if (args.depth == 0) throw oswi::ConfigError("--depth must be >= 1");
  if (args.bins == 0) throw oswi::ConfigError("--bins must be >= 1");
  ensure_dir(args.out);

  if (!args.sweep_p.empty()) {
    if (args.n_seeds == 0) throw oswi::ConfigError("--n-seeds must be >= 1");
    const auto rows = oswi::spread_vs_p_sweep(spec, args.depth, args.width, args.sweep_p, args.bins, c.seed,
                                              args.n_seeds);
    auto os = open_out(fs::path(args.out) / "spread.csv");
    os << "p,sigma_star,seed_index,spread\n";
    json table = json::array();
    for (const auto& r : rows) {
      for (std::size_t s = 0; s < r.spreads.size(); ++s) {
        os << format_double(r.p) << ',' << format_double(r.sigma_star) << ',' << s << ','
           << format_double(r.spreads[s]) << '\n';
      }
      table.push_back({{"p", r.p}, {"sigma_star", r.sigma_star}, {"spread", r.spread}});
    }
    json out{{"activation", oswi::to_string(spec)}, {"omega", w}, {"depth", args.depth}, {"width", args.width}};
    out["sweep"] = table;
    if (c.json) {
      std::cout << oswi::to_json_text(out) << '\n';
    } else {
      std::cout << "p                    sigma_star           mean_spread\n";
      for (const auto& r : rows) {
        std::printf("%-20s %-20s %s\n", format_double(r.p).c_str(), format_double(r.sigma_star).c_str(),
                    format_double(r.spread).c_str());
      }
    }
    return 0;
  }

  double sigma = args.sigma ? *args.sigma : oswi::sigma_star(args.p, args.depth, w);
  oswi::PropagationTrace trace;
  if (args.mode == "scalar") {
    trace = oswi::scalar_chain(spec, sigma, args.depth, args.chains, args.x0, c.seed, args.bins);
  } else if (args.mode == "ffnn") {
    const auto kind = oswi::parse_init_kind(args.init);
    oswi::InitScheme scheme;
    switch (kind) {
    case oswi::InitKind::Proposed: scheme = oswi::InitScheme::proposed(sigma, w, c.seed); break;
    case oswi::InitKind::XavierUniform: scheme = oswi::InitScheme::xavier(c.seed); break;
    case oswi::InitKind::HeNormal: scheme = oswi::InitScheme::he(c.seed); break;
    case oswi::InitKind::Orthogonal: scheme = oswi::InitScheme::orthogonal(c.seed); break;
    }
    oswi::InputDistribution in;
    if (args.input == "const") {
      in = oswi::InputDistribution::positive_constant(args.x0);
    } else if (args.input == "uniform") {
      in = oswi::InputDistribution::uniform_sym(args.x0);
    } else {
      throw oswi::ConfigError("--input must be const or uniform");
    }
    trace = oswi::ffnn_chain(spec, scheme, args.width, args.depth, in, args.bins);
  } else {
    throw oswi::ConfigError("--mode must be scalar or ffnn");
  }

  const auto theory = oswi::theory_negative_rates(sigma, args.depth, w);
  {
    auto os = open_out(fs::path(args.out) / "negrate.csv");
    os << "depth,empirical,theory\n";
    for (std::size_t j = 0; j < trace.negative_rate_per_depth.size(); ++j) {
      os << j + 1 << ',' << format_double(trace.negative_rate_per_depth[j]) << ',' << format_double(theory[j]) << '\n';
    }
  }
  {
    auto os = open_out(fs::path(args.out) / "lastlayer.csv");
    os << "bin,lo,hi,count\n";
    const double step = (trace.range.hi - trace.range.lo) / static_cast<double>(trace.last_layer_histogram.size());
    for (std::size_t b = 0; b < trace.last_layer_histogram.size(); ++b) {
      os << b << ',' << format_double(trace.range.lo + step * static_cast<double>(b)) << ','
         << format_double(trace.range.lo + step * static_cast<double>(b + 1)) << ','
         << trace.last_layer_histogram[b] << '\n';
    }
  }
  double max_abs = 0.0;
  for (double v : trace.last_layer_values) max_abs = std::max(max_abs, std::abs(v));
  json out;
  out["mode"] = args.mode;
  out["activation"] = oswi::to_string(spec);
  out["omega"] = w;
  if (args.mode == "ffnn") out["init"] = args.init;
  out["p"] = args.sigma ? json(nullptr) : json(args.p);
  out["sigma"] = sigma;
  out["depth"] = args.depth;
  out["width"] = trace.width;
  out["final_negative_rate"] = trace.negative_rate_per_depth.back();
  out["theory_negative_rate"] = theory.back();
  out["spread"] = trace.spread;
  out["max_abs_last_layer"] = max_abs;
  out["out"] = args.out;
  {
    auto os = open_out(fs::path(args.out) / "summary.json");
    os << oswi::to_json_text(out) << '\n';
  }
  emit(c, out);
  return 0;
}

// training --------------------------------------------------------------------

struct DataArgs {
  std::string dataset = "mnist-5k";
  std::string data_dir;
  std::string images;
  std::string labels;
  std::size_t subset = 1000;
  bool val_from_full = false;
};

void add_data_options(CLI::App* sub, DataArgs& d) {
  sub->add_option("--dataset", d.dataset, "Dataset directory name under the data dir")->capture_default_str();
  sub->add_option("--data-dir", d.data_dir, "Dataset root (default $OSWI_DATA_DIR or ./data)");
  sub->add_option("--images", d.images, "IDX image file (overrides --dataset)");
  sub->add_option("--labels", d.labels, "IDX label file (overrides --dataset)");
  sub->add_option("--subset", d.subset, "Training subset size")->capture_default_str();
  sub->add_flag("--val-from-full", d.val_from_full, "Hold out 15% of the full set instead of the subset");
}

oswi::Dataset load_data(const DataArgs& d) {
  if (!d.images.empty() || !d.labels.empty()) {
    if (d.images.empty() || d.labels.empty()) throw oswi::ConfigError("--images and --labels go together");
    return oswi::load_idx(d.images, d.labels, d.dataset);
  }
  return oswi::load_named(d.dataset, d.data_dir);
}

json report_json(const oswi::TrainReport& r) {
  json epochs = json::array();
  for (std::size_t e = 0; e < r.epochs.size(); ++e) {
    const auto& s = r.epochs[e];
    epochs.push_back({{"epoch", e + 1},
                      {"train_loss", s.train_loss},
                      {"train_acc", s.train_acc},
                      {"val_loss", s.val_loss},
                      {"val_acc", s.val_acc}});
  }
  return {{"best_val_acc", r.best_val_acc}, {"learned", r.learned}, {"epochs", epochs}};
}

struct TrainArgs {
  DataArgs data;
  std::string activation = "tanh";
  std::string init = "proposed";
  double p = 0.3;
  std::size_t hidden_layers = 10;
  std::size_t width = 128;
  std::size_t epochs = 5;
  std::optional<double> lr; // default 1e-3 omega
  std::size_t batch_size = 128;
  bool batch_norm = false;
  std::string out = "out/train";
  std::string dump_weights;
};

int run_train(TrainArgs args, const Common& c) {
  if (c.paper_scale) {
    paper_scale_warning();
    args.hidden_layers = 20;
    args.width = 512;
  }
  const auto spec = oswi::parse_activation(args.activation);
  const auto kind = oswi::parse_init_kind(args.init);
  const double w = oswi::omega(spec);
  const double lr = args.lr ? *args.lr : 1e-3 * w;
  if (!(lr > 0.0)) throw oswi::ConfigError("--lr must be > 0");
  if (args.batch_size == 0) throw oswi::ConfigError("--batch-size must be >= 1");
  const oswi::MlpShape shape{args.hidden_layers, args.width};

  const oswi::Dataset full = load_data(args.data);
  const auto data = oswi::prepare_data(full, args.data.subset, 0.15, c.seed, args.data.val_from_full);
  oswi::Mlp net(oswi::make_network_config(spec, kind, shape, full.features(), full.classes, args.p, c.seed,
                                          args.batch_norm));
  oswi::TrainConfig tc;
  tc.lr = lr;
  tc.epochs = args.epochs;
  tc.batch_size = args.batch_size;
  tc.seed = c.seed;
  const auto report = oswi::train(net, tc, data.train, data.val);

  ensure_dir(args.out);
  json out;
  out["activation"] = oswi::to_string(spec);
  out["omega"] = w;
  out["init"] = oswi::to_string(kind);
  out["hidden_layers"] = args.hidden_layers;
  out["width"] = args.width;
  out["lr"] = lr;
  out["epochs_run"] = args.epochs;
  out["batch_norm"] = args.batch_norm;
  out["train_size"] = data.train.size();
  out["val_size"] = data.val.size();
  out["seed"] = c.seed;
  json rep = report_json(report);
  out["best_val_acc"] = rep["best_val_acc"];
  out["learned"] = rep["learned"];
  {
    auto os = open_out(fs::path(args.out) / "report.csv");
    os << oswi::report_to_csv(report);
  }
  {
    json full_out = out;
    full_out["epochs"] = rep["epochs"];
    auto os = open_out(fs::path(args.out) / "report.json");
    os << oswi::to_json_text(full_out) << '\n';
    if (c.json) {
      std::cout << oswi::to_json_text(full_out) << '\n';
    }
  }
  if (!args.dump_weights.empty()) {
    ensure_dir(args.dump_weights);
    oswi::save_checkpoint(net, args.dump_weights);
  }
  if (!c.json) {
    print_table(out);
    std::cout << "\nepoch  train_loss  train_acc  val_loss  val_acc\n";
    for (std::size_t e = 0; e < report.epochs.size(); ++e) {
      const auto& s = report.epochs[e];
      std::printf("%-6zu %-11.6g %-10.4f %-9.6g %.4f\n", e + 1, s.train_loss, s.train_acc, s.val_loss, s.val_acc);
    }
  }
  return 0;
}

struct SweepArgs {
  DataArgs data;
  std::string activation = "tanh";
  std::vector<double> alphas{0.01, 1.0, 100.0};
  std::vector<std::string> inits{"proposed", "xavier", "he", "orthogonal"};
  int lr_min_exp = -9;
  int lr_max_exp = 0;
  double p = 0.3;
  std::size_t hidden_layers = 10;
  std::size_t width = 128;
  std::size_t epochs = 1;
  std::string out = "out/sweep-lr";
};

int run_sweep(SweepArgs args, const Common& c) {
  if (c.paper_scale) {
    paper_scale_warning();
    args.hidden_layers = 20;
    args.width = 512;
  }
  if (args.lr_min_exp > args.lr_max_exp) throw oswi::ConfigError("--lr-min-exp must be <= --lr-max-exp");
  oswi::LrSweepConfig cfg;
  cfg.base = oswi::parse_activation(args.activation);
  cfg.alphas = args.alphas;
  for (double a : cfg.alphas) {
    if (!(a > 0.0)) throw oswi::ConfigError("--alphas must be > 0");
  }
  cfg.inits.clear();
  for (const auto& s : args.inits) cfg.inits.push_back(oswi::parse_init_kind(s));
  cfg.lrs = oswi::decade_grid(args.lr_min_exp, args.lr_max_exp);
  cfg.shape = {args.hidden_layers, args.width};
  cfg.subset_size = args.data.subset;
  cfg.epochs = args.epochs;
  cfg.p = args.p;
  cfg.seed = c.seed;
  cfg.val_from_full = args.data.val_from_full;

  const oswi::Dataset full = load_data(args.data);
  const auto result = oswi::sweep_learning_rates(full, cfg);

  ensure_dir(args.out);
  {
    auto os = open_out(fs::path(args.out) / "grid.csv");
    os << "alpha,omega,init,lr,best_val_acc,learned\n";
    for (const auto& cell : result.cells) {
      os << format_double(cell.alpha) << ',' << format_double(cell.omega) << ',' << oswi::to_string(cell.init) << ','
         << format_double(cell.lr) << ',' << format_double(cell.best_val_acc) << ',' << (cell.learned ? 1 : 0) << '\n';
    }
  }
  json windows = json::array();
  {
    auto os = open_out(fs::path(args.out) / "windows.csv");
    os << "alpha,omega,init,lr_lo,lr_hi\n";
    for (const auto& w : result.windows) {
      os << format_double(w.alpha) << ',' << format_double(w.omega) << ',' << oswi::to_string(w.init) << ','
         << (w.lo ? format_double(*w.lo) : "") << ',' << (w.hi ? format_double(*w.hi) : "") << '\n';
      windows.push_back({{"alpha", w.alpha},
                         {"omega", w.omega},
                         {"init", oswi::to_string(w.init)},
                         {"lr_lo", optional_json(w.lo)},
                         {"lr_hi", optional_json(w.hi)}});
    }
  }
  if (c.json) {
    json out{{"activation", args.activation}, {"out", args.out}, {"windows", windows}};
    std::cout << oswi::to_json_text(out) << '\n';
  } else {
    std::printf("%-12s %-12s %-12s %s\n", "alpha", "omega", "init", "learnable lr");
    for (const auto& w : result.windows) {
      std::string range = "-";
      if (w.lo) range = format_double(*w.lo) + " .. " + format_double(*w.hi);
      std::printf("%-12s %-12s %-12s %s\n", format_double(w.alpha).c_str(), format_double(w.omega).c_str(),
                  oswi::to_string(w.init).c_str(), range.c_str());
    }
  }
  return 0;
}

// fetch -----------------------------------------------------------------------

int run_fetch(const oswi::FetchRequest& req, const Common& c) {
  const auto files = oswi::fetch_dataset(req);
  json list = json::array();
  for (const auto& f : files) list.push_back({{"path", f.path}, {"sha256", f.sha256}, {"verified", f.verified}});
  if (c.json) {
    std::cout << oswi::to_json_text(json{{"dataset", req.dataset}, {"files", list}}) << '\n';
  } else {
    for (const auto& f : files) std::cout << f.sha256 << "  " << f.path << (f.verified ? "" : "  (unverified)") << '\n';
  }
  return 0;
}

// Finds the value of --config for the given subcommand before the real parse.
std::string prescan_config(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
  }
  return {};
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Odd-sigmoid weight initialization experiments"};
  app.require_subcommand(1);

  Common common;

  CalibrateArgs cal;
  auto* calibrate = app.add_subcommand("calibrate", "Noise scale sigma* and learning-rate band");
  add_common(calibrate, common);
  calibrate->add_option("--p", cal.p, "Target negative rate in [0, 0.5)")->capture_default_str();
  calibrate->add_option("--depth", cal.depth, "Number of layers")->capture_default_str();
  auto* omega_opt = calibrate->add_option("--omega", cal.omega, "Critical gain (overrides --activation)");
  calibrate->add_option("--activation", cal.activation, "Activation spec")->capture_default_str()->excludes(omega_opt);

  BifurcateArgs bif;
  auto* bifurcate = app.add_subcommand("bifurcate", "Iterates x -> f(a x) and writes trajectories");
  add_common(bifurcate, common);
  bifurcate->add_option("--activation", bif.activation)->capture_default_str();
  bifurcate->add_option("--a", bif.a, "Gains (default omega + offsets)")->delimiter(',');
  bifurcate->add_option("--offsets", bif.offsets, "Gain offsets above omega")->delimiter(',');
  bifurcate->add_option("--x0", bif.x0, "Initial values")->delimiter(',');
  bifurcate->add_option("--n", bif.n, "Iterations")->capture_default_str();
  bifurcate->add_option("--out", bif.out, "Output directory")->capture_default_str();

  PropagateArgs prop;
  auto* propagate = app.add_subcommand("propagate", "Signal propagation through deep chains");
  add_common(propagate, common);
  propagate->add_option("--activation", prop.activation)->capture_default_str();
  propagate->add_option("--mode", prop.mode, "scalar or ffnn")->capture_default_str();
  propagate->add_option("--init", prop.init, "ffnn init: proposed, xavier, he, orthogonal")->capture_default_str();
  propagate->add_option("--p", prop.p, "Target negative rate")->capture_default_str();
  propagate->add_option("--sigma", prop.sigma, "Noise scale (overrides --p)");
  propagate->add_option("--depth", prop.depth)->capture_default_str();
  propagate->add_option("--width", prop.width, "Layer width (ffnn)")->capture_default_str();
  propagate->add_option("--chains", prop.chains, "Independent chains (scalar)")->capture_default_str();
  propagate->add_option("--x0", prop.x0, "Input value or half-range")->capture_default_str();
  propagate->add_option("--input", prop.input, "const or uniform")->capture_default_str();
  propagate->add_option("--bins", prop.bins)->capture_default_str();
  propagate->add_option("--sweep-p", prop.sweep_p, "Spread-vs-p sweep over these targets (ffnn)")->delimiter(',');
  propagate->add_option("--n-seeds", prop.n_seeds, "Seeds per sweep point")->capture_default_str();
  propagate->add_option("--out", prop.out, "Output directory")->capture_default_str();

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "One training run");
  add_common(train, common);
  add_data_options(train, tr.data);
  train->add_option("--activation", tr.activation)->capture_default_str();
  train->add_option("--init", tr.init)->capture_default_str();
  train->add_option("--p", tr.p, "Target negative rate for the proposed init")->capture_default_str();
  train->add_option("--hidden-layers", tr.hidden_layers)->capture_default_str();
  train->add_option("--width", tr.width)->capture_default_str();
  train->add_option("--epochs", tr.epochs)->capture_default_str();
  train->add_option("--lr", tr.lr, "Learning rate (default 1e-3 omega)");
  train->add_option("--batch-size", tr.batch_size)->capture_default_str();
  train->add_flag("--batch-norm", tr.batch_norm, "Batch norm before each hidden activation");
  train->add_option("--out", tr.out, "Output directory")->capture_default_str();
  train->add_option("--dump-weights", tr.dump_weights, "Write a checkpoint to this directory");

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep-lr", "Learnable learning-rate windows");
  add_common(sweep, common);
  add_data_options(sweep, sw.data);
  sweep->add_option("--activation", sw.activation, "Base activation; scaled by each alpha")->capture_default_str();
  sweep->add_option("--alphas", sw.alphas)->delimiter(',');
  sweep->add_option("--inits", sw.inits)->delimiter(',');
  sweep->add_option("--lr-min-exp", sw.lr_min_exp)->capture_default_str();
  sweep->add_option("--lr-max-exp", sw.lr_max_exp)->capture_default_str();
  sweep->add_option("--p", sw.p)->capture_default_str();
  sweep->add_option("--hidden-layers", sw.hidden_layers)->capture_default_str();
  sweep->add_option("--width", sw.width)->capture_default_str();
  sweep->add_option("--epochs", sw.epochs)->capture_default_str();
  sweep->add_option("--out", sw.out, "Output directory")->capture_default_str();

  oswi::FetchRequest fr;
  auto* fetch = app.add_subcommand("fetch", "Download a dataset and verify SHA-256 digests");
  add_common(fetch, common);
  fetch->add_option("--dataset", fr.dataset, "Manifest entry, e.g. mnist or fmnist")->required();
  fetch->add_option("--dir", fr.dir, "Destination root (default $OSWI_DATA_DIR or ./data)");
  fetch->add_option("--manifest", fr.manifest_path, "JSON manifest with URLs and digests");
  fetch->add_option("--base-url", fr.base_url, "Mirror override");
  fetch->add_flag("--allow-unpinned", fr.allow_unpinned, "Accept files without a pinned digest");

  try {
    const std::string config_path = prescan_config(argc, argv);
    if (!config_path.empty()) {
      for (auto* sub : app.get_subcommands([](CLI::App*) { return true; })) {
        if (argc > 1 && sub->get_name() == argv[1]) apply_config(sub, config_path);
      }
    }
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  } catch (const oswi::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const oswi::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (*calibrate) return run_calibrate(cal, common);
    if (*bifurcate) return run_bifurcate(bif, common);
    if (*propagate) return run_propagate(prop, common);
    if (*train) return run_train(tr, common);
    if (*sweep) return run_sweep(sw, common);
    if (*fetch) return run_fetch(fr, common);
  } catch (const oswi::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const oswi::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const oswi::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return 0;
}
