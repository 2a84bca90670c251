#include "oswi/propagation.hpp"

#include <algorithm>
#include <cmath>

#include "oswi/calibration.hpp"
#include "oswi/error.hpp"
#include "oswi/rng.hpp"

namespace oswi {

HistogramRange default_range(const ActivationSpec& spec) {
  const double s = supremum_bound(spec);
  return {-s, s};
}

std::vector<std::uint64_t> histogram(std::span<const double> values, std::size_t bins, HistogramRange range) {
  if (bins < 2) throw DomainError("histogram needs at least 2 bins");
  if (!(range.lo < range.hi)) throw DomainError("histogram range needs lo < hi");
  std::vector<std::uint64_t> counts(bins, 0);
  const double width = (range.hi - range.lo) / static_cast<double>(bins);
  for (double v : values) {
    if (std::isnan(v)) continue;
    double pos = std::floor((v - range.lo) / width);
    pos = std::clamp(pos, 0.0, static_cast<double>(bins - 1));
    ++counts[static_cast<std::size_t>(pos)];
  }
  return counts;
}

namespace {

double entropy_score(const std::vector<std::uint64_t>& counts) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) throw EmptyInput("spread of an empty sample");
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  return std::clamp(h / std::log(static_cast<double>(counts.size())), 0.0, 1.0);
}

void finish_trace(PropagationTrace& t, std::size_t bins) {
  t.last_layer_histogram = histogram(t.last_layer_values, bins, t.range);
  t.spread = entropy_score(t.last_layer_histogram);
}

} // namespace

double spread_metric(std::span<const double> values, std::size_t bins, HistogramRange range) {
  if (values.empty()) throw EmptyInput("spread of an empty sample");
  return entropy_score(histogram(values, bins, range));
}

std::vector<double> theory_negative_rates(double sigma, std::size_t depth, double omega) {
  std::vector<double> out(depth);
  for (std::size_t j = 0; j < depth; ++j) out[j] = negative_rate(sigma, j + 1, omega);
  return out;
}

PropagationTrace scalar_chain(const ActivationSpec& spec, double sigma, std::size_t depth, std::size_t n_chains,
                              double x0, std::uint64_t seed, std::size_t bins) {
  if (depth < 1 || n_chains < 1) throw DomainError("scalar chain needs depth >= 1 and n_chains >= 1");
  if (!(sigma >= 0.0)) throw DomainError("sigma must be >= 0");
  const double w = omega(spec);

  PropagationTrace t;
  t.depth = depth;
  t.width = n_chains;
  t.range = default_range(spec);
  std::vector<std::uint64_t> negatives(depth, 0);
  t.last_layer_values.resize(n_chains);

  for (std::size_t c = 0; c < n_chains; ++c) {
    Rng rng = Rng::substream(seed, c);
    double x = x0;
    for (std::size_t j = 0; j < depth; ++j) {
      const double a = sigma == 0.0 ? w : rng.normal(w, sigma);
      x = eval(spec, a * x);
      if (x < 0.0) ++negatives[j];
    }
    t.last_layer_values[c] = x;
  }

  t.negative_rate_per_depth.resize(depth);
  for (std::size_t j = 0; j < depth; ++j) {
    t.negative_rate_per_depth[j] = static_cast<double>(negatives[j]) / static_cast<double>(n_chains);
  }
  finish_trace(t, bins);
  return t;
}

PropagationTrace ffnn_chain(const ActivationSpec& spec, const InitScheme& scheme, std::size_t width,
                            std::size_t depth, InputDistribution x0, std::size_t bins) {
  if (width < 1 || depth < 1) throw DomainError("ffnn chain needs width >= 1 and depth >= 1");
  const auto n = static_cast<Eigen::Index>(width);

  Eigen::VectorXd x(n);
  if (x0.kind == InputDistribution::Kind::PositiveConstant) {
    x.setConstant(x0.value);
  } else {
    Rng rng = Rng::substream(scheme.seed, {0x0ULL, 0ULL});
    for (Eigen::Index i = 0; i < n; ++i) x(i) = rng.uniform(-x0.value, x0.value);
  }

  PropagationTrace t;
  t.depth = depth;
  t.width = width;
  t.range = default_range(spec);
  t.negative_rate_per_depth.resize(depth);

  Eigen::VectorXd y(n);
  Eigen::VectorXd row(n);
  WeightMatrix w;
  for (std::size_t layer = 1; layer <= depth; ++layer) {
    Rng rng = scheme.layer_stream(layer);
    if (scheme.kind == InitKind::Orthogonal) {
      init_layer_into(scheme, w, width, width, rng);
      y.noalias() = w * x;
    } else {
      const RowSampler sampler(scheme, width, width);
      for (Eigen::Index i = 0; i < n; ++i) {
        sampler.fill(static_cast<std::size_t>(i), std::span<double>(row.data(), width), rng);
        y(i) = row.dot(x);
      }
    }
    std::size_t neg = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      x(i) = eval(spec, y(i));
      if (x(i) < 0.0) ++neg;
    }
    t.negative_rate_per_depth[layer - 1] = static_cast<double>(neg) / static_cast<double>(width);
  }
  t.last_layer_values.assign(x.data(), x.data() + n);
  finish_trace(t, bins);
  return t;
}

namespace {

// Proposed chains for several noise scales that share one seed. Every row of
// Z is drawn once and reused for each scale; per scale the arithmetic matches
// RowSampler::fill followed by a dot product, so each chain equals the
// corresponding ffnn_chain bit for bit.
std::vector<std::vector<double>> shared_noise_chains(const ActivationSpec& spec, std::span<const double> sigmas,
                                                     double w, std::uint64_t seed, std::size_t width,
                                                     std::size_t depth, double x0) {
  const auto n = static_cast<Eigen::Index>(width);
  const auto k = sigmas.size();
  std::vector<double> scale(k);
  for (std::size_t c = 0; c < k; ++c) scale[c] = sigmas[c] / std::sqrt(static_cast<double>(width));
  const bool any_noise = std::any_of(scale.begin(), scale.end(), [](double v) { return v != 0.0; });
  const auto scheme = InitScheme::proposed(0.0, w, seed);

  std::vector<Eigen::VectorXd> x(k, Eigen::VectorXd::Constant(n, x0));
  std::vector<Eigen::VectorXd> y(k, Eigen::VectorXd(n));
  Eigen::VectorXd z(n);
  Eigen::VectorXd row(n);
  for (std::size_t layer = 1; layer <= depth; ++layer) {
    Rng rng = scheme.layer_stream(layer);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (any_noise) {
        for (Eigen::Index j = 0; j < n; ++j) z(j) = rng.normal();
      }
      for (std::size_t c = 0; c < k; ++c) {
        if (scale[c] == 0.0) {
          row.setZero();
        } else {
          row = scale[c] * z;
        }
        row(i % n) += w;
        y[c](i) = row.dot(x[c]);
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      for (Eigen::Index i = 0; i < n; ++i) x[c](i) = eval(spec, y[c](i));
    }
  }
  std::vector<std::vector<double>> out;
  for (const auto& v : x) out.emplace_back(v.data(), v.data() + n);
  return out;
}

} // namespace

std::vector<SpreadSweepRow> spread_vs_p_sweep(const ActivationSpec& spec, std::size_t depth, std::size_t width,
                                              std::span<const double> p_grid, std::size_t bins, std::uint64_t seed,
                                              std::size_t n_seeds) {
  if (n_seeds < 1) throw DomainError("need at least one seed");
  if (width < 1 || depth < 1) throw DomainError("ffnn chain needs width >= 1 and depth >= 1");
  const double w = omega(spec);
  const auto range = default_range(spec);
  std::vector<SpreadSweepRow> rows;
  std::vector<double> sigmas;
  for (double p : p_grid) {
    if (!(p >= 0.0 && p <= 0.49)) throw DomainError("sweep p must lie in [0, 0.49]");
    rows.push_back({p, sigma_star(p, depth, w), 0.0, {}});
    sigmas.push_back(rows.back().sigma_star);
  }
  for (std::size_t s = 0; s < n_seeds; ++s) {
    const std::uint64_t run_seed = Rng::substream(seed, {0x5eedULL, s})();
    const auto last = shared_noise_chains(spec, sigmas, w, run_seed, width, depth, 0.1);
    for (std::size_t c = 0; c < rows.size(); ++c) rows[c].spreads.push_back(spread_metric(last[c], bins, range));
  }
  for (auto& row : rows) {
    double sum = 0.0;
    for (double v : row.spreads) sum += v;
    row.spread = sum / static_cast<double>(n_seeds);
  }
  return rows;
}

} // namespace oswi
