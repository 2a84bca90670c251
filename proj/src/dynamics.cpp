#include "oswi/dynamics.hpp"

#include <cmath>
#include <string>

#include "oswi/calibration.hpp"
#include "oswi/error.hpp"
#include "oswi/rng.hpp"

namespace oswi {

namespace {
constexpr double kBoundaryTolerance = 1e-12;
constexpr double kBracketWidth = 1e-14;
constexpr int kMaxBisections = 200;
constexpr std::uint64_t kMaxFloorSteps = 1'000'000;
} // namespace

FixedPointSet solve_xi(const ActivationSpec& spec, double a) {
  if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("gain a must be finite and > 0");
  const double w = omega(spec);
  if (a <= w * (1.0 + kBoundaryTolerance)) return {Regime::SubCritical, 0.0, 0.0};

  auto g = [&](double x) { return eval(spec, a * x) - x; };

  double hi = supremum_bound(spec);
  double g_hi = g(hi);
  if (g_hi > 0.0) throw BracketFailure("f(a sup) exceeds sup; activation is not bounded by its catalog sup");
  if (g_hi == 0.0) return {Regime::SuperCritical, hi, 0.0};

  // g > 0 just right of 0 when a > omega; shrink until we see it.
  double lo = 0.5 * hi;
  int shrink = 0;
  while (!(g(lo) > 0.0)) {
    lo *= 0.5;
    if (++shrink > 1100 || lo == 0.0) {
      throw BracketFailure("no sign change of f(a x) - x near 0 (a too close to omega?)");
    }
  }

  for (int it = 0; it < kMaxBisections && hi - lo > kBracketWidth; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (g(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double r_lo = std::abs(g(lo));
  const double r_hi = std::abs(g(hi));
  const double xi = r_lo <= r_hi ? lo : hi;
  const double residual = std::min(r_lo, r_hi);
  if (residual > 1e-12) throw BracketFailure("bisection did not reach residual 1e-12");
  return {Regime::SuperCritical, xi, residual};
}

IterationTrace iterate(const ActivationSpec& spec, double a, double x0, std::size_t n) {
  if (n < 1) throw DomainError("iterate needs n >= 1");
  IterationTrace t{a, x0, {}};
  t.values.reserve(n + 1);
  t.values.push_back(x0);
  double x = x0;
  for (std::size_t k = 0; k < n; ++k) {
    x = eval(spec, a * x);
    t.values.push_back(x);
  }
  return t;
}

double compose_varying(const ActivationSpec& spec, std::span<const double> gains, double x0) {
  if (gains.empty()) throw DomainError("compose_varying needs at least one gain");
  double x = x0;
  for (double a : gains) x = eval(spec, a * x);
  return x;
}

double FloorProbability::standard_error() const {
  if (trials == 0) return 0.0;
  return std::sqrt(empirical_prob * (1.0 - empirical_prob) / static_cast<double>(trials));
}

FloorProbability stochastic_floor_probability(const ActivationSpec& spec, const FloorConfig& cfg) {
  const double w = omega(spec);
  if (!(cfg.sigma > 0.0)) throw DomainError("sigma must be > 0");
  if (!(cfg.alpha > w)) throw DomainError("alpha must exceed omega");
  if (cfg.trials < 1000) throw DomainError("need at least 1000 trials");
  if (cfg.m < 1) throw DomainError("m must be >= 1");
  const FixedPointSet fp = solve_xi(spec, cfg.alpha);
  if (!(cfg.x0 > 0.0 && cfg.x0 < cfg.delta && cfg.delta < fp.xi)) {
    throw DomainError("need 0 < x0 < delta < xi_alpha = " + std::to_string(fp.xi));
  }

  FloorProbability out;
  out.trials = cfg.trials;
  out.m = cfg.m;

  double x = cfg.x0;
  std::uint64_t r = 0;
  while (x < cfg.delta) {
    if (++r > kMaxFloorSteps) throw NoSuchR("deterministic iteration did not reach delta in 1e6 steps");
    x = eval(spec, cfg.alpha * x);
  }
  out.r = r;
  out.bound = std::pow(1.0 - std_normal_cdf((cfg.alpha - w) / cfg.sigma), static_cast<double>(r));

  std::uint64_t hits = 0;
  for (std::uint64_t t = 0; t < cfg.trials; ++t) {
    Rng rng = Rng::substream(cfg.seed, t);
    double v = cfg.x0;
    for (std::uint64_t j = 0; j < cfg.m; ++j) v = eval(spec, rng.normal(w, cfg.sigma) * v);
    if (v >= cfg.delta) ++hits;
  }
  out.empirical_prob = static_cast<double>(hits) / static_cast<double>(cfg.trials);
  return out;
}

std::vector<BifurcationRow> bifurcation_scan(const ActivationSpec& spec, std::span<const double> a_values,
                                             std::span<const double> x0_values, std::size_t n) {
  std::vector<BifurcationRow> rows;
  rows.reserve(a_values.size() * x0_values.size());
  for (double a : a_values) {
    if (!(a > 0.0)) throw DomainError("bifurcation gains must be > 0");
    const double xi = solve_xi(spec, a).xi;
    for (double x0 : x0_values) {
      rows.push_back({a, x0, iterate(spec, a, x0, n).converged_to(), xi});
    }
  }
  return rows;
}

} // namespace oswi
