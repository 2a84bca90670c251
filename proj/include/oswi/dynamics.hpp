#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "oswi/activations.hpp"

namespace oswi {

enum class Regime { SubCritical, SuperCritical };

/// Nonnegative representative of the fixed points of x -> f(a x). The full
/// set is {-xi, 0, xi} when supercritical and {0} otherwise.
struct FixedPointSet {
  Regime regime = Regime::SubCritical;
  double xi = 0.0;
  double residual = 0.0; // |f(a xi) - xi|
};

/// Classifies a <= omega (relative tolerance 1e-12) as subcritical; otherwise
/// brackets and bisects g(x) = f(a x) - x on (0, sup|f|]. Throws
/// BracketFailure when no sign change can be found and DomainError for a <= 0.
FixedPointSet solve_xi(const ActivationSpec& spec, double a);

struct IterationTrace {
  double a = 0.0;
  double x0 = 0.0;
  std::vector<double> values; // x_0 .. x_n, values[k+1] = f(a values[k])
  [[nodiscard]] double converged_to() const { return values.back(); }
};

IterationTrace iterate(const ActivationSpec& spec, double a, double x0, std::size_t n);

/// phi_{a_m} o ... o phi_{a_1}(x0): gains are applied first-index-first.
double compose_varying(const ActivationSpec& spec, std::span<const double> gains, double x0);

struct FloorProbability {
  double empirical_prob = 0.0; // fraction of trials with Phi_m(x0) >= delta
  double bound = 0.0;          // (1 - Phi((alpha - omega)/sigma))^r
  std::uint64_t r = 0;         // smallest r with Phi^alpha_r(x0) >= delta
  std::uint64_t trials = 0;
  std::uint64_t m = 0;

  /// Binomial standard error of empirical_prob.
  [[nodiscard]] double standard_error() const;
};

struct FloorConfig {
  double sigma = 0.5;
  std::uint64_t m = 50;
  double x0 = 0.1;
  double delta = 0.3;
  double alpha = 1.2;
  std::uint64_t trials = 10000;
  std::uint64_t seed = 0;
};

/// Monte-Carlo check of the stochastic-gain floor: gains i.i.d. N(omega, sigma^2).
/// Trial t draws its gains from Rng::substream(seed, t). Throws DomainError
/// when the preconditions (omega < alpha, 0 < x0 < delta < xi_alpha,
/// trials >= 1000) fail and NoSuchR when r exceeds 10^6.
FloorProbability stochastic_floor_probability(const ActivationSpec& spec, const FloorConfig& cfg);

struct BifurcationRow {
  double a;
  double x0;
  double final_value;
  double xi;
};

/// For each (a, x0) pair: iterate n steps and report the positive fixed point.
std::vector<BifurcationRow> bifurcation_scan(const ActivationSpec& spec, std::span<const double> a_values,
                                             std::span<const double> x0_values, std::size_t n);

} // namespace oswi
