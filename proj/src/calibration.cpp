#include "oswi/calibration.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/special_functions/erf.hpp>

#include "oswi/error.hpp"

namespace oswi {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
} // namespace

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double std_normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double std_normal_quantile(double q) {
  if (!(q > 0.0 && q < 1.0)) {
    throw DomainError("normal quantile needs 0 < q < 1, got " + std::to_string(q));
  }
  if (q == 0.5) return 0.0;
  // Work in the lower tail where q carries full relative precision.
  const bool upper = q > 0.5;
  const double t = upper ? 1.0 - q : q;
  double x = -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * t);
  // One Newton polish against our own CDF.
  const double pdf = std_normal_pdf(x);
  if (pdf > 0.0) x -= (std_normal_cdf(x) - t) / pdf;
  return upper ? -x : x;
}

double flip_probability(double sigma, double omega) {
  if (sigma < 0.0) throw DomainError("sigma must be >= 0");
  if (sigma == 0.0) return 0.0;
  return std_normal_cdf(-omega / sigma);
}

double negative_rate(double sigma, std::uint64_t depth, double omega) {
  if (!(omega > 0.0)) throw DomainError("omega must be > 0");
  const double p_flip = flip_probability(sigma, omega);
  if (p_flip == 0.0) return 0.0;
  // (1 - (1 - 2p)^L)/2 = -expm1(L log1p(-2p))/2
  return -0.5 * std::expm1(static_cast<double>(depth) * std::log1p(-2.0 * p_flip));
}

double sigma_star(double p, std::uint64_t depth, double omega) {
  if (!(p >= 0.0 && p < 0.5)) throw DomainError("p must be in [0, 0.5)");
  if (depth == 0) throw DomainError("depth must be >= 1");
  if (!(omega > 0.0) || !std::isfinite(omega)) throw DomainError("omega must be finite and > 0");
  if (p == 0.0) return 0.0;
  // q = (1 - (1-2p)^(1/L)) / 2 without cancellation at large L.
  const double q = -0.5 * std::expm1(std::log1p(-2.0 * p) / static_cast<double>(depth));
  return -omega / std_normal_quantile(q);
}

LearningRateBand lr_band(double omega) {
  if (!(omega > 0.0)) throw DomainError("omega must be > 0");
  return {1e-5 * omega, 1e-3 * omega};
}

CalibrationResult calibrate(double p, std::uint64_t depth, double omega) {
  return {p, depth, omega, sigma_star(p, depth, omega), lr_band(omega)};
}

} // namespace oswi
