#pragma once

#include <cstdint>

namespace oswi {

// Special functions -----------------------------------------------------------

/// Standard normal CDF, computed as erfc(-x/sqrt 2)/2 so the left tail keeps
/// full relative precision (no underflow to 0 before |x| ~ 37).
double std_normal_cdf(double x);
/// Standard normal density.
double std_normal_pdf(double x);
/// Inverse of std_normal_cdf; throws DomainError unless 0 < q < 1.
double std_normal_quantile(double q);

// Negative-rate calibration ----------------------------------------------------

/// Probability that one gain A ~ N(omega, sigma^2) is negative: Phi(-omega/sigma).
double flip_probability(double sigma, double omega);

/// Negative rate of the scalar chain X_j = f(A_j X_{j-1}) with X_0 > 0:
///   pi_depth = (1 - (1 - 2 p_-)^depth) / 2.
double negative_rate(double sigma, std::uint64_t depth, double omega);

/// Unique sigma >= 0 with negative_rate(sigma, depth, omega) == p:
///   sigma* = -omega / Phi^-1((1 - (1 - 2p)^(1/depth)) / 2).
/// Throws DomainError for p outside [0, 1/2), depth == 0 or omega <= 0.
double sigma_star(double p, std::uint64_t depth, double omega);

struct LearningRateBand {
  double low;
  double high;
};

/// Adam learning-rate band [1e-5 omega, 1e-3 omega].
LearningRateBand lr_band(double omega);

struct CalibrationResult {
  double p_target;
  std::uint64_t depth;
  double omega;
  double sigma_star;
  LearningRateBand lr;
};

CalibrationResult calibrate(double p, std::uint64_t depth, double omega);

} // namespace oswi
