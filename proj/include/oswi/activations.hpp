#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace oswi {

/// Catalog of odd-sigmoid activations: odd, bounded, strictly increasing,
/// with a derivative that strictly decreases on [0, inf).
enum class ActivationKind {
  Tanh,
  Erf,
  Arctan,           // raw arctan, sup = pi/2
  ArctanNormalized, // (2/pi) arctan
  Gd,               // Gudermannian 2 atan(tanh(x/2))
  SoftsignK,        // x / (1 + |x|^k)^(1/k), k >= 1
  Softsign1Plus3,   // softsign_1 + softsign_3
  Combination,      // sum of c_j f_j with c_j >= 0
};

class ActivationSpec;

struct ActivationTerm {
  double coefficient;
  std::shared_ptr<const ActivationSpec> spec;
};

/// Immutable description of f(alpha * x). Construct through the named
/// factories; every constructible spec is a member of the odd-sigmoid class.
class ActivationSpec {
public:
  static ActivationSpec tanh();
  static ActivationSpec erf();
  static ActivationSpec arctan();
  static ActivationSpec arctan_normalized();
  static ActivationSpec gd();
  static ActivationSpec softsign(double k);
  static ActivationSpec softsign1_plus3();
  /// Nonnegative combination; throws DomainError on negative or all-zero coefficients.
  static ActivationSpec combination(std::vector<std::pair<double, ActivationSpec>> terms);

  /// Copy with input scale multiplied by alpha (> 0).
  [[nodiscard]] ActivationSpec scaled(double alpha) const;

  [[nodiscard]] ActivationKind kind() const noexcept { return kind_; }
  [[nodiscard]] double input_scale() const noexcept { return scale_; }
  [[nodiscard]] double softsign_k() const noexcept { return k_; }
  [[nodiscard]] const std::vector<ActivationTerm>& terms() const noexcept { return terms_; }

private:
  explicit ActivationSpec(ActivationKind kind) : kind_(kind) {}

  ActivationKind kind_;
  double scale_ = 1.0;
  double k_ = 0.0;
  std::vector<ActivationTerm> terms_;
};

/// f(alpha x).
double eval(const ActivationSpec& spec, double x);
/// d/dx f(alpha x) = alpha f'(alpha x).
double deriv(const ActivationSpec& spec, double x);
/// 1 / f'(0). For combinations this is computed through the harmonic rule
/// 1/omega = alpha * sum_j c_j / omega_j.
double omega(const ActivationSpec& spec);
/// Analytic sup |f|.
double supremum_bound(const ActivationSpec& spec);

/// Parses the CLI grammar:
///   tanh | erf | arctan | arctann | gd | softsign:<k> | softsign1p3
///   scale:<alpha>:<spec> | sum:<c1>*<spec1>+<c2>*<spec2>+... | (<spec>)
/// A nested sum inside a sum term must be parenthesised.
ActivationSpec parse_activation(std::string_view text);
/// Inverse of parse_activation (round-trips up to floating-point formatting).
std::string to_string(const ActivationSpec& spec);

// ---------------------------------------------------------------------------
// Numerical class-membership check.

struct SamplingGrid {
  double x_max = 50.0;
  std::size_t points = 2001; // on [0, x_max], mirrored to the negatives

  [[nodiscard]] std::vector<double> nonnegative_points() const;
};

struct ClassReport {
  bool odd_symmetric = false;     // |f(-x) + f(x)| <= 1e-12
  bool bounded = false;           // |f| converges along x = 10^k
  bool strictly_increasing = false; // f' > 0 (exact zeros only in an underflowed tail)
  bool slope_decreasing = false;  // f' strictly decreasing on the nonnegative grid
  bool slope_vanishes = false;    // f'(x_max) <= 1e-2 f'(0)
  double max_odd_residual = 0.0;
  double sup_estimate = 0.0;
  double slope_at_x_max = 0.0;

  [[nodiscard]] bool all_pass() const noexcept {
    return odd_symmetric && bounded && strictly_increasing && slope_decreasing && slope_vanishes;
  }
};

/// Falsifier, not a proof. Throws InvalidGrid for fewer than 2 points or a
/// non-positive range.
ClassReport check_odd_sigmoid(const ActivationSpec& spec, const SamplingGrid& grid = {});
/// Same check on explicit nonnegative sample points (must be strictly increasing).
ClassReport check_odd_sigmoid(const ActivationSpec& spec, const std::vector<double>& nonnegative_points);

#if defined(OSWI_TESTING_HOOKS)
namespace testing {
using ScalarFn = std::function<double(double)>;
/// Runs the checker on arbitrary (f, f') so tests can exercise failure paths
/// with functions outside the catalog.
ClassReport check_odd_sigmoid_raw(const ScalarFn& f, const ScalarFn& df, const SamplingGrid& grid = {});
/// Same checker on an explicit (possibly non-monotone) grid.
ClassReport check_odd_sigmoid_raw(const ScalarFn& f, const ScalarFn& df, const std::vector<double>& grid);
} // namespace testing
#endif

} // namespace oswi
