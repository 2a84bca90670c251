#include "oswi/activations.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "oswi/error.hpp"

namespace oswi {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoOverSqrtPi = std::numbers::inv_sqrtpi * 2.0;

// softsign_k(x) = x / (1 + |x|^k)^(1/k). For |x| > 1 the equivalent form
// sign(x) / (1 + |x|^-k)^(1/k) avoids overflow of |x|^k.
double softsign_eval(double k, double x) {
  if (x == 0.0) return 0.0;
  const double ax = std::abs(x);
  double mag;
  if (ax <= 1.0) {
    const double pk = std::exp(k * std::log(ax));
    mag = ax * std::exp(-std::log1p(pk) / k);
  } else {
    const double nk = std::exp(-k * std::log(ax));
    mag = std::exp(-std::log1p(nk) / k);
  }
  return std::copysign(mag, x);
}

// d/dx softsign_k(x) = (1 + |x|^k)^(-1/k - 1).
double softsign_deriv(double k, double x) {
  if (x == 0.0) return 1.0;
  const double ax = std::abs(x);
  const double lnx = std::log(ax);
  double log1p_pk;
  if (ax <= 1.0) {
    log1p_pk = std::log1p(std::exp(k * lnx));
  } else {
    log1p_pk = k * lnx + std::log1p(std::exp(-k * lnx));
  }
  return std::exp(-(1.0 / k + 1.0) * log1p_pk);
}

double base_eval(const ActivationSpec& spec, double u) {
  switch (spec.kind()) {
  case ActivationKind::Tanh: return std::tanh(u);
  case ActivationKind::Erf: return std::erf(u);
  case ActivationKind::Arctan: return std::atan(u);
  case ActivationKind::ArctanNormalized: return (2.0 / kPi) * std::atan(u);
  case ActivationKind::Gd: return 2.0 * std::atan(std::tanh(0.5 * u));
  case ActivationKind::SoftsignK: return softsign_eval(spec.softsign_k(), u);
  case ActivationKind::Softsign1Plus3: return softsign_eval(1.0, u) + softsign_eval(3.0, u);
  case ActivationKind::Combination: {
    double s = 0.0;
    for (const auto& t : spec.terms()) s += t.coefficient * eval(*t.spec, u);
    return s;
  }
  }
  return 0.0;
}

double base_deriv(const ActivationSpec& spec, double u) {
  switch (spec.kind()) {
  case ActivationKind::Tanh: {
    const double c = std::cosh(u);
    return 1.0 / (c * c);
  }
  case ActivationKind::Erf: return kTwoOverSqrtPi * std::exp(-u * u);
  case ActivationKind::Arctan: return 1.0 / (1.0 + u * u);
  case ActivationKind::ArctanNormalized: return (2.0 / kPi) / (1.0 + u * u);
  case ActivationKind::Gd: return 1.0 / std::cosh(u);
  case ActivationKind::SoftsignK: return softsign_deriv(spec.softsign_k(), u);
  case ActivationKind::Softsign1Plus3: return softsign_deriv(1.0, u) + softsign_deriv(3.0, u);
  case ActivationKind::Combination: {
    double s = 0.0;
    for (const auto& t : spec.terms()) s += t.coefficient * deriv(*t.spec, u);
    return s;
  }
  }
  return 0.0;
}

// f'(0) of the unscaled base function.
double base_slope_at_zero(const ActivationSpec& spec) {
  switch (spec.kind()) {
  case ActivationKind::Tanh: return 1.0;
  case ActivationKind::Erf: return kTwoOverSqrtPi;
  case ActivationKind::Arctan: return 1.0;
  case ActivationKind::ArctanNormalized: return 2.0 / kPi;
  case ActivationKind::Gd: return 1.0;
  case ActivationKind::SoftsignK: return 1.0;
  case ActivationKind::Softsign1Plus3: return 2.0;
  case ActivationKind::Combination: {
    double s = 0.0;
    for (const auto& t : spec.terms()) s += t.coefficient / omega(*t.spec);
    return s;
  }
  }
  return 0.0;
}

} // namespace

ActivationSpec ActivationSpec::tanh() { return ActivationSpec(ActivationKind::Tanh); }
ActivationSpec ActivationSpec::erf() { return ActivationSpec(ActivationKind::Erf); }
ActivationSpec ActivationSpec::arctan() { return ActivationSpec(ActivationKind::Arctan); }
ActivationSpec ActivationSpec::arctan_normalized() { return ActivationSpec(ActivationKind::ArctanNormalized); }
ActivationSpec ActivationSpec::gd() { return ActivationSpec(ActivationKind::Gd); }
ActivationSpec ActivationSpec::softsign1_plus3() { return ActivationSpec(ActivationKind::Softsign1Plus3); }

ActivationSpec ActivationSpec::softsign(double k) {
  if (!(k >= 1.0) || !std::isfinite(k)) {
    throw DomainError("softsign requires a finite k >= 1");
  }
  ActivationSpec s(ActivationKind::SoftsignK);
  s.k_ = k;
  return s;
}

ActivationSpec ActivationSpec::combination(std::vector<std::pair<double, ActivationSpec>> terms) {
  if (terms.empty()) throw DomainError("combination needs at least one term");
  bool any_positive = false;
  ActivationSpec s(ActivationKind::Combination);
  for (auto& [c, spec] : terms) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw DomainError("combination coefficients must be finite and >= 0");
    any_positive = any_positive || c > 0.0;
    s.terms_.push_back({c, std::make_shared<const ActivationSpec>(std::move(spec))});
  }
  if (!any_positive) throw DomainError("combination needs at least one positive coefficient");
  return s;
}

ActivationSpec ActivationSpec::scaled(double alpha) const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("input scale must be finite and > 0");
  ActivationSpec s = *this;
  s.scale_ *= alpha;
  return s;
}

double eval(const ActivationSpec& spec, double x) { return base_eval(spec, spec.input_scale() * x); }

double deriv(const ActivationSpec& spec, double x) {
  const double a = spec.input_scale();
  return a * base_deriv(spec, a * x);
}

double omega(const ActivationSpec& spec) { return 1.0 / (spec.input_scale() * base_slope_at_zero(spec)); }

double supremum_bound(const ActivationSpec& spec) {
  switch (spec.kind()) {
  case ActivationKind::Tanh:
  case ActivationKind::Erf:
  case ActivationKind::ArctanNormalized:
  case ActivationKind::SoftsignK: return 1.0;
  case ActivationKind::Arctan:
  case ActivationKind::Gd: return kPi / 2.0;
  case ActivationKind::Softsign1Plus3: return 2.0;
  case ActivationKind::Combination: {
    double s = 0.0;
    for (const auto& t : spec.terms()) s += t.coefficient * supremum_bound(*t.spec);
    return s;
  }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Text form.

namespace {

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

class Parser {
public:
  explicit Parser(std::string_view text) : text_(text) {}

  ActivationSpec parse_all() {
    ActivationSpec s = parse_spec();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return s;
  }

private:
  [[noreturn]] void fail(const std::string& what) const {
    std::ostringstream os;
    os << "bad activation '" << text_ << "' at offset " << pos_ << ": " << what;
    throw ParseError(os.str());
  }

  bool consume(std::string_view token) {
    if (text_.substr(pos_, token.size()) == token) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (pos_ >= text_.size() || text_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  double parse_number() {
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || !std::isfinite(v)) fail("expected a number");
    pos_ += static_cast<std::size_t>(ptr - first);
    return v;
  }

  ActivationSpec parse_spec() {
    if (consume("(")) {
      ActivationSpec s = parse_spec();
      expect(')');
      return s;
    }
    if (consume("scale:")) {
      const double alpha = parse_number();
      expect(':');
      return parse_spec().scaled(alpha);
    }
    if (consume("sum:")) {
      std::vector<std::pair<double, ActivationSpec>> terms;
      do {
        const double c = parse_number();
        expect('*');
        terms.emplace_back(c, parse_spec());
      } while (consume("+"));
      return ActivationSpec::combination(std::move(terms));
    }
    if (consume("softsign1p3")) return ActivationSpec::softsign1_plus3();
    if (consume("softsign:")) return ActivationSpec::softsign(parse_number());
    if (consume("tanh")) return ActivationSpec::tanh();
    if (consume("erf")) return ActivationSpec::erf();
    if (consume("arctann")) return ActivationSpec::arctan_normalized();
    if (consume("arctan")) return ActivationSpec::arctan();
    if (consume("gd")) return ActivationSpec::gd();
    fail("unknown activation");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

} // namespace

ActivationSpec parse_activation(std::string_view text) {
  try {
    return Parser(text).parse_all();
  } catch (const ParseError&) {
    throw;
  } catch (const DomainError& e) {
    throw ParseError(std::string("bad activation '") + std::string(text) + "': " + e.what());
  }
}

std::string to_string(const ActivationSpec& spec) {
  std::string base;
  switch (spec.kind()) {
  case ActivationKind::Tanh: base = "tanh"; break;
  case ActivationKind::Erf: base = "erf"; break;
  case ActivationKind::Arctan: base = "arctan"; break;
  case ActivationKind::ArctanNormalized: base = "arctann"; break;
  case ActivationKind::Gd: base = "gd"; break;
  case ActivationKind::SoftsignK: base = "softsign:" + format_number(spec.softsign_k()); break;
  case ActivationKind::Softsign1Plus3: base = "softsign1p3"; break;
  case ActivationKind::Combination: {
    base = "sum:";
    bool first = true;
    for (const auto& t : spec.terms()) {
      if (!first) base += "+";
      first = false;
      std::string inner = to_string(*t.spec);
      if (t.spec->kind() == ActivationKind::Combination || inner.find("sum:") != std::string::npos) {
        inner = "(" + inner + ")";
      }
      base += format_number(t.coefficient) + "*" + inner;
    }
    break;
  }
  }
  if (spec.input_scale() != 1.0) {
    if (spec.kind() == ActivationKind::Combination) base = "(" + base + ")";
    return "scale:" + format_number(spec.input_scale()) + ":" + base;
  }
  return base;
}

// ---------------------------------------------------------------------------
// Class check.

std::vector<double> SamplingGrid::nonnegative_points() const {
  if (points < 2) throw InvalidGrid("sampling grid needs at least 2 points");
  if (!(x_max > 0.0) || !std::isfinite(x_max)) throw InvalidGrid("sampling grid needs a finite x_max > 0");
  std::vector<double> xs(points);
  for (std::size_t i = 0; i < points; ++i) {
    xs[i] = x_max * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return xs;
}

namespace {

constexpr double kOddTolerance = 1e-12;
constexpr double kTieTolerance = 1e-14;

template <typename F, typename DF>
ClassReport run_check(const F& f, const DF& df, const std::vector<double>& xs) {
  if (xs.size() < 2) throw InvalidGrid("sampling grid needs at least 2 points");
  if (xs.front() < 0.0) throw InvalidGrid("sampling grid must start at a nonnegative point");
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] > xs[i - 1])) throw InvalidGrid("sampling grid must be strictly increasing");
  }

  ClassReport r;

  r.odd_symmetric = true;
  double sup = 0.0;
  for (double x : xs) {
    const double fp = f(x);
    const double fm = f(-x);
    const double res = std::abs(fp + fm);
    if (!(res <= kOddTolerance)) r.odd_symmetric = false;
    r.max_odd_residual = std::max(r.max_odd_residual, std::isfinite(res) ? res : HUGE_VAL);
    sup = std::max({sup, std::abs(fp), std::abs(fm)});
  }

  // Boundedness: |f| along x = 10^k must settle.
  double prev = 0.0;
  double last_increment = HUGE_VAL;
  for (int k = 0; k <= 12; ++k) {
    const double v = std::abs(f(std::pow(10.0, k)));
    sup = std::max(sup, v);
    if (k > 0) last_increment = std::abs(v - prev);
    prev = v;
  }
  r.sup_estimate = sup;
  r.bounded = std::isfinite(sup) && last_increment <= 1e-6 * std::max(1.0, sup);

  // f' > 0 on both sides; an exact zero is tolerated only once the slope has
  // already decayed below the tie tolerance (underflow in saturated tails).
  r.strictly_increasing = true;
  for (double side : {1.0, -1.0}) {
    bool in_tail = false;
    for (double x : xs) {
      const double d = df(side * x);
      if (!(d >= 0.0) || (d == 0.0 && !in_tail)) {
        r.strictly_increasing = false;
        break;
      }
      if (d <= kTieTolerance) in_tail = true;
    }
  }

  // f' strictly decreasing on [0, x_max]: no increase beyond the tie
  // tolerance and a net decrease across the grid.
  r.slope_decreasing = true;
  double d_prev = df(xs.front());
  const double d_first = d_prev;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const double d = df(xs[i]);
    if (!(d - d_prev <= kTieTolerance)) {
      r.slope_decreasing = false;
      break;
    }
    d_prev = d;
  }
  r.slope_at_x_max = df(xs.back());
  if (!(r.slope_at_x_max < d_first)) r.slope_decreasing = false;
  r.slope_vanishes = std::abs(r.slope_at_x_max) <= 1e-2 * std::abs(d_first);
  return r;
}

} // namespace

ClassReport check_odd_sigmoid(const ActivationSpec& spec, const SamplingGrid& grid) {
  return check_odd_sigmoid(spec, grid.nonnegative_points());
}

ClassReport check_odd_sigmoid(const ActivationSpec& spec, const std::vector<double>& nonnegative_points) {
  return run_check([&](double x) { return eval(spec, x); }, [&](double x) { return deriv(spec, x); },
                   nonnegative_points);
}

#if defined(OSWI_TESTING_HOOKS)
namespace testing {
ClassReport check_odd_sigmoid_raw(const ScalarFn& f, const ScalarFn& df, const SamplingGrid& grid) {
  return run_check(f, df, grid.nonnegative_points());
}
ClassReport check_odd_sigmoid_raw(const ScalarFn& f, const ScalarFn& df, const std::vector<double>& grid) {
  return run_check(f, df, grid);
}
} // namespace testing
#endif

} // namespace oswi
