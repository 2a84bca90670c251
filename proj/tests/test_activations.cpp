#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "oswi/activations.hpp"
#include "oswi/error.hpp"
#include "oswi/rng.hpp"

using namespace oswi;

namespace {

std::vector<std::string> catalog() {
  return {"tanh", "erf", "arctan", "arctann", "gd", "softsign:1", "softsign:2", "softsign:3", "softsign1p3"};
}

// Composite Simpson rule for the integral of sech on [0, x].
double gd_by_quadrature(double x) {
  const int n = 20000;
  const double h = x / n;
  double s = 1.0 + 1.0 / std::cosh(x);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) / std::cosh(i * h);
  return s * h / 3.0;
}

double central_difference(const ActivationSpec& spec, double x, double h) {
  return (eval(spec, x + h) - eval(spec, x - h)) / (2.0 * h);
}

} // namespace

TEST_CASE("catalog values at reference points") {
  CHECK(eval(ActivationSpec::tanh(), 0.0) == 0.0);
  CHECK(eval(ActivationSpec::softsign(2.0), 1.0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(eval(ActivationSpec::gd(), 1.0) == doctest::Approx(2.0 * std::atan(std::tanh(0.5))).epsilon(1e-15));
  CHECK(std::abs(eval(ActivationSpec::gd(), 1.0) - gd_by_quadrature(1.0)) < 1e-13);
  CHECK(std::abs(eval(ActivationSpec::gd(), 4.0) - gd_by_quadrature(4.0)) < 1e-12);
  CHECK(eval(ActivationSpec::arctan_normalized(), 1e300) == doctest::Approx(1.0));
}

TEST_CASE("derivatives at reference points") {
  CHECK(deriv(ActivationSpec::tanh(), 0.0) == 1.0);
  CHECK(deriv(ActivationSpec::erf(), 0.0) == doctest::Approx(2.0 / std::sqrt(std::numbers::pi)).epsilon(1e-15));
  const auto t3 = ActivationSpec::tanh().scaled(3.0);
  const double exact = 3.0 / std::pow(std::cosh(0.6), 2);
  CHECK(deriv(t3, 0.2) == doctest::Approx(exact).epsilon(1e-14));
  CHECK(central_difference(t3, 0.2, 1e-6) == doctest::Approx(deriv(t3, 0.2)).epsilon(1e-8));
  CHECK(deriv(ActivationSpec::softsign(3.0), 0.0) == 1.0);
}

TEST_CASE("omega of catalog members and combinations") {
  CHECK(omega(ActivationSpec::tanh()) == 1.0);
  CHECK(omega(ActivationSpec::erf()) == doctest::Approx(std::sqrt(std::numbers::pi) / 2.0).epsilon(1e-15));
  CHECK(omega(ActivationSpec::arctan_normalized()) == doctest::Approx(std::numbers::pi / 2.0).epsilon(1e-15));
  CHECK(omega(ActivationSpec::gd()) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(omega(parse_activation("sum:1*softsign:1+1*softsign:2")) == doctest::Approx(0.5).epsilon(1e-15));
  const auto eq = parse_activation("sum:1*scale:3:tanh+1*scale:4:erf+1*scale:2:softsign:1+1*scale:0.1:gd");
  const double expected = 1.0 / (3.0 + 2.0 / std::sqrt(std::numbers::pi) * 4.0 + 2.0 + 0.1);
  CHECK(std::abs(omega(eq) - expected) <= 1e-12 * expected);
}

TEST_CASE("omega of a combination equals the reciprocal of the weighted slopes") {
  Rng rng(11);
  const auto names = catalog();
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::pair<double, ActivationSpec>> terms;
    double slope = 0.0;
    const auto count = 1 + rng.below(4);
    for (std::uint64_t t = 0; t < count; ++t) {
      const double c = rng.uniform(0.0, 3.0);
      const auto spec = parse_activation(names[rng.below(names.size())]).scaled(rng.uniform(0.05, 20.0));
      slope += c / omega(spec);
      terms.emplace_back(c, spec);
    }
    if (slope == 0.0) continue;
    const auto combo = ActivationSpec::combination(terms);
    CHECK(std::abs(omega(combo) - 1.0 / slope) <= 1e-12 * omega(combo));
  }
}

TEST_CASE("input scale divides omega") {
  for (const auto& name : catalog()) {
    const auto base = parse_activation(name);
    for (double alpha : {0.001, 0.01, 0.5, 3.0, 100.0, 1000.0}) {
      CHECK(std::abs(omega(base.scaled(alpha)) - omega(base) / alpha) <= 1e-12 * omega(base) / alpha);
    }
  }
}

TEST_CASE("odd symmetry holds for random arguments") {
  Rng rng(3);
  for (const auto& name : catalog()) {
    const auto spec = parse_activation(name);
    for (int i = 0; i < 2000; ++i) {
      const double x = rng.uniform(-30.0, 30.0);
      CHECK(std::abs(eval(spec, -x) + eval(spec, x)) <= 1e-14);
    }
  }
}

TEST_CASE("derivative matches central differences on [-10, 10]") {
  const double h = 1e-6;
  const double eps = std::numeric_limits<double>::epsilon();
  for (const auto& name : catalog()) {
    const auto spec = parse_activation(name);
    for (int i = 0; i <= 400; ++i) {
      const double x = -10.0 + 0.05 * i;
      const double d = deriv(spec, x);
      const double fd = central_difference(spec, x, h);
      // Where f' is tiny the difference quotient is dominated by rounding in
      // f(x+h) - f(x-h); allow that floor on top of the relative tolerance.
      const double floor = 4.0 * eps * supremum_bound(spec) / h;
      INFO(name << " x=" << x);
      CHECK(std::abs(fd - d) <= 1e-6 * std::abs(d) + floor);
    }
  }
}

TEST_CASE("supremum bounds") {
  CHECK(supremum_bound(ActivationSpec::tanh()) == 1.0);
  CHECK(supremum_bound(ActivationSpec::gd()) == doctest::Approx(std::numbers::pi / 2.0));
  const auto eq = parse_activation("sum:1*tanh+1*erf+1*softsign:1+1*gd");
  CHECK(supremum_bound(eq) == doctest::Approx(3.0 + std::numbers::pi / 2.0).epsilon(1e-15));
  CHECK(std::abs(eval(eq, 1e6) - supremum_bound(eq)) <= 1e-6);
}

TEST_CASE("catalog members are odd-sigmoids") {
  for (const auto& name : catalog()) {
    INFO(name);
    const auto r = check_odd_sigmoid(parse_activation(name));
    CHECK(r.odd_symmetric);
    CHECK(r.bounded);
    CHECK(r.strictly_increasing);
    CHECK(r.slope_decreasing);
    CHECK(r.all_pass());
  }
  CHECK(check_odd_sigmoid(parse_activation("sum:1*tanh+1*erf")).all_pass());
}

TEST_CASE("random nonnegative combinations stay in the class") {
  Rng rng(5);
  const auto names = catalog();
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<std::pair<double, ActivationSpec>> terms;
    const auto count = 2 + rng.below(3);
    for (std::uint64_t t = 0; t < count; ++t) {
      terms.emplace_back(rng.uniform(0.1, 3.0), parse_activation(names[rng.below(names.size())]).scaled(rng.uniform(0.2, 5.0)));
    }
    const auto combo = ActivationSpec::combination(terms);
    INFO(to_string(combo));
    CHECK(check_odd_sigmoid(combo).all_pass());
  }
}

TEST_CASE("checker rejects functions outside the class") {
  const auto relu = testing::check_odd_sigmoid_raw([](double x) { return x > 0.0 ? x : 0.0; },
                                                   [](double x) { return x > 0.0 ? 1.0 : 0.0; });
  CHECK_FALSE(relu.odd_symmetric);
  CHECK_FALSE(relu.slope_decreasing);
  CHECK_FALSE(relu.all_pass());

  const auto identity = testing::check_odd_sigmoid_raw([](double x) { return x; }, [](double) { return 1.0; });
  CHECK_FALSE(identity.bounded);

  // Odd and bounded but not monotone.
  const auto bump = testing::check_odd_sigmoid_raw([](double x) { return x / (1.0 + x * x); },
                                                   [](double x) { return (1.0 - x * x) / std::pow(1.0 + x * x, 2); });
  CHECK(bump.odd_symmetric);
  CHECK(bump.bounded);
  CHECK_FALSE(bump.strictly_increasing);

  const auto logistic = testing::check_odd_sigmoid_raw([](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                                                       [](double x) {
                                                         const double s = 1.0 / (1.0 + std::exp(-x));
                                                         return s * (1.0 - s);
                                                       });
  CHECK_FALSE(logistic.odd_symmetric);
}

TEST_CASE("invalid grids are rejected") {
  CHECK_THROWS_AS(check_odd_sigmoid(ActivationSpec::tanh(), std::vector<double>{0.0, 2.0, 1.0}), InvalidGrid);
  CHECK_THROWS_AS(check_odd_sigmoid(ActivationSpec::tanh(), std::vector<double>{0.0}), InvalidGrid);
  CHECK_THROWS_AS(check_odd_sigmoid(ActivationSpec::tanh(), SamplingGrid{-1.0, 100}), InvalidGrid);
}

TEST_CASE("spec text round trip") {
  for (const std::string text : {"tanh", "erf", "arctan", "arctann", "gd", "softsign:2", "softsign1p3",
                                 "scale:0.01:tanh", "sum:1*tanh+0.5*softsign:3",
                                 "sum:2*(sum:1*tanh+1*erf)+1*gd"}) {
    const auto spec = parse_activation(text);
    const auto again = parse_activation(to_string(spec));
    CHECK(to_string(again) == to_string(spec));
    for (double x : {-3.0, -0.2, 0.0, 0.7, 5.0}) CHECK(eval(again, x) == eval(spec, x));
  }
}

TEST_CASE("bad spec text and parameters") {
  for (const std::string text : {"", "relu", "tanhx", "softsign:0.5", "softsign:", "sum:-1*tanh", "sum:0*tanh",
                                 "scale:abc:tanh", "(tanh"}) {
    INFO(text);
    CHECK_THROWS_AS(parse_activation(text), ParseError);
  }
  CHECK_THROWS_AS(ActivationSpec::softsign(0.9), DomainError);
  CHECK_THROWS_AS(ActivationSpec::combination({{-1.0, ActivationSpec::tanh()}}), DomainError);
  CHECK_THROWS_AS(ActivationSpec::combination({{0.0, ActivationSpec::tanh()}}), DomainError);
}
