#include <doctest.h>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "oswi/activations.hpp"
#include "oswi/dynamics.hpp"
#include "oswi/error.hpp"
#include "oswi/rng.hpp"

using namespace oswi;

namespace {

std::vector<std::string> catalog() {
  return {"tanh", "erf", "arctan", "arctann", "gd", "softsign:1", "softsign:2", "softsign:3", "softsign1p3"};
}

// Last sign change of g(x) = f(a x) - x on a uniform grid over (0, sup].
double xi_by_scan(const ActivationSpec& spec, double a, int points) {
  const double sup = supremum_bound(spec);
  double prev_x = sup / points;
  double prev_g = eval(spec, a * prev_x) - prev_x;
  for (int i = 2; i <= points; ++i) {
    const double x = sup * i / points;
    const double g = eval(spec, a * x) - x;
    if (prev_g > 0.0 && g <= 0.0) return prev_x + (x - prev_x) * prev_g / (prev_g - g);
    prev_x = x;
    prev_g = g;
  }
  return std::nan("");
}

} // namespace

TEST_CASE("solve_xi regimes") {
  const auto t = ActivationSpec::tanh();
  auto sub = solve_xi(t, 0.9);
  CHECK(sub.regime == Regime::SubCritical);
  CHECK(sub.xi == 0.0);
  const auto e = ActivationSpec::erf();
  CHECK(solve_xi(e, omega(e)).regime == Regime::SubCritical);
  CHECK(solve_xi(e, omega(e)).xi == 0.0);
  CHECK_THROWS_AS(solve_xi(t, 0.0), DomainError);
  CHECK_THROWS_AS(solve_xi(t, -1.0), DomainError);
}

TEST_CASE("solve_xi against a dense scan") {
  const auto t = ActivationSpec::tanh();
  const auto fp = solve_xi(t, 1.3);
  CHECK(fp.regime == Regime::SuperCritical);
  CHECK(fp.residual <= 1e-12);
  CHECK(std::abs(fp.xi - xi_by_scan(t, 1.3, 1000000)) <= 1e-9);
  for (const auto& name : catalog()) {
    const auto spec = parse_activation(name);
    for (double ratio : {1.05, 1.3, 2.0, 10.0}) {
      const double a = ratio * omega(spec);
      const auto s = solve_xi(spec, a);
      INFO(name << " a=" << a);
      CHECK(s.regime == Regime::SuperCritical);
      CHECK(s.residual <= 1e-12);
      CHECK(std::abs(s.xi - xi_by_scan(spec, a, 200000)) <= 1e-6 * supremum_bound(spec));
    }
  }
}

TEST_CASE("iteration converges to the fixed point above omega and to zero below") {
  const auto t = ActivationSpec::tanh();
  const auto trace = iterate(t, 1.3, 0.1, 50);
  CHECK(trace.values.size() == 51);
  CHECK(trace.values.front() == 0.1);
  CHECK(std::abs(trace.converged_to() - solve_xi(t, 1.3).xi) <= 1e-6);
  for (const auto& name : catalog()) {
    const auto spec = parse_activation(name);
    for (double ratio : {0.9, 1.0}) {
      const auto tr = iterate(spec, ratio * omega(spec), 0.1, 500);
      INFO(name << " ratio=" << ratio);
      if (ratio < 1.0) CHECK(std::abs(tr.converged_to()) < 1e-3);
      for (std::size_t k = 1; k < tr.values.size(); ++k) CHECK(std::abs(tr.values[k]) <= std::abs(tr.values[k - 1]));
    }
  }
  const auto zero = iterate(t, 1.3, 0.0, 20);
  for (double v : zero.values) CHECK(v == 0.0);
  CHECK_THROWS_AS(iterate(t, 1.3, 0.1, 0), DomainError);
}

TEST_CASE("iteration is monotone on either side of the fixed point") {
  for (const auto& name : catalog()) {
    const auto spec = parse_activation(name);
    const double a = 1.5 * omega(spec);
    const double xi = solve_xi(spec, a).xi;
    const auto up = iterate(spec, a, 0.2 * xi, 200);
    const auto down = iterate(spec, a, 0.5 * (xi + supremum_bound(spec)), 200);
    INFO(name);
    for (std::size_t k = 1; k < up.values.size(); ++k) {
      if (xi - up.values[k - 1] > 1e-12) CHECK(up.values[k] > up.values[k - 1]);
      CHECK(up.values[k] <= xi * (1.0 + 1e-12));
      if (down.values[k - 1] - xi > 1e-12) CHECK(down.values[k] < down.values[k - 1]);
      CHECK(down.values[k] >= xi * (1.0 - 1e-12));
    }
  }
}

TEST_CASE("composition with varying gains") {
  const auto t = ActivationSpec::tanh();
  std::vector<double> gains(200, 1.3);
  CHECK(std::abs(compose_varying(t, gains, 0.1) - solve_xi(t, 1.3).xi) <= 1e-6);
  std::vector<double> dying(50, 1.5);
  dying.insert(dying.end(), 500, 0.8);
  CHECK(std::abs(compose_varying(t, dying, 0.1)) < 1e-3);
  // The first gain is applied first.
  const std::vector<double> two{2.0, 0.5};
  CHECK(compose_varying(t, two, 0.3) == std::tanh(0.5 * std::tanh(2.0 * 0.3)));
  CHECK_THROWS_AS(compose_varying(t, std::vector<double>{}, 0.1), DomainError);
}

TEST_CASE("composition preserves sign and is monotone in the gains") {
  Rng rng(21);
  const auto names = catalog();
  for (int trial = 0; trial < 1000; ++trial) {
    const auto spec = parse_activation(names[rng.below(names.size())]);
    const auto m = 1 + rng.below(40);
    std::vector<double> lo(m);
    std::vector<double> hi(m);
    for (std::uint64_t k = 0; k < m; ++k) {
      lo[k] = rng.uniform(0.01, 3.0) * omega(spec);
      hi[k] = lo[k] + rng.uniform(0.0, 1.0) * omega(spec);
    }
    const double x0 = rng.uniform(-1.0, 1.0);
    const double r = compose_varying(spec, lo, x0);
    if (r != 0.0) CHECK(std::signbit(r) == std::signbit(x0));
    const double ax0 = std::abs(x0);
    CHECK(compose_varying(spec, hi, ax0) >= compose_varying(spec, lo, ax0));
  }
}

TEST_CASE("gains bounded below past omega keep the signal above the floor") {
  Rng rng(8);
  for (const std::string name : {"tanh", "erf", "gd", "softsign:2"}) {
    const auto spec = parse_activation(name);
    const double w = omega(spec);
    for (double eps : {0.05, 0.3}) {
      const double floor = solve_xi(spec, w + eps).xi;
      for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> gains;
        for (int k = 0; k < 20; ++k) gains.push_back(rng.uniform(0.1, 3.0) * w);
        for (int k = 0; k < 1000; ++k) gains.push_back(w + eps + rng.uniform(0.0, 2.0));
        INFO(name << " eps=" << eps);
        CHECK(std::abs(compose_varying(spec, gains, 0.05)) >= floor - 1e-6);
      }
    }
  }
}

TEST_CASE("stochastic floor probability") {
  const auto t = ActivationSpec::tanh();
  FloorConfig cfg;
  const auto r = stochastic_floor_probability(t, cfg);
  CHECK(r.trials == 10000);
  CHECK(r.r >= 1);
  CHECK(r.r <= cfg.m);
  CHECK(r.bound > 0.0);
  CHECK(r.empirical_prob >= r.bound - 3.0 * std::sqrt(r.bound * (1.0 - r.bound) / r.trials));

  // Deterministic limit: gains sit at omega < alpha, so the signal decays.
  FloorConfig tiny = cfg;
  tiny.sigma = 1e-9;
  tiny.alpha = 1.1;
  const auto z = stochastic_floor_probability(t, tiny);
  CHECK(z.r <= tiny.m);
  CHECK(z.bound == doctest::Approx(0.0));
  CHECK(z.empirical_prob == doctest::Approx(0.0));

  // m < r still reports both numbers.
  FloorConfig short_run = cfg;
  short_run.m = 2;
  const auto s = stochastic_floor_probability(t, short_run);
  CHECK(s.r > s.m);
  CHECK(s.bound >= 0.0);
  CHECK(s.empirical_prob >= 0.0);

  CHECK(stochastic_floor_probability(t, cfg).empirical_prob == r.empirical_prob);
}

TEST_CASE("stochastic floor preconditions") {
  const auto t = ActivationSpec::tanh();
  FloorConfig cfg;
  auto bad = cfg;
  bad.alpha = 0.9;
  CHECK_THROWS_AS(stochastic_floor_probability(t, bad), DomainError);
  bad = cfg;
  bad.delta = 0.05;
  CHECK_THROWS_AS(stochastic_floor_probability(t, bad), DomainError);
  bad = cfg;
  bad.sigma = 0.0;
  CHECK_THROWS_AS(stochastic_floor_probability(t, bad), DomainError);
  bad = cfg;
  bad.alpha = 1.0 + 1e-8;
  bad.x0 = 1e-6;
  bad.delta = 1.5e-4;
  CHECK_THROWS_AS(stochastic_floor_probability(t, bad), NoSuchR);
}

TEST_CASE("bifurcation scan") {
  const auto t = ActivationSpec::tanh();
  const double w = omega(t);
  const std::vector<double> gains{w + 0.1, w + 0.2, w + 0.3, w + 0.4, w + 0.5};
  const std::vector<double> x0{0.1};
  for (const auto& row : bifurcation_scan(t, gains, x0, 50)) {
    CHECK(std::abs(row.final_value - row.xi) <= 1e-3);
    CHECK(row.xi == solve_xi(t, row.a).xi);
  }

  const std::vector<double> at_omega{w};
  const auto boundary = bifurcation_scan(t, at_omega, x0, 50);
  CHECK(boundary[0].final_value < 0.1);
  CHECK(boundary[0].xi == 0.0);

  std::vector<double> starts;
  for (int i = 0; i < 60; ++i) starts.push_back(-1.0 + 2.0 * i / 59.0);
  starts.push_back(0.0);
  const std::vector<double> a{w + 0.3};
  const double xi = solve_xi(t, w + 0.3).xi;
  const auto rows = bifurcation_scan(t, a, starts, 50);
  CHECK(rows.size() == starts.size());
  for (const auto& row : rows) {
    if (row.x0 == 0.0) {
      CHECK(row.final_value == 0.0);
    } else {
      CHECK(std::signbit(row.final_value) == std::signbit(row.x0));
      CHECK(std::abs(std::abs(row.final_value) - xi) <= 1e-3);
    }
  }
}
