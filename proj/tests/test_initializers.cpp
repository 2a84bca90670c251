#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>
#include <vector>

#include "oswi/error.hpp"
#include "oswi/initializers.hpp"

using namespace oswi;

TEST_CASE("proposed with zero noise is the modular diagonal") {
  Rng rng(1);
  const auto eye = init_layer(InitScheme::proposed(0.0, 1.0), 3, 3, rng);
  CHECK(eye == WeightMatrix::Identity(3, 3));

  const auto tall = init_layer(InitScheme::proposed(0.0, 2.5), 5, 3, rng);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 3; ++j) CHECK(tall(i, j) == (i % 3 == j ? 2.5 : 0.0));
  }
  const auto wide = init_layer(InitScheme::proposed(0.0, 1.0), 2, 5, rng);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 5; ++j) CHECK(wide(i, j) == (i == j ? 1.0 : 0.0));
  }
}

TEST_CASE("sampling is deterministic per seed") {
  for (auto scheme : {InitScheme::proposed(0.4, 1.0, 9), InitScheme::xavier(9), InitScheme::he(9),
                      InitScheme::orthogonal(9)}) {
    Rng a = scheme.layer_stream(2);
    Rng b = scheme.layer_stream(2);
    Rng c = scheme.layer_stream(3);
    const auto wa = init_layer(scheme, 17, 11, a);
    CHECK(wa == init_layer(scheme, 17, 11, b));
    CHECK(wa != init_layer(scheme, 17, 11, c));
  }
}

TEST_CASE("row sampler reproduces the dense draw") {
  for (auto scheme : {InitScheme::proposed(0.4, 1.3, 4), InitScheme::xavier(4), InitScheme::he(4)}) {
    Rng a(77);
    Rng b(77);
    const auto dense = init_layer(scheme, 6, 9, a);
    RowSampler sampler(scheme, 6, 9);
    std::vector<double> row(9);
    for (std::size_t i = 0; i < 6; ++i) {
      sampler.fill(i, row, b);
      for (std::size_t j = 0; j < 9; ++j) CHECK(row[j] == dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
  }
  CHECK_THROWS_AS(RowSampler(InitScheme::orthogonal(), 3, 3), DomainError);
}

TEST_CASE("proposed mean and variance structure") {
  const double sigma = 0.5;
  const double w = 1.3;
  const std::size_t rows = 16;
  const std::size_t cols = 16;
  const int samples = 10000;
  const auto scheme = InitScheme::proposed(sigma, w, 2);
  Rng rng(5);
  WeightMatrix sum = WeightMatrix::Zero(rows, cols);
  double sq = 0.0;
  for (int s = 0; s < samples; ++s) {
    const auto m = init_layer(scheme, rows, cols, rng);
    sum += m;
    WeightMatrix z = m;
    for (std::size_t i = 0; i < rows; ++i) z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i % cols)) -= w;
    sq += z.squaredNorm();
  }
  const double se = sigma / std::sqrt(static_cast<double>(cols)) / std::sqrt(static_cast<double>(samples));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double d = (i % cols == j) ? w : 0.0;
      CHECK(std::abs(sum(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) / samples - d) <= 5.0 * se);
    }
  }
  const double var = sq / (static_cast<double>(samples) * rows * cols);
  CHECK(var == doctest::Approx(sigma * sigma / cols).epsilon(0.02));
}

TEST_CASE("baseline variances") {
  const std::size_t rows = 12;
  const std::size_t cols = 20;
  const int samples = 10000;
  Rng rng(6);
  double xs = 0.0;
  double hs = 0.0;
  double xmax = 0.0;
  for (int s = 0; s < samples; ++s) {
    const auto x = init_layer(InitScheme::xavier(), rows, cols, rng);
    const auto h = init_layer(InitScheme::he(), rows, cols, rng);
    xs += x.squaredNorm();
    hs += h.squaredNorm();
    xmax = std::max(xmax, x.cwiseAbs().maxCoeff());
  }
  const double n = static_cast<double>(samples) * rows * cols;
  CHECK(xs / n == doctest::Approx(2.0 / (rows + cols)).epsilon(0.02));
  CHECK(hs / n == doctest::Approx(2.0 / cols).epsilon(0.02));
  CHECK(xmax <= std::sqrt(6.0 / (rows + cols)));
}

TEST_CASE("orthogonal init") {
  Rng rng(7);
  const auto q = init_layer(InitScheme::orthogonal(), 64, 64, rng);
  CHECK((q.transpose() * q - WeightMatrix::Identity(64, 64)).norm() <= 1e-10);
  for (auto [r, c] : {std::pair{30, 50}, std::pair{50, 30}}) {
    const auto w = init_layer(InitScheme::orthogonal(), r, c, rng);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(w);
    for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k) {
      CHECK(std::abs(svd.singularValues()(k) - 1.0) <= 1e-10);
    }
  }
}

TEST_CASE("gain statistics") {
  const std::size_t width = 256;
  const double sigma = 0.5;
  const auto scheme = InitScheme::proposed(sigma, 1.0, 3);

  std::vector<double> onehot(width, 0.0);
  onehot[7] = 0.4;
  Rng r1(1);
  const auto e = gain_statistics(scheme, onehot, 7, 1000, r1);
  CHECK(e.var_conditional == e.var_floor);
  CHECK(e.var_floor == doctest::Approx(sigma * sigma / width).epsilon(1e-15));

  Rng gen(2);
  std::vector<double> x(width);
  for (auto& v : x) v = gen.uniform(-1.0, 1.0);
  x[3] = 0.6;
  Rng r2(4);
  const auto g = gain_statistics(scheme, x, 3, 10000, r2);
  CHECK(g.samples == 10000);
  CHECK(std::abs(g.mean_hat - 1.0) <= 5.0 * g.mean_standard_error());
  CHECK(g.var_hat >= g.var_floor);
  CHECK(g.var_hat == doctest::Approx(g.var_conditional).epsilon(0.03));

  x[5] = 0.0;
  Rng r3(1);
  CHECK_THROWS_AS(gain_statistics(scheme, x, 5, 100, r3), ZeroCoordinate);
  CHECK_THROWS_AS(gain_statistics(InitScheme::xavier(), x, 3, 100, r3), DomainError);
}

TEST_CASE("scheme names") {
  for (auto k : {InitKind::Proposed, InitKind::XavierUniform, InitKind::HeNormal, InitKind::Orthogonal}) {
    CHECK(parse_init_kind(to_string(k)) == k);
  }
  CHECK_THROWS_AS(parse_init_kind("lecun"), ConfigError);
  CHECK_THROWS_AS(InitScheme::proposed(-0.1, 1.0), DomainError);
  CHECK_THROWS_AS(InitScheme::proposed(0.1, 0.0), DomainError);
}

TEST_CASE("weight container") {
  WeightMatrix w(2, 3);
  w << 1.5, -2.0, 0.1, 1e-300, -0.0, 3.25;
  std::stringstream ss;
  write_weights(ss, w);
  const std::string bytes = ss.str();
  REQUIRE(bytes.size() == 16 + 6 * 8);
  CHECK(bytes.substr(0, 4) == "OSWI");
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);
  CHECK(static_cast<unsigned char>(bytes[8]) == 2);
  CHECK(static_cast<unsigned char>(bytes[12]) == 3);
  double first = 0.0;
  std::memcpy(&first, bytes.data() + 16, 8);
  CHECK(first == 1.5);

  std::stringstream in(bytes);
  const auto back = read_weights(in);
  CHECK(back == w);
  CHECK(std::signbit(back(1, 1)));

  std::stringstream bad("OSWX" + bytes.substr(4));
  CHECK_THROWS_AS(read_weights(bad), BadMagic);
  std::stringstream cut(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_weights(cut), TruncatedFile);
  std::stringstream head(bytes.substr(0, 10));
  CHECK_THROWS_AS(read_weights(head), TruncatedFile);
  std::string v2 = bytes;
  v2[4] = 2;
  std::stringstream wrong_version(v2);
  CHECK_THROWS_AS(read_weights(wrong_version), BadMagic);
}
