#include <doctest.h>

#include "comet/encoder.hpp"
#include "comet/rng.hpp"

using namespace comet;

namespace {

// Independent naive dot-product oracle.
std::vector<double> naive_encode(std::span<const double> win, const Matrix& m) {
  std::vector<double> out(m.rows, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) out[r] += m(r, c) * win[c];
  return out;
}

} // namespace

TEST_CASE("encode worked examples") {
  Matrix sum_row(1, 3);
  sum_row(0, 0) = sum_row(0, 1) = sum_row(0, 2) = 1.0;
  std::vector<double> win{2, 3, 4};
  CHECK(encode(win, sum_row) == std::vector<double>{9.0});

  Matrix m(2, 3);
  m(0, 0) = 1; m(0, 1) = 0; m(0, 2) = -1;
  m(1, 0) = 0.5; m(1, 1) = 0.5; m(1, 2) = 0.5;
  std::vector<double> w{1, 2, 3};
  const auto z = encode(w, m);
  CHECK(z[0] == doctest::Approx(-2.0));
  CHECK(z[1] == doctest::Approx(3.0));
  CHECK(z == naive_encode(w, m));

  std::vector<double> zeros(3, 0.0);
  for (double v : encode(zeros, m)) CHECK(v == 0.0);
}

TEST_CASE("encode matches naive oracle on random instances") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t rows = 1 + rng.next_u64() % 8;
    const std::size_t cols = 1 + rng.next_u64() % 30;
    Matrix m(rows, cols);
    for (double& x : m.data) x = rng.uniform(-1, 1);
    std::vector<double> win(cols);
    for (double& x : win) x = rng.uniform(-5, 5);
    const auto a = encode(win, m);
    const auto b = naive_encode(win, m);
    for (std::size_t i = 0; i < rows; ++i)
      CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }
}

TEST_CASE("bias-free linearity: homogeneity and additivity") {
  Rng rng(5);
  Matrix m(4, 12);
  for (double& x : m.data) x = rng.uniform(-1, 1);
  std::vector<double> a(12), b(12), sum(12), scaled(12);
  for (int trial = 0; trial < 20; ++trial) {
    const double c = rng.uniform(-3, 3);
    for (std::size_t i = 0; i < 12; ++i) {
      a[i] = rng.uniform(-2, 2);
      b[i] = rng.uniform(-2, 2);
      sum[i] = a[i] + b[i];
      scaled[i] = c * a[i];
    }
    const auto za = encode(a, m), zb = encode(b, m);
    const auto zsum = encode(sum, m), zscaled = encode(scaled, m);
    for (std::size_t d = 0; d < 4; ++d) {
      CHECK(zsum[d] == doctest::Approx(za[d] + zb[d]).epsilon(1e-12));
      CHECK(zscaled[d] == doctest::Approx(c * za[d]).epsilon(1e-12));
    }
  }
}

TEST_CASE("encode is stateless: repeated calls bit-identical") {
  Rng rng(9);
  Matrix m(3, 7);
  for (double& x : m.data) x = rng.uniform(-1, 1);
  std::vector<double> win(7);
  for (double& x : win) x = rng.uniform(-1, 1);
  CHECK(encode(win, m) == encode(win, m));
}

TEST_CASE("encode_multiscale boundaries") {
  WindowSpec spec;
  TimeSeries zeros(std::vector<double>(100, 0.0));
  Rng rng(3);
  EncoderParams params = EncoderParams::init(8, spec, rng);

  const auto enc = encode_multiscale(zeros, 80, params, spec);
  for (double v : enc.z_short) CHECK(v == 0.0);
  for (double v : enc.z_medium) CHECK(v == 0.0);
  for (double v : enc.z_long) CHECK(v == 0.0);

  CHECK_NOTHROW(encode_multiscale(zeros, spec.long_len, params, spec));
  CHECK_THROWS_AS(encode_multiscale(zeros, spec.long_len - 1, params, spec),
                  Error);
}
