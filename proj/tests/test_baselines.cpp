#include <doctest.h>

#include <algorithm>
#include <functional>

#include "comet/knn.hpp"
#include "comet/lstm.hpp"
#include "comet/mlp.hpp"
#include "comet/rng.hpp"

using namespace comet;

namespace {

TimeSeries noisy(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  TimeSeries s;
  double x = 1.0;
  for (std::size_t t = 0; t < n; ++t) {
    x += scale * rng.gaussian();
    s.values.push_back(x);
  }
  return s;
}

double central_difference(std::function<double(double)> f, double x,
                          double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

bool rel_ok(double analytic, double numeric) {
  const double scale = std::abs(analytic) + std::abs(numeric);
  if (scale < 1e-10) return true;
  return std::abs(analytic - numeric) / std::max(scale, 1e-6) <= 1e-4;
}

// Brute-force kNN oracle: mean increment of the k L1-closest training
// windows, all candidates sorted.
double oracle_knn(const TimeSeries& train, const TimeSeries& history,
                  const KnnConfig& config) {
  const auto query = window(history, history.size(), config.window_len);
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t end = config.window_len; end < train.size(); ++end)
    all.emplace_back(l1(query, window(train, end, config.window_len)), end);
  std::sort(all.begin(), all.end());
  const std::size_t k = std::min(config.k, all.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    mean += train[all[i].second] - train[all[i].second - 1];
  return history.back() + mean / double(k);
}

} // namespace

TEST_CASE("knn on constant series predicts the last value") {
  KnnForecaster knn;
  knn.fit(TimeSeries(std::vector<double>(100, 4.0)));
  const TimeSeries history = noisy(40, 2);
  CHECK(knn.predict_next(history) == history.back());
}

TEST_CASE("knn exact window match with k=1") {
  KnnConfig config;
  config.k = 1;
  KnnForecaster knn(config);
  const TimeSeries train = noisy(120, 5);
  knn.fit(train);
  // history ending with the training window at end=70
  TimeSeries history;
  history.values.assign(train.values.begin() + 10, train.values.begin() + 70);
  const double expected = history.back() + (train[70] - train[69]);
  CHECK(knn.predict_next(history) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("knn matches brute-force oracle on random instances") {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    KnnConfig config;
    config.window_len = 3 + rng.next_u64() % 8;
    config.k = 1 + rng.next_u64() % 8;
    const TimeSeries train =
        noisy(config.window_len + 30 + rng.next_u64() % 40, trial * 11 + 1);
    const TimeSeries history = noisy(config.window_len + 5, trial * 13 + 2);
    KnnForecaster knn(config);
    knn.fit(train);
    CHECK(knn.predict_next(history) ==
          doctest::Approx(oracle_knn(train, history, config)).epsilon(1e-12));
  }
}

TEST_CASE("knn error paths") {
  KnnForecaster knn;
  CHECK_THROWS_AS(knn.predict_next(noisy(30, 1)), Error);
  knn.fit(noisy(100, 1));
  CHECK_THROWS_AS(knn.predict_next(noisy(10, 2)), Error);
  KnnForecaster short_fit;
  CHECK_THROWS_AS(short_fit.fit(TimeSeries({1.0, 2.0})), Error);
}

TEST_CASE("zero-weight MLP outputs the output-layer bias") {
  MlpConfig config;
  config.input_len = 4;
  config.hidden = {3};
  Rng rng(1);
  MlpNet net = MlpNet::init(config, rng);
  for (Matrix& w : net.weights) std::fill(w.data.begin(), w.data.end(), 0.0);
  net.biases.back()[0] = 0.75;
  std::vector<double> input{1, 2, 3, 4};
  CHECK(net.forward(input) == 0.75);
}

TEST_CASE("MLP gradient matches central finite differences") {
  for (std::uint64_t seed = 0; seed < 22; ++seed) {
    MlpConfig config;
    config.input_len = 2 + seed % 3;
    config.hidden = {2 + seed % 2};
    Rng rng(seed + 100);
    MlpNet net = MlpNet::init(config, rng);
    std::vector<double> input(config.input_len);
    for (double& x : input) x = rng.uniform(-2, 2);
    const double target = rng.uniform(-2, 2);

    MlpNet grad = MlpNet::zeros_like(net);
    net.backward(input, target, grad);
    auto params = net.parameters();
    auto grads = grad.parameters();
    REQUIRE(params.size() == grads.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double saved = *params[i];
      const double numeric = central_difference(
          [&](double v) {
            *params[i] = v;
            const double out = net.forward(input);
            *params[i] = saved;
            return 0.5 * (out - target) * (out - target);
          },
          saved);
      CHECK_MESSAGE(rel_ok(*grads[i], numeric),
                    "param " << i << ": analytic=" << *grads[i]
                             << " numeric=" << numeric);
    }
  }
}

TEST_CASE("all-zero LSTM outputs the readout bias") {
  LstmConfig config;
  config.hidden_size = 3;
  Rng rng(1);
  LstmNet net = LstmNet::init(config.hidden_size, rng);
  for (int g = 0; g < 4; ++g) {
    std::fill(net.w_in[g].begin(), net.w_in[g].end(), 0.0);
    std::fill(net.u_rec[g].data.begin(), net.u_rec[g].data.end(), 0.0);
    std::fill(net.bias[g].begin(), net.bias[g].end(), 0.0);
  }
  std::fill(net.readout.begin(), net.readout.end(), 0.0);
  net.readout_bias = -0.5;
  // tanh(0)*sigmoid(0) keeps cell and hidden at zero for any input
  std::vector<double> seq{1.0, -2.0, 3.0, 0.5};
  CHECK(net.forward(seq) == -0.5);
}

TEST_CASE("LSTM gradient matches central finite differences") {
  for (std::uint64_t seed = 0; seed < 22; ++seed) {
    const std::size_t hidden = 1 + seed % 2;
    Rng rng(seed + 200);
    LstmNet net = LstmNet::init(hidden, rng);
    std::vector<double> seq(3 + seed % 3);
    for (double& x : seq) x = rng.uniform(-1.5, 1.5);
    const double target = rng.uniform(-1, 1);

    LstmNet grad = LstmNet::zeros_like(net);
    net.backward(seq, target, grad);
    auto params = net.parameters();
    auto grads = grad.parameters();
    REQUIRE(params.size() == grads.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double saved = *params[i];
      const double numeric = central_difference(
          [&](double v) {
            *params[i] = v;
            const double out = net.forward(seq);
            *params[i] = saved;
            return 0.5 * (out - target) * (out - target);
          },
          saved);
      CHECK_MESSAGE(rel_ok(*grads[i], numeric),
                    "param " << i << ": analytic=" << *grads[i]
                             << " numeric=" << numeric);
    }
  }
}

TEST_CASE("parameter byte accounting") {
  SUBCASE("default MLP 24->64->64->1") {
    MlpConfig config;
    Rng rng(0);
    CHECK(MlpNet::init(config, rng).parameter_count() == 5825);
  }
  SUBCASE("default LSTM hidden 32") {
    Rng rng(0);
    CHECK(LstmNet::init(32, rng).parameter_count() == 4385);
  }
  SUBCASE("knn reports zero parameter bytes") {
    KnnForecaster knn;
    CHECK(knn.parameter_bytes() == 0);
  }
}

TEST_CASE("MLP and LSTM forecasters train and predict deterministically") {
  const TimeSeries train = noisy(200, 3, 0.01);
  const TimeSeries history = noisy(80, 4, 0.01);

  MlpConfig mlp_config;
  mlp_config.epochs = 2;
  MlpForecaster mlp1(mlp_config), mlp2(mlp_config);
  mlp1.fit(train);
  mlp2.fit(train);
  CHECK(mlp1.predict_next(history) == mlp2.predict_next(history));

  LstmConfig lstm_config;
  lstm_config.hidden_size = 4;
  lstm_config.epochs = 1;
  LstmForecaster lstm1(lstm_config), lstm2(lstm_config);
  lstm1.fit(train);
  lstm2.fit(train);
  CHECK(lstm1.predict_next(history) == lstm2.predict_next(history));
}
