#include <doctest.h>

#include <functional>

#include "comet/rng.hpp"
#include "comet/trainer.hpp"

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

TimeSeries ramp(std::size_t n, double start = 0.0) {
  TimeSeries s;
  for (std::size_t t = 0; t < n; ++t) s.values.push_back(start + double(t));
  return s;
}

// Tiny instance with a small window spec so finite differences stay cheap.
CometModel tiny_model(const TimeSeries& train, std::uint64_t seed,
                      std::size_t dim, std::size_t k, const WindowSpec& spec) {
  Rng rng(seed);
  CometModel m;
  m.window_spec = spec;
  m.encoder = EncoderParams::init(dim, spec, rng);
  m.correction = CorrectionParams::init(dim, rng);
  m.retrieval.k = k;
  m.retrieval.log_w_short = rng.uniform(-0.3, 0.3);
  m.retrieval.log_w_medium = rng.uniform(-0.3, 0.3);
  m.retrieval.log_w_long = rng.uniform(-0.3, 0.3);
  m.retrieval.log_gamma = rng.uniform(-0.3, 0.3);
  m.memory = build_memory(train, m.encoder, spec);
  return m;
}

// Forward-only loss used as the finite-difference oracle. Memory entries
// stay fixed while parameters are perturbed, matching the straight-through
// convention of the analytic gradient.
double forward_loss(const CometModel& model, std::size_t anchor,
                    const TimeSeries& series, double delta) {
  const BehaviorEncoding enc =
      encode_multiscale(series, anchor, model.encoder, model.window_spec);
  const AggregateResult agg =
      aggregate(topk(enc, model.memory, model.retrieval), model.memory,
                model.retrieval);
  return huber(series[anchor - 1] + agg.dx_mem, series[anchor], delta);
}

double central_difference(std::function<double(double)> f, double x,
                          double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

void check_gradient(CometModel model, std::size_t anchor,
                    const TimeSeries& series, double delta) {
  const CometGradient grad = loss_gradient(model, anchor, series, delta);
  auto rel_ok = [](double analytic, double numeric) {
    const double scale = std::abs(analytic) + std::abs(numeric);
    if (scale < 1e-10) return true;
    return std::abs(analytic - numeric) / std::max(scale, 1e-6) <= 1e-4;
  };

  auto check_scalar = [&](double* param, double analytic) {
    const double saved = *param;
    const double numeric = central_difference(
        [&](double v) {
          *param = v;
          const double loss = forward_loss(model, anchor, series, delta);
          *param = saved;
          return loss;
        },
        saved);
    CHECK_MESSAGE(rel_ok(analytic, numeric),
                  "analytic=" << analytic << " numeric=" << numeric);
  };

  check_scalar(&model.retrieval.log_w_short, grad.log_w_short);
  check_scalar(&model.retrieval.log_w_medium, grad.log_w_medium);
  check_scalar(&model.retrieval.log_w_long, grad.log_w_long);
  check_scalar(&model.retrieval.log_gamma, grad.log_gamma);
  for (std::size_t i = 0; i < model.encoder.weights_short.data.size(); ++i)
    check_scalar(&model.encoder.weights_short.data[i], grad.w_short.data[i]);
  for (std::size_t i = 0; i < model.encoder.weights_medium.data.size(); ++i)
    check_scalar(&model.encoder.weights_medium.data[i], grad.w_medium.data[i]);
  for (std::size_t i = 0; i < model.encoder.weights_long.data.size(); ++i)
    check_scalar(&model.encoder.weights_long.data[i], grad.w_long.data[i]);
}

} // namespace

TEST_CASE("huber loss branches") {
  CHECK(huber(3.0, 3.0, 1.0) == 0.0);
  CHECK(huber(3.5, 3.0, 1.0) == doctest::Approx(0.125));
  CHECK(huber(6.0, 3.0, 1.0) == doctest::Approx(2.5));
  CHECK(huber(0.0, 3.0, 1.0) == doctest::Approx(2.5));
  CHECK(huber_derivative(0.5, 1.0) == doctest::Approx(0.5));
  CHECK(huber_derivative(3.0, 1.0) == doctest::Approx(1.0));
  CHECK(huber_derivative(-3.0, 1.0) == doctest::Approx(-1.0));
  CHECK(huber_derivative(0.0, 1.0) == 0.0);
}

TEST_CASE("analytic gradient matches central finite differences") {
  // tiny windows keep the parameter count small; >=20 seeds as a property
  const WindowSpec spec{3, 4, 6};
  for (std::uint64_t seed = 0; seed < 22; ++seed) {
    const std::size_t dim = 1 + seed % 2;
    const std::size_t k = 2 + seed % 2;
    const TimeSeries series = noisy(6 + 2 + 10, seed * 3 + 1, 0.5);
    const CometModel model = tiny_model(series, seed * 7 + 5, dim, k, spec);
    REQUIRE(model.memory.count() >= k);
    const std::size_t anchor = spec.long_len + 1 + seed % 5;
    check_gradient(model, anchor, series, 1.0);
  }
}

TEST_CASE("gradient is zero when neighborhood increments are equal") {
  const WindowSpec spec{3, 4, 6};
  const TimeSeries series = ramp(20); // every dx is exactly 1
  const CometModel model = tiny_model(series, 2, 2, 3, spec);
  const CometGradient grad = loss_gradient(model, 8, series, 1.0);
  CHECK(std::abs(grad.log_gamma) < 1e-10);
  CHECK(std::abs(grad.log_w_short) < 1e-10);
  for (double g : grad.w_short.data) CHECK(std::abs(g) < 1e-10);
  for (double g : grad.w_long.data) CHECK(std::abs(g) < 1e-10);
}

TEST_CASE("gradient is zero at exact prediction") {
  // constant series: all stored dx are 0 so prediction == target exactly
  const WindowSpec spec{3, 4, 6};
  const TimeSeries series(std::vector<double>(20, 2.0));
  const CometModel model = tiny_model(series, 4, 2, 3, spec);
  double loss = 1.0;
  const CometGradient grad = loss_gradient(model, 9, series, 1.0, &loss);
  CHECK(loss == 0.0);
  CHECK(grad.log_gamma == 0.0);
  for (double g : grad.w_medium.data) CHECK(g == 0.0);
}

TEST_CASE("train config invariants") {
  TrainConfig config;
  config.epochs = 0;
  CHECK_THROWS_AS(config.validate(), Error);
  config = TrainConfig{};
  config.learning_rate = 0.0;
  CHECK_THROWS_AS(config.validate(), Error);
  config = TrainConfig{};
  config.huber_delta = -1.0;
  CHECK_THROWS_AS(config.validate(), Error);
}

TEST_CASE("training on a constant series has zero loss throughout") {
  const TimeSeries constant(std::vector<double>(200, 5.0));
  TrainConfig config;
  config.epochs = 2;
  auto [model, report] = train(constant, {}, WindowSpec{}, config, 4, 8);
  for (double loss : report.epoch_mean_loss) CHECK(loss == 0.0);
}

TEST_CASE("training on a ramp yields near-exact continuation") {
  const TimeSeries train_series = ramp(300);
  TrainConfig config;
  config.epochs = 3;
  auto [model, report] = train(train_series, {}, WindowSpec{}, config, 4, 8);
  // held-out ramp continuation, teacher-forced one-step MAE
  const TimeSeries holdout = ramp(100, 300.0);
  CHECK(one_step_mae(model, holdout) <= 1e-6);
  // loss non-increasing after the first epoch
  for (std::size_t e = 1; e < report.epoch_mean_loss.size(); ++e)
    CHECK(report.epoch_mean_loss[e] <= report.epoch_mean_loss[e - 1] + 1e-12);
}

TEST_CASE("seed determinism of training") {
  const TimeSeries series = noisy(250, 77, 0.01);
  TrainConfig config;
  config.epochs = 2;
  config.seed = 5;
  auto [m1, r1] = train(series, {}, WindowSpec{}, config, 4, 8);
  auto [m2, r2] = train(series, {}, WindowSpec{}, config, 4, 8);
  CHECK(m1.encoder.weights_short.data == m2.encoder.weights_short.data);
  CHECK(m1.encoder.weights_long.data == m2.encoder.weights_long.data);
  CHECK(m1.retrieval.log_gamma == m2.retrieval.log_gamma);
  CHECK(r1.epoch_mean_loss == r2.epoch_mean_loss);
}

TEST_CASE("validation-based selection reports a finite MAE") {
  const TimeSeries series = noisy(400, 88, 0.01);
  TimeSeries train_part, val_part;
  train_part.values.assign(series.values.begin(), series.values.begin() + 300);
  val_part.values.assign(series.values.begin() + 300, series.values.end());
  TrainConfig config;
  config.epochs = 3;
  auto [model, report] = train(train_part, val_part, WindowSpec{}, config, 4, 8);
  CHECK(std::isfinite(report.final_val_mae));
  CHECK(report.epoch_val_mae.size() == 3);
  for (double v : report.epoch_val_mae) CHECK(std::isfinite(v));
}
