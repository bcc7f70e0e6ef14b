#pragma once

#include <cmath>
#include <vector>

#include "comet/forecaster.hpp"
#include "comet/matrix.hpp"
#include "comet/rng.hpp"

namespace comet {

struct MlpConfig {
  std::size_t input_len = 24;
  std::vector<std::size_t> hidden = {64, 64};
  std::size_t epochs = 20;
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const {
    if (input_len == 0) throw data_error("MLP input_len must be positive");
    for (std::size_t h : hidden)
      if (h == 0) throw data_error("MLP hidden sizes must be positive");
  }
};

// Plain feedforward net with ReLU hidden layers and a scalar linear output.
// Consumes the raw trailing window and predicts the next-step increment.
// Trained with hand-written backprop and mini-batch gradient descent on
// one-step squared error.
struct MlpNet {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;

  static MlpNet init(const MlpConfig& config, Rng& rng) {
    MlpNet net;
    std::vector<std::size_t> sizes;
    sizes.push_back(config.input_len);
    for (std::size_t h : config.hidden) sizes.push_back(h);
    sizes.push_back(1);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      Matrix w(sizes[l + 1], sizes[l]);
      const double scale = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
      for (double& x : w.data) x = rng.uniform(-scale, scale);
      net.weights.push_back(std::move(w));
      net.biases.emplace_back(sizes[l + 1], 0.0);
    }
    return net;
  }

  static MlpNet zeros_like(const MlpNet& other) {
    MlpNet net;
    for (const Matrix& w : other.weights)
      net.weights.emplace_back(w.rows, w.cols);
    for (const auto& b : other.biases) net.biases.emplace_back(b.size(), 0.0);
    return net;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Matrix& w : weights) n += w.data.size();
    for (const auto& b : biases) n += b.size();
    return n;
  }

  // Flat view over every trainable scalar, in a fixed order. Used by the
  // optimizer and by finite-difference checks.
  std::vector<double*> parameters() {
    std::vector<double*> out;
    for (Matrix& w : weights)
      for (double& x : w.data) out.push_back(&x);
    for (auto& b : biases)
      for (double& x : b) out.push_back(&x);
    return out;
  }

  double forward(std::span<const double> input) const {
    std::vector<double> act(input.begin(), input.end());
    for (std::size_t l = 0; l < weights.size(); ++l) {
      std::vector<double> next = matvec(weights[l], act);
      for (std::size_t i = 0; i < next.size(); ++i) next[i] += biases[l][i];
      if (l + 1 < weights.size())
        for (double& x : next) x = std::max(x, 0.0);
      act = std::move(next);
    }
    return act[0];
  }

  // Accumulates dL/dparams for L = 0.5*(forward(input) - target)^2 into
  // `grad`; returns the loss.
  double backward(std::span<const double> input, double target,
                  MlpNet& grad) const {
    std::vector<std::vector<double>> activations; // post-ReLU, per layer
    activations.emplace_back(input.begin(), input.end());
    for (std::size_t l = 0; l < weights.size(); ++l) {
      std::vector<double> next = matvec(weights[l], activations.back());
      for (std::size_t i = 0; i < next.size(); ++i) next[i] += biases[l][i];
      if (l + 1 < weights.size())
        for (double& x : next) x = std::max(x, 0.0);
      activations.push_back(std::move(next));
    }
    const double error = activations.back()[0] - target;
    std::vector<double> delta{error};
    for (std::size_t l = weights.size(); l-- > 0;) {
      const auto& in = activations[l];
      for (std::size_t r = 0; r < weights[l].rows; ++r) {
        grad.biases[l][r] += delta[r];
        for (std::size_t c = 0; c < weights[l].cols; ++c)
          grad.weights[l](r, c) += delta[r] * in[c];
      }
      if (l == 0) break;
      std::vector<double> prev(weights[l].cols, 0.0);
      for (std::size_t r = 0; r < weights[l].rows; ++r)
        for (std::size_t c = 0; c < weights[l].cols; ++c)
          prev[c] += weights[l](r, c) * delta[r];
      // ReLU mask from the stored activation
      for (std::size_t c = 0; c < prev.size(); ++c)
        if (activations[l][c] <= 0.0) prev[c] = 0.0;
      delta = std::move(prev);
    }
    return 0.5 * error * error;
  }

  void apply_gradient(const MlpNet& grad, double scale) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
      for (std::size_t i = 0; i < weights[l].data.size(); ++i)
        weights[l].data[i] -= scale * grad.weights[l].data[i];
      for (std::size_t i = 0; i < biases[l].size(); ++i)
        biases[l][i] -= scale * grad.biases[l][i];
    }
  }
};

class MlpForecaster final : public Forecaster {
public:
  explicit MlpForecaster(MlpConfig config = {}) : config_(config) {
    config_.validate();
  }

  void fit(const TimeSeries& train_series) override {
    validate_finite(train_series);
    const std::size_t n = train_series.size();
    if (n < config_.input_len + 1)
      throw data_error("MLP: training series shorter than input_len + 1");
    Rng rng(config_.seed);
    net_ = MlpNet::init(config_, rng);

    const std::size_t first = config_.input_len;
    const std::size_t anchors = n - first;
    for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
      MlpNet grad = MlpNet::zeros_like(net_);
      std::size_t fill = 0;
      for (std::size_t a = 0; a < anchors; ++a) {
        const std::size_t end = first + a;
        const auto win = window(train_series, end, config_.input_len);
        const double target = train_series[end] - train_series[end - 1];
        const double loss = net_.backward(win, target, grad);
        if (!std::isfinite(loss))
          throw numeric_error("MLP training diverged at epoch " +
                              std::to_string(epoch));
        ++fill;
        if (fill == config_.batch_size || a + 1 == anchors) {
          net_.apply_gradient(grad,
                              config_.learning_rate / static_cast<double>(fill));
          grad = MlpNet::zeros_like(net_);
          fill = 0;
        }
      }
    }
    fitted_ = true;
  }

  double predict_next(const TimeSeries& history) const override {
    if (!fitted_) throw data_error("MLP: fit() not called");
    if (history.size() < config_.input_len)
      throw data_error("MLP: insufficient history");
    const auto win = window(history, history.size(), config_.input_len);
    return history.back() + net_.forward(win);
  }

  std::size_t parameter_bytes() const override {
    MlpNet probe = net_;
    if (!fitted_) {
      Rng rng(0);
      probe = MlpNet::init(config_, rng);
    }
    return probe.parameter_count() * 4;
  }
  std::size_t min_history() const override { return config_.input_len; }
  std::string name() const override { return "mlp"; }

private:
  MlpConfig config_;
  MlpNet net_;
  bool fitted_ = false;
};

} // namespace comet
