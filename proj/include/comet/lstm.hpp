#pragma once

#include <cmath>
#include <vector>

#include "comet/forecaster.hpp"
#include "comet/matrix.hpp"
#include "comet/rng.hpp"

namespace comet {

struct LstmConfig {
  std::size_t hidden_size = 32;
  std::size_t sequence_len = 60;
  std::size_t epochs = 20;
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const {
    if (hidden_size == 0) throw data_error("LSTM hidden_size must be positive");
    if (sequence_len == 0) throw data_error("LSTM sequence_len must be positive");
  }
};

// Single-layer LSTM over a scalar input sequence, final hidden state mapped
// to a scalar increment through a linear readout. Trained with full
// backpropagation through time on one-step squared error.
struct LstmNet {
  // gate order: input, forget, cell, output
  std::vector<std::vector<double>> w_in; // 4 x H, input weights (scalar input)
  std::vector<Matrix> u_rec;             // 4 x (H x H), recurrent weights
  std::vector<std::vector<double>> bias; // 4 x H
  std::vector<double> readout;           // H
  double readout_bias = 0.0;
  std::size_t hidden = 0;

  static LstmNet init(std::size_t hidden, Rng& rng) {
    LstmNet net;
    net.hidden = hidden;
    const double scale = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (int g = 0; g < 4; ++g) {
      net.w_in.emplace_back(hidden);
      net.u_rec.emplace_back(hidden, hidden);
      net.bias.emplace_back(hidden, 0.0);
      for (double& x : net.w_in.back()) x = rng.uniform(-scale, scale);
      for (double& x : net.u_rec.back().data) x = rng.uniform(-scale, scale);
    }
    net.readout.resize(hidden);
    for (double& x : net.readout) x = rng.uniform(-scale, scale);
    return net;
  }

  static LstmNet zeros_like(const LstmNet& other) {
    LstmNet net;
    net.hidden = other.hidden;
    for (int g = 0; g < 4; ++g) {
      net.w_in.emplace_back(other.hidden, 0.0);
      net.u_rec.emplace_back(other.hidden, other.hidden);
      net.bias.emplace_back(other.hidden, 0.0);
    }
    net.readout.assign(other.hidden, 0.0);
    net.readout_bias = 0.0;
    return net;
  }

  std::size_t parameter_count() const {
    return 4 * (hidden + hidden * hidden + hidden) + hidden + 1;
  }

  std::vector<double*> parameters() {
    std::vector<double*> out;
    for (int g = 0; g < 4; ++g) {
      for (double& x : w_in[g]) out.push_back(&x);
      for (double& x : u_rec[g].data) out.push_back(&x);
      for (double& x : bias[g]) out.push_back(&x);
    }
    for (double& x : readout) out.push_back(&x);
    out.push_back(&readout_bias);
    return out;
  }

  static double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

  double forward(std::span<const double> sequence) const {
    std::vector<double> h(hidden, 0.0), c(hidden, 0.0);
    std::vector<double> gates(4 * hidden);
    for (double x : sequence) {
      step(x, h, c, gates, h, c);
    }
    double y = readout_bias;
    for (std::size_t j = 0; j < hidden; ++j) y += readout[j] * h[j];
    return y;
  }

  // Accumulates dL/dparams for L = 0.5*(forward(seq) - target)^2 into
  // `grad`; returns the loss.
  double backward(std::span<const double> sequence, double target,
                  LstmNet& grad) const {
    const std::size_t steps = sequence.size();
    // caches: activated gates and cell state per step
    std::vector<std::vector<double>> gi(steps), gf(steps), gg(steps),
        go(steps), cs(steps), hs(steps);
    std::vector<double> h(hidden, 0.0), c(hidden, 0.0);
    for (std::size_t t = 0; t < steps; ++t) {
      gi[t].resize(hidden);
      gf[t].resize(hidden);
      gg[t].resize(hidden);
      go[t].resize(hidden);
      cs[t].resize(hidden);
      hs[t].resize(hidden);
      const double x = sequence[t];
      std::vector<double> h_prev = h;
      for (std::size_t j = 0; j < hidden; ++j) {
        double ai = w_in[0][j] * x + bias[0][j];
        double af = w_in[1][j] * x + bias[1][j];
        double ag = w_in[2][j] * x + bias[2][j];
        double ao = w_in[3][j] * x + bias[3][j];
        const double* ui = u_rec[0].data.data() + j * hidden;
        const double* uf = u_rec[1].data.data() + j * hidden;
        const double* ug = u_rec[2].data.data() + j * hidden;
        const double* uo = u_rec[3].data.data() + j * hidden;
        for (std::size_t p = 0; p < hidden; ++p) {
          ai += ui[p] * h_prev[p];
          af += uf[p] * h_prev[p];
          ag += ug[p] * h_prev[p];
          ao += uo[p] * h_prev[p];
        }
        gi[t][j] = sigmoid(ai);
        gf[t][j] = sigmoid(af);
        gg[t][j] = std::tanh(ag);
        go[t][j] = sigmoid(ao);
        c[j] = gf[t][j] * c[j] + gi[t][j] * gg[t][j];
        cs[t][j] = c[j];
        h[j] = go[t][j] * std::tanh(c[j]);
        hs[t][j] = h[j];
      }
    }

    double y = readout_bias;
    for (std::size_t j = 0; j < hidden; ++j) y += readout[j] * h[j];
    const double error = y - target;

    std::vector<double> dh(hidden), dc(hidden, 0.0);
    for (std::size_t j = 0; j < hidden; ++j) {
      dh[j] = error * readout[j];
      grad.readout[j] += error * h[j];
    }
    grad.readout_bias += error;

    std::vector<double> dai(hidden), daf(hidden), dag(hidden), dao(hidden);
    for (std::size_t t = steps; t-- > 0;) {
      const std::vector<double>* h_prev = t > 0 ? &hs[t - 1] : nullptr;
      const std::vector<double>* c_prev = t > 0 ? &cs[t - 1] : nullptr;
      for (std::size_t j = 0; j < hidden; ++j) {
        const double tc = std::tanh(cs[t][j]);
        const double d_o = dh[j] * tc;
        dc[j] += dh[j] * go[t][j] * (1.0 - tc * tc);
        const double d_i = dc[j] * gg[t][j];
        const double d_g = dc[j] * gi[t][j];
        const double d_f = dc[j] * (c_prev ? (*c_prev)[j] : 0.0);
        dai[j] = d_i * gi[t][j] * (1.0 - gi[t][j]);
        daf[j] = d_f * gf[t][j] * (1.0 - gf[t][j]);
        dag[j] = d_g * (1.0 - gg[t][j] * gg[t][j]);
        dao[j] = d_o * go[t][j] * (1.0 - go[t][j]);
        dc[j] *= gf[t][j]; // carried to step t-1
      }
      const double x = sequence[t];
      std::vector<double>* da[4] = {&dai, &daf, &dag, &dao};
      std::vector<double> dh_prev(hidden, 0.0);
      for (int g = 0; g < 4; ++g) {
        for (std::size_t j = 0; j < hidden; ++j) {
          const double d = (*da[g])[j];
          grad.w_in[g][j] += d * x;
          grad.bias[g][j] += d;
          if (h_prev) {
            double* gu = grad.u_rec[g].data.data() + j * hidden;
            const double* u = u_rec[g].data.data() + j * hidden;
            for (std::size_t p = 0; p < hidden; ++p) {
              gu[p] += d * (*h_prev)[p];
              dh_prev[p] += u[p] * d;
            }
          }
        }
      }
      dh = std::move(dh_prev);
    }
    return 0.5 * error * error;
  }

  void apply_gradient(const LstmNet& grad, double scale) {
    for (int g = 0; g < 4; ++g) {
      for (std::size_t j = 0; j < hidden; ++j) {
        w_in[g][j] -= scale * grad.w_in[g][j];
        bias[g][j] -= scale * grad.bias[g][j];
      }
      for (std::size_t i = 0; i < u_rec[g].data.size(); ++i)
        u_rec[g].data[i] -= scale * grad.u_rec[g].data[i];
    }
    for (std::size_t j = 0; j < hidden; ++j)
      readout[j] -= scale * grad.readout[j];
    readout_bias -= scale * grad.readout_bias;
  }

private:
  void step(double x, const std::vector<double>& h_in,
            const std::vector<double>& c_in, std::vector<double>& scratch,
            std::vector<double>& h_out, std::vector<double>& c_out) const {
    std::vector<double> h_prev = h_in; // h_out may alias h_in
    (void)scratch;
    for (std::size_t j = 0; j < hidden; ++j) {
      double ai = w_in[0][j] * x + bias[0][j];
      double af = w_in[1][j] * x + bias[1][j];
      double ag = w_in[2][j] * x + bias[2][j];
      double ao = w_in[3][j] * x + bias[3][j];
      const double* ui = u_rec[0].data.data() + j * hidden;
      const double* uf = u_rec[1].data.data() + j * hidden;
      const double* ug = u_rec[2].data.data() + j * hidden;
      const double* uo = u_rec[3].data.data() + j * hidden;
      for (std::size_t p = 0; p < hidden; ++p) {
        ai += ui[p] * h_prev[p];
        af += uf[p] * h_prev[p];
        ag += ug[p] * h_prev[p];
        ao += uo[p] * h_prev[p];
      }
      const double i_g = sigmoid(ai);
      const double f_g = sigmoid(af);
      const double g_g = std::tanh(ag);
      const double o_g = sigmoid(ao);
      c_out[j] = f_g * c_in[j] + i_g * g_g;
      h_out[j] = o_g * std::tanh(c_out[j]);
    }
  }
};

class LstmForecaster final : public Forecaster {
public:
  explicit LstmForecaster(LstmConfig config = {}) : config_(config) {
    config_.validate();
  }

  void fit(const TimeSeries& train_series) override {
    validate_finite(train_series);
    const std::size_t n = train_series.size();
    if (n < config_.sequence_len + 1)
      throw data_error("LSTM: training series shorter than sequence_len + 1");
    Rng rng(config_.seed);
    net_ = LstmNet::init(config_.hidden_size, rng);

    const std::size_t first = config_.sequence_len;
    const std::size_t anchors = n - first;
    for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
      LstmNet grad = LstmNet::zeros_like(net_);
      std::size_t fill = 0;
      for (std::size_t a = 0; a < anchors; ++a) {
        const std::size_t end = first + a;
        const auto seq = window(train_series, end, config_.sequence_len);
        const double target = train_series[end] - train_series[end - 1];
        const double loss = net_.backward(seq, target, grad);
        if (!std::isfinite(loss))
          throw numeric_error("LSTM training diverged at epoch " +
                              std::to_string(epoch));
        ++fill;
        if (fill == config_.batch_size || a + 1 == anchors) {
          net_.apply_gradient(grad,
                              config_.learning_rate / static_cast<double>(fill));
          grad = LstmNet::zeros_like(net_);
          fill = 0;
        }
      }
    }
    fitted_ = true;
  }

  double predict_next(const TimeSeries& history) const override {
    if (!fitted_) throw data_error("LSTM: fit() not called");
    if (history.size() < config_.sequence_len)
      throw data_error("LSTM: insufficient history");
    const auto seq = window(history, history.size(), config_.sequence_len);
    return history.back() + net_.forward(seq);
  }

  std::size_t parameter_bytes() const override {
    LstmNet probe = net_;
    if (!fitted_) {
      Rng rng(0);
      probe = LstmNet::init(config_.hidden_size, rng);
    }
    return probe.parameter_count() * 4;
  }
  std::size_t min_history() const override { return config_.sequence_len; }
  std::string name() const override { return "lstm"; }

private:
  LstmConfig config_;
  LstmNet net_;
  bool fitted_ = false;
};

} // namespace comet
