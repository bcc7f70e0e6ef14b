#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "comet/error.hpp"
#include "comet/model.hpp"
#include "comet/rng.hpp"

namespace comet {

struct TrainConfig {
  std::size_t epochs = 20;
  double learning_rate = 1e-3;
  double huber_delta = 1.0;
  std::uint64_t seed = 0;
  bool memory_rebuild = true;
  std::size_t batch_size = 32;
  std::size_t log_every = 1;

  void validate() const {
    if (epochs == 0) throw data_error("epochs must be at least 1");
    if (!(learning_rate > 0.0)) throw data_error("learning_rate must be > 0");
    if (!(huber_delta > 0.0)) throw data_error("huber_delta must be > 0");
    if (batch_size == 0) throw data_error("batch_size must be at least 1");
  }
};

struct TrainReport {
  std::vector<double> epoch_mean_loss;
  std::vector<double> epoch_val_mae; // NaN entries when no validation split
  double final_val_mae = std::numeric_limits<double>::quiet_NaN();
  double elapsed_seconds = 0.0;
};

inline double huber(double prediction, double target, double delta) {
  const double e = std::abs(prediction - target);
  if (e <= delta) return 0.5 * e * e;
  return delta * (e - 0.5 * delta);
}

inline double huber_derivative(double error, double delta) {
  if (std::abs(error) <= delta) return error;
  return error > 0.0 ? delta : -delta;
}

// Gradient of the one-step Huber loss w.r.t. the trained parameters.
// W_f receives no gradient: the output path is x_t + dx_mem only.
struct CometGradient {
  Matrix w_short, w_medium, w_long;
  double log_w_short = 0.0;
  double log_w_medium = 0.0;
  double log_w_long = 0.0;
  double log_gamma = 0.0;

  static CometGradient zero(const CometModel& model) {
    CometGradient g;
    g.w_short = Matrix(model.encoder.weights_short.rows,
                       model.encoder.weights_short.cols);
    g.w_medium = Matrix(model.encoder.weights_medium.rows,
                        model.encoder.weights_medium.cols);
    g.w_long = Matrix(model.encoder.weights_long.rows,
                      model.encoder.weights_long.cols);
    return g;
  }

  void add_scaled(const CometGradient& other, double scale) {
    auto axpy = [scale](Matrix& dst, const Matrix& src) {
      for (std::size_t i = 0; i < dst.data.size(); ++i)
        dst.data[i] += scale * src.data[i];
    };
    axpy(w_short, other.w_short);
    axpy(w_medium, other.w_medium);
    axpy(w_long, other.w_long);
    log_w_short += scale * other.log_w_short;
    log_w_medium += scale * other.log_w_medium;
    log_w_long += scale * other.log_w_long;
    log_gamma += scale * other.log_gamma;
  }
};

// Teacher-forced one-step loss at an anchor. `anchor_end` is the
// exclusive-end history position: the prediction uses windows ending at
// anchor_end and targets series[anchor_end].
//
// Gradient conventions (straight-through retrieval training):
//   - the top-K index set is treated as constant,
//   - stored memory entries are treated as constants even though they were
//     produced by the same encoder weights,
//   - alphas are differentiable in gamma, the distance weights, and the
//     query encodings, which are differentiable in the encoder weights.
inline CometGradient loss_gradient(const CometModel& model,
                                   std::size_t anchor_end,
                                   const TimeSeries& series, double delta,
                                   double* loss_out = nullptr) {
  const std::size_t n = series.size();
  if (anchor_end < model.window_spec.long_len || anchor_end >= n)
    throw data_error("invalid training anchor " + std::to_string(anchor_end));

  const BehaviorEncoding enc =
      encode_multiscale(series, anchor_end, model.encoder, model.window_spec);
  const AggregateResult agg =
      aggregate(topk(enc, model.memory, model.retrieval), model.memory,
                model.retrieval);
  const double x_t = series[anchor_end - 1];
  const double target = series[anchor_end];
  const double prediction = x_t + agg.dx_mem;
  const double error = prediction - target;
  if (loss_out) *loss_out = huber(prediction, target, delta);

  const std::size_t k = agg.hits.size();
  const double uniform = RetrievalParams::mix_uniform / static_cast<double>(k);
  const double g_pred = huber_derivative(error, delta);
  const double gamma = model.retrieval.gamma();
  const double ws = model.retrieval.w_short();
  const double wm = model.retrieval.w_medium();
  const double wl = model.retrieval.w_long();

  // dL/ds_j through dx_mem = sum_j (0.7 s_j + 0.3/K) dx_j.
  std::vector<double> s(k), u(k);
  double dot = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    s[j] = (agg.hits[j].alpha - uniform) / RetrievalParams::mix_softmax;
    u[j] = RetrievalParams::mix_softmax * g_pred *
           model.memory.entries[agg.hits[j].entry_index].dx;
    dot += u[j] * s[j];
  }

  CometGradient grad = CometGradient::zero(model);
  const std::size_t dim = model.latent_dim();
  std::vector<double> gz_short(dim, 0.0), gz_medium(dim, 0.0),
      gz_long(dim, 0.0);
  double g_gamma = 0.0, g_ws = 0.0, g_wm = 0.0, g_wl = 0.0;

  for (std::size_t j = 0; j < k; ++j) {
    // softmax backward for logits a_j = -gamma * d_j
    const double g_logit = s[j] * (u[j] - dot);
    const double d_j = agg.hits[j].distance;
    const double g_dist = -gamma * g_logit;
    g_gamma += -d_j * g_logit;

    const MemoryEntry& e = model.memory.entries[agg.hits[j].entry_index];
    g_ws += g_dist * l1(enc.z_short, e.z_short);
    g_wm += g_dist * l1(enc.z_medium, e.z_medium);
    g_wl += g_dist * l1(enc.z_long, e.z_long);
    auto sgn = [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); };
    for (std::size_t d = 0; d < dim; ++d) {
      gz_short[d] += g_dist * ws * sgn(enc.z_short[d] - e.z_short[d]);
      gz_medium[d] += g_dist * wm * sgn(enc.z_medium[d] - e.z_medium[d]);
      gz_long[d] += g_dist * wl * sgn(enc.z_long[d] - e.z_long[d]);
    }
  }

  // log-parameterization: d/dlog(w) = w * d/dw
  grad.log_w_short = ws * g_ws;
  grad.log_w_medium = wm * g_wm;
  grad.log_w_long = wl * g_wl;
  grad.log_gamma = gamma * g_gamma;

  // encoder weights through the query encodings: z = W * window
  auto outer = [&](Matrix& g, const std::vector<double>& gz,
                   std::span<const double> win) {
    for (std::size_t d = 0; d < dim; ++d)
      for (std::size_t c = 0; c < win.size(); ++c)
        g(d, c) += gz[d] * win[c];
  };
  outer(grad.w_short, gz_short,
        window(series, anchor_end, model.window_spec.short_len));
  outer(grad.w_medium, gz_medium,
        window(series, anchor_end, model.window_spec.medium_len));
  outer(grad.w_long, gz_long,
        window(series, anchor_end, model.window_spec.long_len));
  return grad;
}

// Teacher-forced one-step MAE of a model over a series (used for
// validation-based model selection).
inline double one_step_mae(const CometModel& model, const TimeSeries& series) {
  const std::size_t first = model.window_spec.long_len;
  if (series.size() <= first) throw data_error("series too short for one-step MAE");
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t end = first; end < series.size(); ++end) {
    const BehaviorEncoding enc =
        encode_multiscale(series, end, model.encoder, model.window_spec);
    const AggregateResult agg =
        aggregate(topk(enc, model.memory, model.retrieval), model.memory,
                  model.retrieval);
    total += std::abs(series[end - 1] + agg.dx_mem - series[end]);
    ++count;
  }
  return total / static_cast<double>(count);
}

// Mini-batch gradient descent over teacher-forced anchors. The history at
// every anchor is ground truth; predictions are never fed back during
// training. Memory is rebuilt from the current encoder weights at each
// epoch end when memory_rebuild is set.
inline std::pair<CometModel, TrainReport> train(
    const TimeSeries& train_series, const TimeSeries& validation_series,
    const WindowSpec& window_spec, const TrainConfig& config,
    std::size_t latent_dim, std::size_t k) {
  config.validate();
  window_spec.validate();
  validate_finite(train_series);
  const auto started = std::chrono::steady_clock::now();

  Rng rng(config.seed);
  CometModel model;
  model.window_spec = window_spec;
  model.encoder = EncoderParams::init(latent_dim, window_spec, rng);
  model.correction = CorrectionParams::init(latent_dim, rng);
  model.retrieval.k = k;
  model.memory = build_memory(train_series, model.encoder, window_spec);
  if (model.memory.count() < k)
    throw data_error("training series too short: memory has " +
                     std::to_string(model.memory.count()) +
                     " entries but K = " + std::to_string(k));

  const std::size_t n = train_series.size();
  const std::size_t first_anchor = window_spec.long_len;
  const std::size_t anchor_count = n - first_anchor; // anchors in [first, n-1]
  if (anchor_count == 0) throw data_error("no supervised anchors available");

  const bool has_validation =
      validation_series.size() > window_spec.long_len;

  TrainReport report;
  CometModel best = model;
  double best_val = std::numeric_limits<double>::infinity();

  auto apply = [&](const CometGradient& g, double scale) {
    for (std::size_t i = 0; i < model.encoder.weights_short.data.size(); ++i)
      model.encoder.weights_short.data[i] -= scale * g.w_short.data[i];
    for (std::size_t i = 0; i < model.encoder.weights_medium.data.size(); ++i)
      model.encoder.weights_medium.data[i] -= scale * g.w_medium.data[i];
    for (std::size_t i = 0; i < model.encoder.weights_long.data.size(); ++i)
      model.encoder.weights_long.data[i] -= scale * g.w_long.data[i];
    model.retrieval.log_w_short -= scale * g.log_w_short;
    model.retrieval.log_w_medium -= scale * g.log_w_medium;
    model.retrieval.log_w_long -= scale * g.log_w_long;
    model.retrieval.log_gamma -= scale * g.log_gamma;
  };

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::size_t batch_fill = 0;
    CometGradient batch = CometGradient::zero(model);
    for (std::size_t a = 0; a < anchor_count; ++a) {
      double loss = 0.0;
      CometGradient g = loss_gradient(model, first_anchor + a, train_series,
                                      config.huber_delta, &loss);
      if (!std::isfinite(loss))
        throw numeric_error("training diverged: non-finite loss at epoch " +
                            std::to_string(epoch) + ", anchor " +
                            std::to_string(first_anchor + a));
      epoch_loss += loss;
      batch.add_scaled(g, 1.0);
      ++batch_fill;
      if (batch_fill == config.batch_size || a + 1 == anchor_count) {
        apply(batch, config.learning_rate / static_cast<double>(batch_fill));
        batch = CometGradient::zero(model);
        batch_fill = 0;
      }
    }
    report.epoch_mean_loss.push_back(epoch_loss /
                                     static_cast<double>(anchor_count));

    if (config.memory_rebuild)
      model.memory = build_memory(train_series, model.encoder, window_spec);

    double val_mae = std::numeric_limits<double>::quiet_NaN();
    if (has_validation) {
      val_mae = one_step_mae(model, validation_series);
      if (val_mae < best_val) {
        best_val = val_mae;
        best = model;
      }
    }
    report.epoch_val_mae.push_back(val_mae);
  }

  if (!has_validation) best = model;
  report.final_val_mae = has_validation ? best_val : one_step_mae(best, train_series);
  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
          .count();
  return {std::move(best), std::move(report)};
}

} // namespace comet
