#pragma once

#include <cstddef>
#include <vector>

#include "comet/encoder.hpp"
#include "comet/matrix.hpp"
#include "comet/memory.hpp"
#include "comet/series.hpp"

namespace comet {

// Bias-free linear map from the concatenation [z_t; z_s; z_m; z_l] to a
// latent correction increment. Note the correction feeds only the internal
// state, never the scalar output; see predict_step.
struct CorrectionParams {
  Matrix weights; // D x 4D

  static CorrectionParams init(std::size_t latent_dim, Rng& rng) {
    CorrectionParams p;
    p.weights = Matrix(latent_dim, 4 * latent_dim);
    const double scale = 1.0 / static_cast<double>(4 * latent_dim);
    for (double& w : p.weights.data) w = rng.uniform(-scale, scale);
    return p;
  }
};

struct BehaviorState {
  std::vector<double> z; // zero-initialized at rollout start

  static BehaviorState zero(std::size_t latent_dim) {
    BehaviorState s;
    s.z.assign(latent_dim, 0.0);
    return s;
  }
};

struct CometModel {
  EncoderParams encoder;
  CorrectionParams correction;
  RetrievalParams retrieval;
  MemoryStore memory;
  WindowSpec window_spec;

  std::size_t latent_dim() const { return encoder.latent_dim; }
};

struct StepResult {
  double x_next = 0.0;
  BehaviorState state;
  AggregateResult diagnostics;
};

struct RolloutResult {
  TimeSeries predictions;
  std::vector<BehaviorState> states; // empty unless trace requested
  std::vector<double> per_step_dx;
};

inline std::vector<double> correction_term(const BehaviorState& state,
                                           const BehaviorEncoding& enc,
                                           const CorrectionParams& params) {
  const std::size_t dim = state.z.size();
  if (params.weights.cols != 4 * dim || enc.z_short.size() != dim)
    throw data_error("correction_term: dimension mismatch");
  std::vector<double> cat;
  cat.reserve(4 * dim);
  cat.insert(cat.end(), state.z.begin(), state.z.end());
  cat.insert(cat.end(), enc.z_short.begin(), enc.z_short.end());
  cat.insert(cat.end(), enc.z_medium.begin(), enc.z_medium.end());
  cat.insert(cat.end(), enc.z_long.begin(), enc.z_long.end());
  return matvec(params.weights, cat);
}

// One inference step: encode trailing windows, retrieve, aggregate, update
// state. The scalar output is x_t + dx_mem only; the internal state and the
// learned correction are carried faithfully but do not feed the output.
inline StepResult predict_step(const CometModel& model,
                               const TimeSeries& history,
                               const BehaviorState& state) {
  const BehaviorEncoding enc = encode_multiscale(
      history, history.size(), model.encoder, model.window_spec);
  AggregateResult agg =
      aggregate(topk(enc, model.memory, model.retrieval), model.memory,
                model.retrieval);
  const std::vector<double> dz_learned =
      correction_term(state, enc, model.correction);

  StepResult out;
  out.x_next = history.back() + agg.dx_mem;
  out.state.z.resize(model.latent_dim());
  for (std::size_t d = 0; d < model.latent_dim(); ++d)
    out.state.z[d] = state.z[d] + agg.dz_mem[d] + dz_learned[d];
  out.diagnostics = std::move(agg);
  return out;
}

// Autoregressive rollout: each prediction is appended to the working
// history and fed back. State starts at zero.
inline RolloutResult rollout(const CometModel& model,
                             const TimeSeries& seed_history,
                             std::size_t horizon, bool trace_states = false) {
  if (horizon == 0) throw data_error("rollout horizon must be at least 1");
  if (seed_history.size() < model.window_spec.long_len)
    throw data_error("seed history shorter than long window");

  TimeSeries work = seed_history;
  BehaviorState state = BehaviorState::zero(model.latent_dim());
  RolloutResult out;
  out.predictions.values.reserve(horizon);
  out.per_step_dx.reserve(horizon);
  for (std::size_t h = 0; h < horizon; ++h) {
    StepResult step = predict_step(model, work, state);
    out.predictions.values.push_back(step.x_next);
    out.per_step_dx.push_back(step.diagnostics.dx_mem);
    if (trace_states) out.states.push_back(step.state);
    state = std::move(step.state);
    work.values.push_back(step.x_next);
  }
  return out;
}

struct FootprintCounts {
  std::size_t param_count = 0;
  std::size_t param_bytes = 0;
  std::size_t memory_bytes = 0;
};

// Parameters: three encoders (96*D), W_f (4*D^2), and the four retrieval
// scalars. Serialized precision is single, hence 4 bytes each; one memory
// entry is 4D+1 floats.
inline FootprintCounts parameter_count(const CometModel& model) {
  const std::size_t d = model.latent_dim();
  const WindowSpec& w = model.window_spec;
  FootprintCounts f;
  f.param_count = d * (w.short_len + w.medium_len + w.long_len) + 4 * d * d + 4;
  f.param_bytes = f.param_count * 4;
  f.memory_bytes = model.memory.count() * (4 * d + 1) * 4;
  return f;
}

} // namespace comet
