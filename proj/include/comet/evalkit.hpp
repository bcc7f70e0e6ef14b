#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "comet/datagen.hpp"
#include "comet/forecaster.hpp"
#include "comet/series.hpp"

namespace comet {

struct EvalConfig {
  std::vector<std::size_t> horizons_short = {1, 5};
  std::vector<std::size_t> drift_horizons = default_drift_horizons();
  std::size_t rollout_horizon = 300;
  std::size_t anchor_stride = 10;
  // first anchor shared by every model so all metrics use identical anchors;
  // must be >= the largest min_history among compared models
  std::size_t min_anchor = 60;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3};

  static std::vector<std::size_t> default_drift_horizons() {
    std::vector<std::size_t> h{1};
    for (std::size_t v = 10; v <= 200; v += 10) h.push_back(v);
    return h;
  }

  void validate() const {
    if (anchor_stride == 0) throw data_error("anchor_stride must be positive");
    for (std::size_t h : horizons_short)
      if (h == 0) throw data_error("horizons must be at least 1");
    for (std::size_t h : drift_horizons)
      if (h == 0) throw data_error("horizons must be at least 1");
  }
};

// Autoregressive rollout of any Forecaster: predictions are appended to the
// working history and fed back.
inline std::vector<double> roll_forecaster(const Forecaster& model,
                                           const TimeSeries& seed_history,
                                           std::size_t horizon) {
  if (seed_history.size() < model.min_history())
    throw data_error("rollout: seed history shorter than model minimum");
  TimeSeries work = seed_history;
  std::vector<double> out;
  out.reserve(horizon);
  for (std::size_t h = 0; h < horizon; ++h) {
    const double next = model.predict_next(work);
    if (!std::isfinite(next))
      throw numeric_error("rollout produced non-finite prediction");
    out.push_back(next);
    work.values.push_back(next);
  }
  return out;
}

inline std::vector<std::size_t> eval_anchors(std::size_t series_len,
                                             std::size_t min_anchor,
                                             std::size_t max_horizon,
                                             std::size_t stride) {
  std::vector<std::size_t> anchors;
  for (std::size_t t = min_anchor; t + max_horizon <= series_len; t += stride)
    anchors.push_back(t);
  if (anchors.empty())
    throw data_error("no valid evaluation anchors (series too short for "
                     "horizon " + std::to_string(max_horizon) + ")");
  return anchors;
}

// Mean |x_hat_{t+h} - x_{t+h}| over anchors: one rollout per anchor up to
// max(horizons), intermediate steps read off the same trajectory. The error
// at horizon h is the error at exactly step h, not an average over 1..h.
inline std::vector<std::pair<std::size_t, double>> drift_curve(
    const Forecaster& model, const TimeSeries& test,
    const std::vector<std::size_t>& horizons, std::size_t stride,
    std::size_t min_anchor) {
  std::size_t max_h = 0;
  for (std::size_t h : horizons) max_h = std::max(max_h, h);
  const auto anchors = eval_anchors(test.size(), min_anchor, max_h, stride);

  std::vector<double> sums(horizons.size(), 0.0);
  for (std::size_t t : anchors) {
    TimeSeries history;
    history.values.assign(test.values.begin(), test.values.begin() + t);
    const std::vector<double> preds = roll_forecaster(model, history, max_h);
    for (std::size_t i = 0; i < horizons.size(); ++i) {
      const std::size_t h = horizons[i];
      sums[i] += std::abs(preds[h - 1] - test[t + h - 1]);
    }
  }
  std::vector<std::pair<std::size_t, double>> out;
  out.reserve(horizons.size());
  for (std::size_t i = 0; i < horizons.size(); ++i)
    out.emplace_back(horizons[i], sums[i] / static_cast<double>(anchors.size()));
  return out;
}

// Anchors require room for `anchor_horizon` steps (defaults to h) so that
// drift_curve and mae_at_horizon agree exactly when given the same anchor
// constraint.
inline double mae_at_horizon(const Forecaster& model, const TimeSeries& test,
                             std::size_t h, std::size_t stride,
                             std::size_t min_anchor,
                             std::size_t anchor_horizon = 0) {
  if (anchor_horizon == 0) anchor_horizon = h;
  if (anchor_horizon < h)
    throw data_error("anchor_horizon smaller than requested horizon");
  const auto anchors =
      eval_anchors(test.size(), min_anchor, anchor_horizon, stride);
  double sum = 0.0;
  for (std::size_t t : anchors) {
    TimeSeries history;
    history.values.assign(test.values.begin(), test.values.begin() + t);
    const std::vector<double> preds = roll_forecaster(model, history, h);
    sum += std::abs(preds[h - 1] - test[t + h - 1]);
  }
  return sum / static_cast<double>(anchors.size());
}

struct ModelSeedReport {
  std::uint64_t seed = 0;
  std::string model;
  std::vector<std::pair<std::size_t, double>> mae_short; // (h, mae)
  std::vector<std::pair<std::size_t, double>> drift;
  std::size_t rollout_anchor = 0;
  std::vector<double> rollout_predicted;
  std::vector<double> rollout_actual;
  std::optional<std::size_t> param_bytes; // nullopt renders as "--"
  std::optional<std::size_t> memory_bytes;
};

using ForecasterFactory =
    std::function<std::unique_ptr<Forecaster>(std::uint64_t seed,
                                              const TimeSeries& validation)>;

struct NamedFactory {
  std::string name;
  ForecasterFactory make;
};

// One full experiment cell: generate, split, fit, evaluate all metrics.
inline ModelSeedReport evaluate_model(const Forecaster& model,
                                      std::uint64_t seed,
                                      const std::string& name,
                                      const TimeSeries& test,
                                      const EvalConfig& eval) {
  ModelSeedReport report;
  report.seed = seed;
  report.model = name;
  for (std::size_t h : eval.horizons_short)
    report.mae_short.emplace_back(
        h, mae_at_horizon(model, test, h, eval.anchor_stride, eval.min_anchor));
  report.drift = drift_curve(model, test, eval.drift_horizons,
                             eval.anchor_stride, eval.min_anchor);
  report.rollout_anchor = eval.min_anchor;
  if (eval.rollout_horizon > 0 &&
      eval.min_anchor + eval.rollout_horizon <= test.size()) {
    TimeSeries history;
    history.values.assign(test.values.begin(),
                          test.values.begin() + eval.min_anchor);
    report.rollout_predicted =
        roll_forecaster(model, history, eval.rollout_horizon);
    report.rollout_actual.assign(
        test.values.begin() + eval.min_anchor,
        test.values.begin() + eval.min_anchor + eval.rollout_horizon);
  }
  return report;
}

inline std::vector<ModelSeedReport> seed_sweep(
    const std::vector<NamedFactory>& factories, const GenConfig& gen_template,
    const EvalConfig& eval, const SplitSpec& split_spec,
    std::size_t min_segment_len) {
  eval.validate();
  std::vector<ModelSeedReport> reports;
  for (std::uint64_t seed : eval.seeds) {
    GenConfig gen_config = gen_template;
    gen_config.seed = seed;
    const TimeSeries series = generate(gen_config);
    const SplitResult parts = split(series, split_spec, min_segment_len);
    for (const NamedFactory& factory : factories) {
      std::unique_ptr<Forecaster> model = factory.make(seed, parts.validation);
      model->fit(parts.train);
      ModelSeedReport report =
          evaluate_model(*model, seed, factory.name, parts.test, eval);
      report.param_bytes = model->parameter_bytes();
      if (factory.name == "knn") report.param_bytes.reset();
      if (const auto* cf = dynamic_cast<const CometForecaster*>(model.get()))
        report.memory_bytes = cf->memory_bytes();
      reports.push_back(std::move(report));
    }
  }
  return reports;
}

namespace detail {
inline std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}
} // namespace detail

// metrics.csv: seed,model,metric,horizon,value (9 significant digits)
inline void write_metrics_csv(const std::vector<ModelSeedReport>& reports,
                              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write " + path);
  out << "seed,model,metric,horizon,value\n";
  for (const auto& r : reports) {
    for (const auto& [h, v] : r.mae_short)
      out << r.seed << ',' << r.model << ",mae," << h << ','
          << detail::fmt9(v) << '\n';
    for (const auto& [h, v] : r.drift)
      out << r.seed << ',' << r.model << ",drift," << h << ','
          << detail::fmt9(v) << '\n';
  }
  if (!out) throw data_error("write failed: " + path);
}

inline void write_rollout_csv(const ModelSeedReport& report,
                              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write " + path);
  out << "t,predicted,actual\n";
  for (std::size_t i = 0; i < report.rollout_predicted.size(); ++i)
    out << report.rollout_anchor + i << ','
        << detail::fmt9(report.rollout_predicted[i]) << ','
        << detail::fmt9(report.rollout_actual[i]) << '\n';
  if (!out) throw data_error("write failed: " + path);
}

// footprint.csv: model,param_kb,memory_kb; "--" where not applicable
inline void write_footprint_csv(const std::vector<ModelSeedReport>& reports,
                                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write " + path);
  out << "model,param_kb,memory_kb\n";
  std::vector<std::string> seen;
  for (const auto& r : reports) {
    if (std::find(seen.begin(), seen.end(), r.model) != seen.end()) continue;
    seen.push_back(r.model);
    out << r.model << ',';
    if (r.param_bytes)
      out << detail::fmt9(static_cast<double>(*r.param_bytes) / 1024.0);
    else
      out << "--";
    out << ',';
    if (r.memory_bytes)
      out << detail::fmt9(static_cast<double>(*r.memory_bytes) / 1024.0);
    else
      out << "--";
    out << '\n';
  }
  if (!out) throw data_error("write failed: " + path);
}

} // namespace comet
