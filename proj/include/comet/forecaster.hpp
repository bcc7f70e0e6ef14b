#pragma once

#include <memory>
#include <string>

#include "comet/series.hpp"
#include "comet/trainer.hpp"

namespace comet {

// Shared one-step prediction contract. The evaluation harness rolls every
// model out through this interface; there are no model-specific evaluation
// paths.
class Forecaster {
public:
  virtual ~Forecaster() = default;

  virtual void fit(const TimeSeries& train_series) = 0;
  virtual double predict_next(const TimeSeries& history) const = 0;
  virtual std::size_t parameter_bytes() const = 0;
  virtual std::size_t min_history() const = 0;
  virtual std::string name() const = 0;
};

// Predicts the last observed value. Not a paper baseline; used to calibrate
// the evaluation harness (its drift on a ramp must be exactly linear).
class PersistenceForecaster final : public Forecaster {
public:
  void fit(const TimeSeries&) override {}
  double predict_next(const TimeSeries& history) const override {
    if (history.empty()) throw data_error("persistence: empty history");
    return history.back();
  }
  std::size_t parameter_bytes() const override { return 0; }
  std::size_t min_history() const override { return 1; }
  std::string name() const override { return "persistence"; }
};

// COMET behind the Forecaster contract. The scalar output does not depend
// on the internal behavior state, so one-step prediction needs no carried
// state and the shared rollout driver applies unchanged.
class CometForecaster final : public Forecaster {
public:
  CometForecaster(WindowSpec window_spec, TrainConfig config,
                  std::size_t latent_dim, std::size_t k,
                  TimeSeries validation = {})
      : window_spec_(window_spec), config_(config), latent_dim_(latent_dim),
        k_(k), validation_(std::move(validation)) {}

  explicit CometForecaster(CometModel model)
      : window_spec_(model.window_spec),
        model_(std::make_shared<CometModel>(std::move(model))) {}

  void fit(const TimeSeries& train_series) override {
    auto [model, report] =
        train(train_series, validation_, window_spec_, config_, latent_dim_, k_);
    model_ = std::make_shared<CometModel>(std::move(model));
    report_ = std::move(report);
  }

  double predict_next(const TimeSeries& history) const override {
    const CometModel& m = require_model();
    const BehaviorEncoding enc =
        encode_multiscale(history, history.size(), m.encoder, m.window_spec);
    const AggregateResult agg =
        aggregate(topk(enc, m.memory, m.retrieval), m.memory, m.retrieval);
    return history.back() + agg.dx_mem;
  }

  std::size_t parameter_bytes() const override {
    return parameter_count(require_model()).param_bytes;
  }
  std::size_t memory_bytes() const {
    return parameter_count(require_model()).memory_bytes;
  }
  std::size_t min_history() const override { return window_spec_.long_len; }
  std::string name() const override { return "comet"; }

  const CometModel& model() const { return require_model(); }
  const TrainReport& report() const { return report_; }

private:
  const CometModel& require_model() const {
    if (!model_) throw data_error("comet forecaster used before fit()");
    return *model_;
  }

  WindowSpec window_spec_;
  TrainConfig config_;
  std::size_t latent_dim_ = 8;
  std::size_t k_ = 8;
  TimeSeries validation_;
  std::shared_ptr<CometModel> model_;
  TrainReport report_;
};

} // namespace comet
