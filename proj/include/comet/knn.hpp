#pragma once

#include <algorithm>
#include <vector>

#include "comet/forecaster.hpp"
#include "comet/memory.hpp"

namespace comet {

struct KnnConfig {
  std::size_t window_len = 24;
  std::size_t k = 8;

  void validate() const {
    if (window_len == 0 || k == 0)
      throw data_error("kNN window_len and k must be at least 1");
  }
};

// Memory-based baseline: L1 match of the trailing raw window against all
// training windows, prediction = last value + mean of the k nearest
// windows' next-step increments. Delta formulation mirrors the main model
// so drift comparisons stay meaningful on trending data.
class KnnForecaster final : public Forecaster {
public:
  explicit KnnForecaster(KnnConfig config = {}) : config_(config) {
    config_.validate();
  }

  void fit(const TimeSeries& train_series) override {
    validate_finite(train_series);
    if (train_series.size() < config_.window_len + 1)
      throw data_error("kNN: training series shorter than window + 1");
    train_ = train_series;
    // one candidate per window end t in [window_len, n-1]; the increment is
    // the step taken right after that window
    candidate_count_ = train_.size() - config_.window_len;
  }

  double predict_next(const TimeSeries& history) const override {
    if (candidate_count_ == 0) throw data_error("kNN: fit() not called");
    if (history.size() < config_.window_len)
      throw data_error("kNN: insufficient history");
    const auto query = window(history, history.size(), config_.window_len);
    const std::size_t k = std::min(config_.k, candidate_count_);

    struct Hit {
      double distance;
      std::size_t index;
    };
    std::vector<Hit> best;
    best.reserve(k + 1);
    auto cmp = [](const Hit& a, const Hit& b) {
      return a.distance < b.distance ||
             (a.distance == b.distance && a.index < b.index);
    };
    for (std::size_t i = 0; i < candidate_count_; ++i) {
      const std::size_t end = config_.window_len + i;
      const auto cand = window(train_, end, config_.window_len);
      Hit hit{l1(query, cand), i};
      auto pos = std::upper_bound(best.begin(), best.end(), hit, cmp);
      if (pos != best.end() || best.size() < k) {
        best.insert(pos, hit);
        if (best.size() > k) best.pop_back();
      }
    }

    double mean_increment = 0.0;
    for (const Hit& h : best) {
      const std::size_t end = config_.window_len + h.index;
      mean_increment += train_[end] - train_[end - 1];
    }
    mean_increment /= static_cast<double>(best.size());
    return history.back() + mean_increment;
  }

  std::size_t parameter_bytes() const override { return 0; }
  std::size_t min_history() const override { return config_.window_len; }
  std::string name() const override { return "knn"; }

private:
  KnnConfig config_;
  TimeSeries train_;
  std::size_t candidate_count_ = 0;
};

} // namespace comet
