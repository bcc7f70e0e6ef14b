#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "comet/error.hpp"
#include "comet/rng.hpp"
#include "comet/series.hpp"

namespace comet {

// Regime-switching random walk with mean reversion and a deterministic
// cycle. Each regime holds its own drift, volatility, and reversion anchor;
// regime durations are geometric. Fully determined by the seed.
struct GenConfig {
  std::uint64_t seed = 0;
  std::size_t length = 5000;
  std::size_t regime_mean_duration = 400;
  double drift_min = -0.002;
  double drift_max = 0.002;
  double volatility_min = 0.005;
  double volatility_max = 0.02;
  double mean_reversion_rate = 0.05;
  double cycle_amplitude = 0.01;
  std::size_t cycle_period = 150;

  void validate() const {
    if (length < 124) throw data_error("generated length must be at least 124");
    if (drift_min > drift_max || volatility_min > volatility_max)
      throw data_error("generator ranges must be well-ordered");
    if (volatility_min < 0.0) throw data_error("volatility must be nonnegative");
    if (!(mean_reversion_rate >= 0.0 && mean_reversion_rate < 1.0))
      throw data_error("mean_reversion_rate must lie in [0,1)");
    if (cycle_period == 0) throw data_error("cycle_period must be positive");
  }
};

inline TimeSeries generate(const GenConfig& config,
                           std::size_t* switch_count = nullptr) {
  config.validate();
  if (switch_count) *switch_count = 0;
  Rng rng(config.seed);
  const double switch_prob =
      1.0 / static_cast<double>(config.regime_mean_duration);
  const double two_pi = 2.0 * std::numbers::pi;
  const double period = static_cast<double>(config.cycle_period);

  TimeSeries series;
  series.values.reserve(config.length);
  double x = 1.0;
  series.values.push_back(x);

  double drift = rng.uniform(config.drift_min, config.drift_max);
  double sigma = rng.uniform(config.volatility_min, config.volatility_max);
  double anchor = x;

  for (std::size_t t = 1; t < config.length; ++t) {
    if (rng.uniform() < switch_prob) {
      if (switch_count) ++*switch_count;
      drift = rng.uniform(config.drift_min, config.drift_max);
      sigma = rng.uniform(config.volatility_min, config.volatility_max);
      anchor = x;
    }
    const double td = static_cast<double>(t);
    const double cycle =
        config.cycle_amplitude *
        (std::sin(two_pi * td / period) - std::sin(two_pi * (td - 1.0) / period));
    x = x + drift + config.mean_reversion_rate * (anchor - x) + cycle +
        sigma * rng.gaussian();
    series.values.push_back(x);
  }
  validate_finite(series);
  return series;
}

} // namespace comet
