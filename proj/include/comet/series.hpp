#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "comet/error.hpp"

namespace comet {

// Univariate, uniformly sampled, raw values. No normalization happens
// anywhere in the pipeline; encoders consume these values as-is.
struct TimeSeries {
  std::vector<double> values;

  TimeSeries() = default;
  explicit TimeSeries(std::vector<double> v) : values(std::move(v)) {}

  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }
  double back() const { return values.back(); }
  double operator[](std::size_t i) const { return values[i]; }
};

inline void validate_finite(const TimeSeries& s) {
  for (double v : s.values)
    if (!std::isfinite(v)) throw data_error("series contains NaN/Inf");
}

struct WindowSpec {
  std::size_t short_len = 12;
  std::size_t medium_len = 24;
  std::size_t long_len = 60;

  void validate() const {
    if (short_len == 0 || short_len > medium_len || medium_len > long_len)
      throw data_error("window spec must satisfy 0 < short <= medium <= long");
  }
};

struct SplitSpec {
  double train_fraction = 0.7;
  double validation_fraction = 0.1;

  void validate() const {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
      throw data_error("train_fraction must lie in (0,1)");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
      throw data_error("validation_fraction must lie in [0,1)");
    if (train_fraction + validation_fraction > 1.0)
      throw data_error("split fractions sum to more than 1");
  }
};

struct SplitResult {
  TimeSeries train;
  TimeSeries validation;
  TimeSeries test;
};

// Trailing window of `len` values ending at position `end` (exclusive-end
// indexing: the window covers values[end-len .. end-1], i.e. x_{end-len+1}
// .. x_{end} in 1-based notation).
inline std::span<const double> window(const TimeSeries& s, std::size_t end,
                                      std::size_t len) {
  if (end > s.size() || end < len)
    throw data_error("insufficient history: need " + std::to_string(len) +
                     " values ending at position " + std::to_string(end) +
                     ", have " + std::to_string(std::min(end, s.size())));
  return {s.values.data() + (end - len), len};
}

// Contiguous chronological split; no shuffling. Non-empty segments must be
// long enough to admit windows and increments (>= min_segment_len).
inline SplitResult split(const TimeSeries& s, const SplitSpec& spec,
                         std::size_t min_segment_len) {
  spec.validate();
  const std::size_t n = s.size();
  const auto n_train = static_cast<std::size_t>(
      std::floor(spec.train_fraction * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(
      std::floor(spec.validation_fraction * static_cast<double>(n)));
  const std::size_t n_test = n - n_train - n_val;

  auto check = [&](const char* name, std::size_t len) {
    if (len > 0 && len < min_segment_len)
      throw data_error(std::string(name) + " segment too short: " +
                       std::to_string(len) + " < " +
                       std::to_string(min_segment_len));
  };
  check("train", n_train);
  check("validation", n_val);
  check("test", n_test);
  if (n_train == 0) throw data_error("train segment is empty");

  SplitResult out;
  out.train.values.assign(s.values.begin(), s.values.begin() + n_train);
  out.validation.values.assign(s.values.begin() + n_train,
                               s.values.begin() + n_train + n_val);
  out.test.values.assign(s.values.begin() + n_train + n_val, s.values.end());
  return out;
}

} // namespace comet
