#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "comet/matrix.hpp"
#include "comet/rng.hpp"
#include "comet/series.hpp"

namespace comet {

// Bias-free linear encodings of the three trailing windows. Recomputed from
// scratch at every step; no state.
struct BehaviorEncoding {
  std::vector<double> z_short;
  std::vector<double> z_medium;
  std::vector<double> z_long;
};

struct EncoderParams {
  Matrix weights_short;  // D x short_len
  Matrix weights_medium; // D x medium_len
  Matrix weights_long;   // D x long_len
  std::size_t latent_dim = 0;

  static EncoderParams init(std::size_t latent_dim, const WindowSpec& spec,
                            Rng& rng) {
    EncoderParams p;
    p.latent_dim = latent_dim;
    p.weights_short = Matrix(latent_dim, spec.short_len);
    p.weights_medium = Matrix(latent_dim, spec.medium_len);
    p.weights_long = Matrix(latent_dim, spec.long_len);
    // Uniform in [-1/L, 1/L] so initial encodings stay on the order of the
    // signal magnitude regardless of window length.
    for (Matrix* m : {&p.weights_short, &p.weights_medium, &p.weights_long}) {
      const double scale = 1.0 / static_cast<double>(m->cols);
      for (double& w : m->data) w = rng.uniform(-scale, scale);
    }
    return p;
  }
};

inline std::vector<double> encode(std::span<const double> window,
                                  const Matrix& weights) {
  return matvec(weights, window);
}

inline BehaviorEncoding encode_multiscale(const TimeSeries& series,
                                          std::size_t end_index,
                                          const EncoderParams& params,
                                          const WindowSpec& spec) {
  BehaviorEncoding enc;
  enc.z_short = encode(window(series, end_index, spec.short_len),
                       params.weights_short);
  enc.z_medium = encode(window(series, end_index, spec.medium_len),
                        params.weights_medium);
  enc.z_long = encode(window(series, end_index, spec.long_len),
                      params.weights_long);
  return enc;
}

} // namespace comet
