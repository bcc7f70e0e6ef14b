#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "comet/encoder.hpp"
#include "comet/error.hpp"
#include "comet/series.hpp"

namespace comet {

// One stored transition: the three window encodings at time i, the
// short-encoding increment z_{s,i} - z_{s,i-1}, and the next-value
// increment x_{i+1} - x_i.
struct MemoryEntry {
  std::vector<double> z_short;
  std::vector<double> z_medium;
  std::vector<double> z_long;
  std::vector<double> dz;
  double dx = 0.0;
};

struct MemoryStore {
  std::vector<MemoryEntry> entries;

  std::size_t count() const { return entries.size(); }

  double max_abs_dx() const {
    double m = 0.0;
    for (const auto& e : entries) m = std::max(m, std::abs(e.dx));
    return m;
  }
};

// Distance weights and sharpness are stored as log-parameters; the
// effective values exp(log_*) are strictly positive by construction, which
// keeps plain gradient descent valid without clipping.
struct RetrievalParams {
  double log_w_short = 0.0;
  double log_w_medium = 0.0;
  double log_w_long = 0.0;
  double log_gamma = 0.0;
  std::size_t k = 8;

  static constexpr double mix_softmax = 0.7;
  static constexpr double mix_uniform = 0.3;

  double w_short() const { return std::exp(log_w_short); }
  double w_medium() const { return std::exp(log_w_medium); }
  double w_long() const { return std::exp(log_w_long); }
  double gamma() const { return std::exp(log_gamma); }
};

struct NeighborHit {
  std::size_t entry_index = 0;
  double distance = 0.0;
  double alpha = 0.0;
};

struct AggregateResult {
  std::vector<double> dz_mem;
  double dx_mem = 0.0;
  std::vector<NeighborHit> hits;
};

// Entries are built for i in [long_len+1, length-1] (1-based): the previous
// short encoding needs a window ending at i-1 and the increment needs
// x_{i+1}. Entry count = length - long_len - 1.
inline MemoryStore build_memory(const TimeSeries& series,
                                const EncoderParams& encoder,
                                const WindowSpec& spec) {
  const std::size_t n = series.size();
  if (n < spec.long_len + 2)
    throw data_error("series too short to build memory: need at least " +
                     std::to_string(spec.long_len + 2) + " values, have " +
                     std::to_string(n));
  MemoryStore store;
  store.entries.reserve(n - spec.long_len - 1);
  std::vector<double> prev_short =
      encode(window(series, spec.long_len, spec.short_len),
             encoder.weights_short);
  for (std::size_t end = spec.long_len + 1; end <= n - 1; ++end) {
    MemoryEntry e;
    e.z_short = encode(window(series, end, spec.short_len),
                       encoder.weights_short);
    e.z_medium = encode(window(series, end, spec.medium_len),
                        encoder.weights_medium);
    e.z_long = encode(window(series, end, spec.long_len),
                      encoder.weights_long);
    e.dz.resize(encoder.latent_dim);
    for (std::size_t d = 0; d < encoder.latent_dim; ++d)
      e.dz[d] = e.z_short[d] - prev_short[d];
    e.dx = series[end] - series[end - 1];
    prev_short = e.z_short;
    store.entries.push_back(std::move(e));
  }
  return store;
}

inline double l1(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw data_error("L1 distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

inline double weighted_l1_distance(const BehaviorEncoding& query,
                                   const MemoryEntry& entry,
                                   const RetrievalParams& params) {
  return params.w_short() * l1(query.z_short, entry.z_short) +
         params.w_medium() * l1(query.z_medium, entry.z_medium) +
         params.w_long() * l1(query.z_long, entry.z_long);
}

// Full linear scan; the K smallest distances, ties broken by smaller entry
// index, result sorted ascending by (distance, index). No approximate index.
inline std::vector<NeighborHit> topk(const BehaviorEncoding& query,
                                     const MemoryStore& store,
                                     const RetrievalParams& params) {
  const std::size_t k = params.k;
  if (k == 0) throw data_error("k must be at least 1");
  if (store.count() < k)
    throw data_error("memory store smaller than K: " +
                     std::to_string(store.count()) + " < " + std::to_string(k));

  std::vector<NeighborHit> best;
  best.reserve(k + 1);
  auto cmp = [](const NeighborHit& a, const NeighborHit& b) {
    return a.distance < b.distance ||
           (a.distance == b.distance && a.entry_index < b.entry_index);
  };
  for (std::size_t i = 0; i < store.count(); ++i) {
    NeighborHit hit{i, weighted_l1_distance(query, store.entries[i], params),
                    0.0};
    auto pos = std::upper_bound(best.begin(), best.end(), hit, cmp);
    if (pos != best.end() || best.size() < k) {
      best.insert(pos, hit);
      if (best.size() > k) best.pop_back();
    }
  }
  return best;
}

// Softmax over -gamma*d with max-subtraction, then mixed with a uniform
// component: alpha_i <- 0.7*alpha_i + 0.3/K. The mix floors every
// neighbor's weight at 0.3/K and keeps dx_mem a convex combination of
// stored increments.
inline AggregateResult aggregate(std::vector<NeighborHit> hits,
                                 const MemoryStore& store,
                                 const RetrievalParams& params) {
  if (hits.empty()) throw data_error("aggregate: empty neighborhood");
  const double gamma = params.gamma();
  const std::size_t k = hits.size();

  double max_logit = -std::numeric_limits<double>::infinity();
  for (const auto& h : hits) max_logit = std::max(max_logit, -gamma * h.distance);
  double denom = 0.0;
  std::vector<double> expv(k);
  for (std::size_t i = 0; i < k; ++i) {
    expv[i] = std::exp(-gamma * hits[i].distance - max_logit);
    denom += expv[i];
  }
  const double uniform = RetrievalParams::mix_uniform / static_cast<double>(k);
  for (std::size_t i = 0; i < k; ++i)
    hits[i].alpha = RetrievalParams::mix_softmax * expv[i] / denom + uniform;

  AggregateResult out;
  const std::size_t dim = store.entries.front().dz.size();
  out.dz_mem.assign(dim, 0.0);
  out.dx_mem = 0.0;
  for (const auto& h : hits) {
    const MemoryEntry& e = store.entries[h.entry_index];
    for (std::size_t d = 0; d < dim; ++d) out.dz_mem[d] += h.alpha * e.dz[d];
    out.dx_mem += h.alpha * e.dx;
  }
  out.hits = std::move(hits);
  return out;
}

} // namespace comet
