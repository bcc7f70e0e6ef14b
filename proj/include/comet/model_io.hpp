#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "comet/error.hpp"
#include "comet/model.hpp"

namespace comet {

static_assert(std::endian::native == std::endian::little,
              "model file I/O assumes a little-endian host");

// Model file layout (little-endian, no padding):
//   magic "CSG1"; u16 version=1; u16 D; u16 short/medium/long lengths;
//   u32 memory count N; u16 K;
//   f32 arrays: weights_short (D*12), weights_medium (D*24),
//   weights_long (D*60), W_f (D*4D), log_w_s, log_w_m, log_w_l, log_gamma;
//   N entries of 4D+1 f32 each: z_s, z_m, z_l, dz, dx.
inline constexpr char kModelMagic[4] = {'C', 'S', 'G', '1'};
inline constexpr std::uint16_t kModelVersion = 1;

namespace detail {

template <typename T>
void write_raw(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

inline void write_f32s(std::ofstream& out, const std::vector<double>& v) {
  for (double x : v) write_raw(out, static_cast<float>(x));
}

template <typename T>
T read_raw(std::ifstream& in, const std::string& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in)
    throw data_error("truncated file: " + path + " (expected " +
                     std::to_string(sizeof(T)) + " more bytes)");
  return value;
}

inline std::vector<double> read_f32s(std::ifstream& in, std::size_t count,
                                     const std::string& path) {
  std::vector<float> buf(count);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (!in)
    throw data_error("truncated file: " + path + " (expected " +
                     std::to_string(count * sizeof(float)) +
                     " bytes of float data, got " +
                     std::to_string(in.gcount()) + ")");
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::isfinite(buf[i]))
      throw data_error("non-finite parameter in model file: " + path);
    out[i] = static_cast<double>(buf[i]);
  }
  return out;
}

} // namespace detail

inline void save_model(const CometModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write model file: " + path);
  out.write(kModelMagic, 4);
  detail::write_raw(out, kModelVersion);
  detail::write_raw(out, static_cast<std::uint16_t>(model.latent_dim()));
  detail::write_raw(out, static_cast<std::uint16_t>(model.window_spec.short_len));
  detail::write_raw(out, static_cast<std::uint16_t>(model.window_spec.medium_len));
  detail::write_raw(out, static_cast<std::uint16_t>(model.window_spec.long_len));
  detail::write_raw(out, static_cast<std::uint32_t>(model.memory.count()));
  detail::write_raw(out, static_cast<std::uint16_t>(model.retrieval.k));

  detail::write_f32s(out, model.encoder.weights_short.data);
  detail::write_f32s(out, model.encoder.weights_medium.data);
  detail::write_f32s(out, model.encoder.weights_long.data);
  detail::write_f32s(out, model.correction.weights.data);
  detail::write_raw(out, static_cast<float>(model.retrieval.log_w_short));
  detail::write_raw(out, static_cast<float>(model.retrieval.log_w_medium));
  detail::write_raw(out, static_cast<float>(model.retrieval.log_w_long));
  detail::write_raw(out, static_cast<float>(model.retrieval.log_gamma));

  for (const auto& e : model.memory.entries) {
    detail::write_f32s(out, e.z_short);
    detail::write_f32s(out, e.z_medium);
    detail::write_f32s(out, e.z_long);
    detail::write_f32s(out, e.dz);
    detail::write_raw(out, static_cast<float>(e.dx));
  }
  if (!out) throw data_error("write failed: " + path);
}

inline CometModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open model file: " + path);
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kModelMagic, 4) != 0)
    throw data_error("not a COMET model file: " + path);
  const auto version = detail::read_raw<std::uint16_t>(in, path);
  if (version != kModelVersion)
    throw data_error("unsupported model version " + std::to_string(version) +
                     " in " + path);
  const std::size_t d = detail::read_raw<std::uint16_t>(in, path);
  CometModel model;
  model.window_spec.short_len = detail::read_raw<std::uint16_t>(in, path);
  model.window_spec.medium_len = detail::read_raw<std::uint16_t>(in, path);
  model.window_spec.long_len = detail::read_raw<std::uint16_t>(in, path);
  const std::size_t n = detail::read_raw<std::uint32_t>(in, path);
  model.retrieval.k = detail::read_raw<std::uint16_t>(in, path);
  if (d == 0) throw data_error("model file has latent_dim 0: " + path);
  model.window_spec.validate();

  model.encoder.latent_dim = d;
  auto read_matrix = [&](std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    m.data = detail::read_f32s(in, rows * cols, path);
    return m;
  };
  model.encoder.weights_short = read_matrix(d, model.window_spec.short_len);
  model.encoder.weights_medium = read_matrix(d, model.window_spec.medium_len);
  model.encoder.weights_long = read_matrix(d, model.window_spec.long_len);
  model.correction.weights = read_matrix(d, 4 * d);
  model.retrieval.log_w_short = detail::read_f32s(in, 1, path)[0];
  model.retrieval.log_w_medium = detail::read_f32s(in, 1, path)[0];
  model.retrieval.log_w_long = detail::read_f32s(in, 1, path)[0];
  model.retrieval.log_gamma = detail::read_f32s(in, 1, path)[0];

  model.memory.entries.resize(n);
  for (auto& e : model.memory.entries) {
    e.z_short = detail::read_f32s(in, d, path);
    e.z_medium = detail::read_f32s(in, d, path);
    e.z_long = detail::read_f32s(in, d, path);
    e.dz = detail::read_f32s(in, d, path);
    e.dx = detail::read_f32s(in, 1, path)[0];
  }
  if (in.peek() != std::ifstream::traits_type::eof())
    throw data_error("trailing bytes after memory section: " + path);
  if (model.memory.count() < model.retrieval.k)
    throw data_error("model file memory smaller than K: " + path);
  return model;
}

} // namespace comet
