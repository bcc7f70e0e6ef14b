#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "comet/error.hpp"
#include "comet/series.hpp"

namespace comet {

// Series CSV: header "t,value", t a 0-based integer, value a decimal
// literal. Rejects NaN/Inf and non-monotonic t.
inline TimeSeries read_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open series file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw data_error("empty series file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,value")
    throw data_error("bad series CSV header (expected 't,value'): " + path);

  TimeSeries series;
  long expected_t = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw data_error("malformed series row at line " + std::to_string(lineno));
    long t = 0;
    const char* tb = line.data();
    auto [tp, tec] = std::from_chars(tb, tb + comma, t);
    if (tec != std::errc{} || tp != tb + comma)
      throw data_error("bad t at line " + std::to_string(lineno));
    if (t != expected_t)
      throw data_error("non-monotonic t at line " + std::to_string(lineno) +
                       " (expected " + std::to_string(expected_t) + ")");
    ++expected_t;
    double v = 0.0;
    try {
      std::size_t consumed = 0;
      v = std::stod(line.substr(comma + 1), &consumed);
      if (consumed != line.size() - comma - 1)
        throw std::invalid_argument("trailing junk");
    } catch (const std::exception&) {
      throw data_error("bad value at line " + std::to_string(lineno));
    }
    if (!std::isfinite(v))
      throw data_error("non-finite value at line " + std::to_string(lineno));
    series.values.push_back(v);
  }
  if (series.empty()) throw data_error("series file has no rows: " + path);
  return series;
}

inline void write_series_csv(const TimeSeries& series, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write series file: " + path);
  out << "t,value\n";
  char buf[64];
  for (std::size_t t = 0; t < series.size(); ++t) {
    // %.17g round-trips doubles exactly, so gen output re-read by train is
    // bit-identical to the in-memory series.
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", t, series.values[t]);
    out << buf;
  }
  if (!out) throw data_error("write failed: " + path);
}

} // namespace comet
