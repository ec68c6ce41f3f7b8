#pragma once

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "proxpty/metrics.hpp"

namespace proxpty {

/// Shortest decimal representation that round-trips the exact double
/// (std::to_chars). Infinities and NaN print as "inf"/"-inf"/"nan".
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw std::runtime_error("parse_double: malformed value '" + std::string(text) + "'");
  }
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(ch);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

inline constexpr const char* kTraceCsvHeader =
    "t,nll,rmse,lambda,dual_residual,backtracks,wall_time";

/// Trace serialization: '.' decimal separator, '\n' line endings, mandatory
/// header, empty cells where a quantity does not apply. Set lambda_applies
/// to false for engines without a step size (ER, DM).
inline void write_trace_csv(const std::string& path, const std::vector<MetricTraceRecord>& trace,
                            bool lambda_applies = true) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("trace csv: cannot open '" + path + "' for writing");
  out << kTraceCsvHeader << "\n";
  for (const auto& rec : trace) {
    out << rec.t << ',' << format_double(rec.nll) << ',';
    if (rec.rmse) out << format_double(*rec.rmse);
    out << ',';
    if (lambda_applies) out << format_double(rec.lambda);
    out << ',';
    if (rec.dual_residual) out << format_double(*rec.dual_residual);
    out << ',' << rec.backtracks << ',' << format_double(rec.wall_time) << "\n";
  }
  if (!out) throw std::runtime_error("trace csv: short write to '" + path + "'");
}

inline std::vector<MetricTraceRecord> read_trace_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("trace csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kTraceCsvHeader) {
    throw std::runtime_error("trace csv: missing or unexpected header in '" + path + "'");
  }
  std::vector<MetricTraceRecord> trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 7) throw std::runtime_error("trace csv: malformed row in '" + path + "'");
    MetricTraceRecord rec;
    rec.t = static_cast<int>(parse_double(cells[0]));
    rec.nll = parse_double(cells[1]);
    if (!cells[2].empty()) rec.rmse = parse_double(cells[2]);
    rec.lambda = cells[3].empty() ? 0.0 : parse_double(cells[3]);
    if (!cells[4].empty()) rec.dual_residual = parse_double(cells[4]);
    rec.backtracks = static_cast<int>(parse_double(cells[5]));
    rec.wall_time = parse_double(cells[6]);
    trace.push_back(rec);
  }
  return trace;
}

/// Plain-text run manifest: one "key=value" per line, in insertion order.
inline void write_manifest(const std::string& path,
                           const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("manifest: cannot open '" + path + "' for writing");
  for (const auto& [key, value] : entries) out << key << '=' << value << "\n";
  if (!out) throw std::runtime_error("manifest: short write to '" + path + "'");
}

inline std::vector<std::pair<std::string, std::string>> read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("manifest: cannot open '" + path + "'");
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("manifest: malformed line '" + line + "'");
    entries.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  return entries;
}

}  // namespace proxpty
