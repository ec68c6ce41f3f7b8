#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxpty/field.hpp"

namespace proxpty {

namespace detail {

/// Skips PGM whitespace and '#' comment lines, then reads one token.
inline std::string pnm_token(std::istream& in) {
  std::string token;
  int ch = in.get();
  for (;;) {
    while (ch != EOF && std::isspace(ch)) ch = in.get();
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
      continue;
    }
    break;
  }
  while (ch != EOF && !std::isspace(ch)) {
    token.push_back(static_cast<char>(ch));
    ch = in.get();
  }
  if (token.empty()) throw std::runtime_error("PGM: unexpected end of header");
  return token;
}

inline int pnm_int(std::istream& in) {
  const std::string tok = pnm_token(in);
  try {
    return std::stoi(tok);
  } catch (const std::exception&) {
    throw std::runtime_error("PGM: malformed header token '" + tok + "'");
  }
}

}  // namespace detail

/// Reads an 8- or 16-bit grayscale PGM (P2 ascii or P5 binary) and normalizes
/// samples to [0, 1] by the header maxval. 16-bit binary samples are
/// big-endian per the format.
inline RealField read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("PGM: cannot open '" + path + "'");
  const std::string magic = detail::pnm_token(in);
  if (magic != "P2" && magic != "P5") {
    throw std::runtime_error("PGM: '" + path + "' is not a P2/P5 grayscale image");
  }
  const int cols = detail::pnm_int(in);
  const int rows = detail::pnm_int(in);
  const int maxval = detail::pnm_int(in);
  if (cols <= 0 || rows <= 0 || maxval <= 0 || maxval > 65535) {
    throw std::runtime_error("PGM: bad geometry in '" + path + "'");
  }
  RealField img(rows, cols);
  if (magic == "P2") {
    for (double& v : img.values()) {
      int sample = detail::pnm_int(in);
      if (sample < 0 || sample > maxval) throw std::runtime_error("PGM: sample out of range");
      v = static_cast<double>(sample) / maxval;
    }
  } else {
    // P5: exactly one whitespace byte separates maxval from the raster; the
    // token reader has already consumed it.
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(img.size() * static_cast<std::size_t>(bytes));
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
      throw std::runtime_error("PGM: truncated raster in '" + path + "'");
    }
    for (std::size_t i = 0; i < img.size(); ++i) {
      const unsigned sample = bytes == 2
                                  ? (static_cast<unsigned>(raw[2 * i]) << 8) | raw[2 * i + 1]
                                  : raw[i];
      if (sample > static_cast<unsigned>(maxval)) {
        throw std::runtime_error("PGM: sample out of range");
      }
      img[i] = static_cast<double>(sample) / maxval;
    }
  }
  return img;
}

/// Writes a 16-bit binary PGM (P5, maxval 65535, big-endian samples).
inline void write_pgm16(const std::string& path, const std::vector<std::uint16_t>& samples,
                        int rows, int cols) {
  if (samples.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    throw std::invalid_argument("write_pgm16: sample count mismatch");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("PGM: cannot open '" + path + "' for writing");
  out << "P5\n" << cols << " " << rows << "\n65535\n";
  for (std::uint16_t s : samples) {
    const unsigned char hi = static_cast<unsigned char>(s >> 8);
    const unsigned char lo = static_cast<unsigned char>(s & 0xff);
    out.put(static_cast<char>(hi));
    out.put(static_cast<char>(lo));
  }
  if (!out) throw std::runtime_error("PGM: short write to '" + path + "'");
}

inline void write_raw_f32(const std::string& path, const std::vector<float>& values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("raw: cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
  if (!out) throw std::runtime_error("raw: short write to '" + path + "'");
}

inline std::vector<float> read_raw_f32(const std::string& path, std::size_t count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("raw: cannot open '" + path + "'");
  std::vector<float> values(count);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(float)) {
    throw std::runtime_error("raw: '" + path + "' shorter than expected");
  }
  return values;
}

/// Emits a complex field as four images plus a shape sidecar:
///   <prefix>_amp.raw, <prefix>_phase.raw   little-endian f32, row-major
///   <prefix>.size.txt                      one line: "<rows> <cols>"
///   <prefix>_amp.pgm, <prefix>_phase.pgm   16-bit PGM previews
/// The amplitude preview is min-max scaled (flat fields map to mid-gray
/// 32768); the phase preview maps [-pi, pi] onto [0, 65535].
inline void export_field(const std::string& prefix, const ComplexField& field) {
  if (!is_finite(field)) throw std::invalid_argument("export_field: non-finite field");
  const std::size_t n = field.size();
  std::vector<float> amp(n);
  std::vector<float> phase(n);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::abs(field[i]);
    amp[i] = static_cast<float>(a);
    phase[i] = static_cast<float>(std::arg(field[i]));
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  write_raw_f32(prefix + "_amp.raw", amp);
  write_raw_f32(prefix + "_phase.raw", phase);
  {
    std::ofstream side(prefix + ".size.txt", std::ios::trunc);
    if (!side) throw std::runtime_error("export_field: cannot write sidecar");
    side << field.rows() << " " << field.cols() << "\n";
  }
  std::vector<std::uint16_t> amp_px(n);
  std::vector<std::uint16_t> phase_px(n);
  const bool flat = !(hi > lo);
  for (std::size_t i = 0; i < n; ++i) {
    amp_px[i] = flat ? 32768
                     : static_cast<std::uint16_t>(
                           std::lround((amp[i] - lo) / (hi - lo) * 65535.0));
    const double t = (static_cast<double>(phase[i]) + std::numbers::pi) /
                     (2.0 * std::numbers::pi);
    const long level = std::lround(std::clamp(t, 0.0, 1.0) * 65535.0);
    phase_px[i] = static_cast<std::uint16_t>(level);
  }
  write_pgm16(prefix + "_amp.pgm", amp_px, field.rows(), field.cols());
  write_pgm16(prefix + "_phase.pgm", phase_px, field.rows(), field.cols());
}

/// Rebuilds a complex field from the raw pair written by export_field.
inline ComplexField import_field(const std::string& prefix) {
  std::ifstream side(prefix + ".size.txt");
  if (!side) throw std::runtime_error("import_field: missing sidecar for '" + prefix + "'");
  int rows = 0;
  int cols = 0;
  side >> rows >> cols;
  if (!side || rows <= 0 || cols <= 0) {
    throw std::runtime_error("import_field: malformed sidecar for '" + prefix + "'");
  }
  const std::size_t n = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  const std::vector<float> amp = read_raw_f32(prefix + "_amp.raw", n);
  const std::vector<float> phase = read_raw_f32(prefix + "_phase.raw", n);
  ComplexField field(rows, cols);
  for (std::size_t i = 0; i < n; ++i) {
    field[i] = std::polar(static_cast<double>(amp[i]), static_cast<double>(phase[i]));
  }
  return field;
}

}  // namespace proxpty
