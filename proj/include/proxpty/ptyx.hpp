#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxpty/data.hpp"
#include "proxpty/field.hpp"

namespace proxpty {

static_assert(std::endian::native == std::endian::little,
              "PTYX i/o assumes a little-endian host");

enum class PtyxErrorKind {
  Io,
  BadMagic,
  BadVersion,
  Truncated,
  InvalidGeometry,
  InvalidValue,
};

class PtyxError : public std::runtime_error {
 public:
  PtyxError(PtyxErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  PtyxErrorKind kind() const { return kind_; }

 private:
  PtyxErrorKind kind_;
};

namespace detail {

constexpr char kPtyxMagic[4] = {'P', 'T', 'Y', 'X'};
constexpr std::uint16_t kPtyxVersion = 1;
constexpr std::uint32_t kFlagTruthObject = 1u << 0;
constexpr std::uint32_t kFlagTruthProbe = 1u << 1;
constexpr std::uint32_t kFlagTruthAmplitudes = 1u << 2;

template <typename T>
void put(std::string& out, T value) {
  char raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  out.append(raw, sizeof(T));
}

class Cursor {
 public:
  Cursor(const std::string& buffer) : buffer_(buffer) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > buffer_.size()) {
      throw PtyxError(PtyxErrorKind::Truncated, "PTYX file ends mid-record");
    }
    T value;
    std::memcpy(&value, buffer_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  bool exhausted() const { return pos_ == buffer_.size(); }

 private:
  const std::string& buffer_;
  std::size_t pos_ = 0;
};

inline void put_amplitudes(std::string& out, const AmplitudeStack& stack) {
  for (const auto& grid : stack) {
    for (double v : grid.values()) put<float>(out, static_cast<float>(v));
  }
}

inline void put_complex(std::string& out, const ComplexField& field) {
  for (const cplx& v : field.values()) {
    put<float>(out, static_cast<float>(v.real()));
    put<float>(out, static_cast<float>(v.imag()));
  }
}

inline ComplexField get_complex(Cursor& in, int rows, int cols) {
  ComplexField field(rows, cols);
  for (cplx& v : field.values()) {
    const float re = in.get<float>();
    const float im = in.get<float>();
    v = cplx(re, im);
  }
  return field;
}

}  // namespace detail

/// Serializes the dataset in the PTYX v1 layout (little-endian): magic,
/// version, geometry, flags, scale factor, SNR, seed, offsets, the measured
/// amplitude stack as f32, then the optional truth blocks (object, probe,
/// amplitudes) in flag order with complex values interleaved re/im.
inline void write_dataset(const std::string& path, const Dataset& ds) {
  ds.validate();
  std::string out;
  out.append(detail::kPtyxMagic, 4);
  detail::put<std::uint16_t>(out, detail::kPtyxVersion);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(ds.positions.probe_rows));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(ds.positions.probe_cols));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(ds.positions.object_rows));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(ds.positions.object_cols));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(ds.positions.count()));
  std::uint32_t flags = 0;
  if (ds.truth_object) flags |= detail::kFlagTruthObject;
  if (ds.truth_probe) flags |= detail::kFlagTruthProbe;
  if (ds.truth_amplitudes) flags |= detail::kFlagTruthAmplitudes;
  detail::put<std::uint32_t>(out, flags);
  detail::put<double>(out, ds.scale_factor);
  detail::put<double>(out, ds.snr_db);
  detail::put<std::uint64_t>(out, ds.seed);
  for (const auto& [r, c] : ds.positions.offsets) {
    detail::put<std::int32_t>(out, r);
    detail::put<std::int32_t>(out, c);
  }
  detail::put_amplitudes(out, ds.measured);
  if (ds.truth_object) detail::put_complex(out, *ds.truth_object);
  if (ds.truth_probe) detail::put_complex(out, *ds.truth_probe);
  if (ds.truth_amplitudes) detail::put_amplitudes(out, *ds.truth_amplitudes);

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw PtyxError(PtyxErrorKind::Io, "cannot open '" + path + "' for writing");
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw PtyxError(PtyxErrorKind::Io, "short write to '" + path + "'");
}

/// Parses and validates a PTYX file. Every violated invariant maps to a
/// distinct PtyxErrorKind; no partially-filled dataset escapes.
inline Dataset read_dataset(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw PtyxError(PtyxErrorKind::Io, "cannot open '" + path + "' for reading");
  std::string buffer((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  if (!file.good() && !file.eof()) {
    throw PtyxError(PtyxErrorKind::Io, "read failure on '" + path + "'");
  }

  detail::Cursor in(buffer);
  if (buffer.size() < 4 || std::memcmp(buffer.data(), detail::kPtyxMagic, 4) != 0) {
    throw PtyxError(PtyxErrorKind::BadMagic, "'" + path + "' is not a PTYX file");
  }
  in.get<std::uint32_t>();  // past magic
  const auto version = in.get<std::uint16_t>();
  if (version != detail::kPtyxVersion) {
    throw PtyxError(PtyxErrorKind::BadVersion,
                    "unsupported PTYX version " + std::to_string(version));
  }
  Dataset ds;
  const auto probe_rows = in.get<std::uint32_t>();
  const auto probe_cols = in.get<std::uint32_t>();
  const auto object_rows = in.get<std::uint32_t>();
  const auto object_cols = in.get<std::uint32_t>();
  const auto count = in.get<std::uint32_t>();
  constexpr std::uint32_t kMaxExtent = 1u << 20;
  if (probe_rows == 0 || probe_cols == 0 || object_rows == 0 || object_cols == 0 || count == 0 ||
      probe_rows > kMaxExtent || probe_cols > kMaxExtent || object_rows > kMaxExtent ||
      object_cols > kMaxExtent) {
    throw PtyxError(PtyxErrorKind::InvalidGeometry, "PTYX header geometry out of range");
  }
  ds.positions.probe_rows = static_cast<int>(probe_rows);
  ds.positions.probe_cols = static_cast<int>(probe_cols);
  ds.positions.object_rows = static_cast<int>(object_rows);
  ds.positions.object_cols = static_cast<int>(object_cols);
  const auto flags = in.get<std::uint32_t>();
  ds.scale_factor = in.get<double>();
  ds.snr_db = in.get<double>();
  ds.seed = in.get<std::uint64_t>();
  ds.positions.offsets.resize(count);
  for (auto& [r, c] : ds.positions.offsets) {
    r = in.get<std::int32_t>();
    c = in.get<std::int32_t>();
  }
  try {
    ds.positions.validate();
  } catch (const std::exception& e) {
    throw PtyxError(PtyxErrorKind::InvalidGeometry, e.what());
  }

  const auto read_amplitudes = [&](AmplitudeStack& stack) {
    stack.resize(count);
    for (auto& grid : stack) {
      grid = RealField(ds.positions.probe_rows, ds.positions.probe_cols);
      for (double& v : grid.values()) v = static_cast<double>(in.get<float>());
    }
  };
  read_amplitudes(ds.measured);
  if (flags & detail::kFlagTruthObject) {
    ds.truth_object =
        detail::get_complex(in, ds.positions.object_rows, ds.positions.object_cols);
  }
  if (flags & detail::kFlagTruthProbe) {
    ds.truth_probe = detail::get_complex(in, ds.positions.probe_rows, ds.positions.probe_cols);
  }
  if (flags & detail::kFlagTruthAmplitudes) {
    AmplitudeStack truth;
    read_amplitudes(truth);
    ds.truth_amplitudes = std::move(truth);
  }
  if (!in.exhausted()) {
    throw PtyxError(PtyxErrorKind::Truncated, "trailing bytes after PTYX payload");
  }
  try {
    ds.validate();
  } catch (const std::exception& e) {
    throw PtyxError(PtyxErrorKind::InvalidValue, e.what());
  }
  return ds;
}

}  // namespace proxpty
