#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "proxpty/field.hpp"

namespace proxpty {

/// Integer window offsets realizing the per-position selection operators.
/// Each offset is the top-left corner of the probe window in object pixel
/// coordinates; every window must lie fully inside the object bounds.
struct ScanPositions {
  int probe_rows = 0;
  int probe_cols = 0;
  int object_rows = 0;
  int object_cols = 0;
  std::vector<std::pair<int, int>> offsets;

  int count() const { return static_cast<int>(offsets.size()); }

  void validate() const {
    if (probe_rows <= 0 || probe_cols <= 0) {
      throw std::invalid_argument("ScanPositions: probe extent must be positive");
    }
    if (object_rows <= 0 || object_cols <= 0) {
      throw std::invalid_argument("ScanPositions: object extent must be positive");
    }
    if (offsets.empty()) throw std::invalid_argument("ScanPositions: need at least one position");
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      const auto [r, c] = offsets[i];
      if (r < 0 || c < 0 || r + probe_rows > object_rows || c + probe_cols > object_cols) {
        throw std::out_of_range("ScanPositions: window " + std::to_string(i) +
                                " at (" + std::to_string(r) + "," + std::to_string(c) +
                                ") exceeds object bounds");
      }
    }
  }
};

/// Reads the probe-shaped sub-grid of the object at position i.
inline ComplexField extract(const ComplexField& object, const ScanPositions& pos, int i) {
  if (i < 0 || i >= pos.count()) throw std::out_of_range("extract: position index");
  if (object.rows() != pos.object_rows || object.cols() != pos.object_cols) {
    throw std::invalid_argument("extract: object shape mismatch");
  }
  const auto [r0, c0] = pos.offsets[static_cast<std::size_t>(i)];
  ComplexField patch(pos.probe_rows, pos.probe_cols);
  for (int r = 0; r < pos.probe_rows; ++r) {
    for (int c = 0; c < pos.probe_cols; ++c) patch(r, c) = object(r0 + r, c0 + c);
  }
  return patch;
}

/// Adds a probe-shaped patch into the buffer at the window of position i.
/// This is the adjoint of extract: contributions accumulate, they do not
/// overwrite.
inline void embed_accumulate(ComplexField& buffer, const ScanPositions& pos, int i,
                             const ComplexField& patch) {
  if (i < 0 || i >= pos.count()) throw std::out_of_range("embed_accumulate: position index");
  if (buffer.rows() != pos.object_rows || buffer.cols() != pos.object_cols) {
    throw std::invalid_argument("embed_accumulate: buffer shape mismatch");
  }
  if (patch.rows() != pos.probe_rows || patch.cols() != pos.probe_cols) {
    throw std::invalid_argument("embed_accumulate: patch shape mismatch");
  }
  const auto [r0, c0] = pos.offsets[static_cast<std::size_t>(i)];
  for (int r = 0; r < pos.probe_rows; ++r) {
    for (int c = 0; c < pos.probe_cols; ++c) buffer(r0 + r, c0 + c) += patch(r, c);
  }
}

}  // namespace proxpty
