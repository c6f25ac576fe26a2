#pragma once

#include "tubular/grid.hpp"
#include "tubular/volume_io.hpp"

namespace tubular {

/// HU window applied before intensity normalization.
struct HuWindow {
  double lo = -100.0;
  double hi = 240.0;
};

/// Clamps every voxel into [window.lo, window.hi], then shifts and scales the
/// whole volume to zero mean and unit population variance (64-bit
/// accumulation). Throws DegenerateInputError if the clamped volume is
/// constant.
Grid<float> preprocess_ct(const Volume& volume, HuWindow window = {});

/// Axis-aligned cube `[origin, origin + edge)` on every axis.
struct Box {
  Index3 origin{};
  std::int64_t edge = 0;

  friend bool operator==(const Box&, const Box&) = default;
};

/// Cube of side `edge` centred on `center`, shifted inward when it would
/// leave the volume. Requires every dim >= edge >= 1.
Box centered_box(const Dims& dims, const Index3& center, std::int64_t edge);

template <typename T>
Grid<T> crop(const Grid<T>& grid, const Box& box) {
  const Geometry out_geometry({box.edge, box.edge, box.edge}, grid.spacing());
  Grid<T> out(out_geometry);
  for (std::int64_t k = 0; k < box.edge; ++k) {
    for (std::int64_t j = 0; j < box.edge; ++j) {
      for (std::int64_t i = 0; i < box.edge; ++i) {
        out.at(i, j, k) = grid.at(box.origin.i + i, box.origin.j + j, box.origin.k + k);
      }
    }
  }
  return out;
}

/// edge^3 crop around `center` (shift-inward rule, spacing preserved).
Volume crop_region(const Volume& volume, const Index3& center, std::int64_t edge = 48);

}  // namespace tubular
