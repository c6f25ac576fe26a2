#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "tubular/grid.hpp"

namespace tubular {

enum class DistanceUnits { voxel, mm };

/// Foreground voxels with at least one background 6-neighbour. Voxels on
/// the volume border count as touching background (the outside of the grid
/// is treated as label 0), so the set is nonempty whenever foreground is.
struct SurfaceSet {
  Geometry geometry;
  /// Sorted by linear index.
  std::vector<Index3> voxels;

  LabelMap mask() const;
  std::size_t size() const { return voxels.size(); }
  bool empty() const { return voxels.empty(); }
};

/// Per-voxel distance to the nearest surface voxel; zero on background.
struct DistanceMap {
  Grid<float> values;
  DistanceUnits units = DistanceUnits::voxel;
};

/// Quantized distances: 0 on background, otherwise round-half-up(d)
/// clamped to [0, bins].
struct ScaleClassMap {
  Grid<std::int16_t> classes;
  int bins = 1;
};

SurfaceSet surface_voxels(const LabelMap& label);

/// Marker for voxels with no seed anywhere in the grid.
inline constexpr std::int64_t kNoSeed = std::numeric_limits<std::int64_t>::max();

/// Exact squared Euclidean distance (voxel units) from every voxel to the
/// nearest voxel with seeds[v] == 1, by separable lower-envelope sweeps.
/// `axis_order` selects the sweep order; the result does not depend on it.
Grid<std::int64_t> squared_distance_to_seeds(const LabelMap& seeds,
                                             std::array<int, 3> axis_order = {0, 1, 2},
                                             unsigned threads = 1);

/// Same, with per-axis offsets scaled by the grid spacing (mm^2). Voxels
/// with no seed hold +infinity.
Grid<double> squared_distance_to_seeds_mm(const LabelMap& seeds, unsigned threads = 1);

/// Squared voxel-unit distance to the surface set for foreground voxels,
/// zero on background.
Grid<std::int64_t> squared_distance_transform(const LabelMap& label,
                                              std::array<int, 3> axis_order = {0, 1, 2},
                                              unsigned threads = 1);

DistanceMap distance_transform(const LabelMap& label, DistanceUnits units = DistanceUnits::voxel,
                               unsigned threads = 1);

/// round-half-up(d) clamped to [0, bins]. Requires bins >= 1.
int quantize_distance(double d, int bins);

/// Requires a voxel-unit distance map.
ScaleClassMap quantize(const DistanceMap& distances, int bins);

/// Largest quantized class present (unclamped); the natural choice of bin
/// count for a training label map.
int max_scale_class(const DistanceMap& distances);

}  // namespace tubular
