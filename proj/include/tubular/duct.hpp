#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tubular/grid.hpp"
#include "tubular/preprocess.hpp"
#include "tubular/refine.hpp"

namespace tubular {

/// Far ends of one 26-connected component and the geodesic length between
/// them.
struct ExtremePoints {
  std::size_t component = 0;
  Index3 first{};
  Index3 second{};
  double length = 0.0;
};

struct DuctFinding {
  std::size_t voxel_count = 0;  ///< N, predicted duct voxels
  int max_scale = 0;            ///< largest predicted scale over the duct
  bool dilated = false;         ///< N > 0 and max_scale > T^s
  std::vector<ExtremePoints> extremes;
  std::vector<Box> candidates;
};

struct DuctParams {
  double scale_threshold = 3.0;  ///< T^s
  std::int64_t edge = 48;        ///< candidate cube side

  void validate() const;
};

/// Fills voxel_count, max_scale and dilated; scales are read on mask voxels.
DuctFinding detect_dilated(const LabelMap& mask, const ScaleMap& scales, double scale_threshold = 3.0);

/// Two-pass farthest-point search per 26-connected component (ordered by
/// smallest linear index). Steps cost 1, sqrt(2) or sqrt(3). The first pass
/// starts from the component's smallest-index voxel; distance ties go to the
/// smallest linear index. Throws ValidationError for an empty mask.
std::vector<ExtremePoints> geodesic_extreme_points(const LabelMap& mask);

/// Geodesic distance from `source` to every voxel of its 26-connected
/// component; +infinity elsewhere.
Grid<double> geodesic_distance(const LabelMap& mask, const Index3& source);

/// One edge^3 box per point (shift-inward placement), skipping points that
/// fall inside `exclude`.
std::vector<Box> candidate_regions(std::span<const Index3> points, std::int64_t edge, const Dims& dims,
                                   const LabelMap* exclude = nullptr);

/// detect_dilated, then for dilated cases the extreme points of every
/// component and one candidate box per extreme point.
DuctFinding screen_duct(const LabelMap& mask, const ScaleMap& scales, const DuctParams& params = {},
                        const LabelMap* exclude = nullptr);

}  // namespace tubular
