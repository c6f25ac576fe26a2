#pragma once

#include <cstdint>

#include "tubular/grid.hpp"
#include "tubular/loss.hpp"

namespace tubular {

/// Binary pseudo skeleton: voxels whose probability strictly exceeds
/// `threshold`.
struct SkeletonMap {
  LabelMap mask;
  double threshold = 0.98;
};

/// Predicted scale class (1..K) per voxel; only skeleton voxels are read.
using ScaleMap = Grid<std::int16_t>;

enum class SoftShapeKind { reconstruction, refinement };

/// Sum of peak-normalized Gaussians splatted from skeleton voxels.
struct SoftShape {
  Grid<double> values;
  SoftShapeKind kind = SoftShapeKind::reconstruction;
};

/// Thresholds and kernel truncation for geometry-aware refinement.
struct GarParams {
  double skeleton_threshold = 0.98;  ///< T^p, in (0, 1)
  double refine_threshold = 0.5;     ///< T^r, > 0
  double truncation = 4.0;           ///< kernel support radius in sigmas, >= 3

  /// Throws ValidationError naming the offending parameter.
  void validate() const;
};

SkeletonMap pseudo_skeleton(const ProbabilityField& p, double threshold = 0.98);

/// Per-voxel argmax over classes 1..K, ties to the smallest class.
ScaleMap predicted_scales(const ScaleProbabilityField& g);

/// Union of balls ||v - u|| <= scale(u) over skeleton voxels u.
LabelMap reconstruct_hard(const SkeletonMap& skeleton, const ScaleMap& scales);

/// value(v) = sum over skeleton u of exp(-||v - u||^2 / (2 sigma_u^2)),
/// sigma_u = scale(u) / 3, dropping offsets beyond truncation * sigma_u.
/// Output is identical for any thread count.
SoftShape reconstruct_soft(const SkeletonMap& skeleton, const ScaleMap& scales,
                           double truncation = 4.0, unsigned threads = 1);

/// reconstruct_soft with each skeleton voxel's kernel scaled by p_u.
SoftShape refine_map(const SkeletonMap& skeleton, const ScaleMap& scales, const ProbabilityField& p,
                     double truncation = 4.0, unsigned threads = 1);

/// value > threshold (strict).
LabelMap binarize(const SoftShape& shape, double threshold = 0.5);

struct GarResult {
  LabelMap mask;
  SkeletonMap skeleton;
  ScaleMap scales;
  SoftShape refined;
};

/// Pseudo skeleton, predicted scales, probability-weighted reconstruction
/// and final thresholding, returning every intermediate.
GarResult gar_pipeline(const ProbabilityField& p, const ScaleProbabilityField& g,
                       const GarParams& params = {}, unsigned threads = 1);

}  // namespace tubular
