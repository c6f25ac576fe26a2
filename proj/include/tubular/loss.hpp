#pragma once

#include <span>
#include <vector>

#include "tubular/edt.hpp"
#include "tubular/grid.hpp"

namespace tubular {

/// Per-voxel simplex over scale classes 1..K, stored voxel-major
/// (the K probabilities of one voxel are contiguous).
class ScaleProbabilityField {
 public:
  ScaleProbabilityField() = default;
  ScaleProbabilityField(Geometry geometry, int bins, double fill = 0.0);

  const Geometry& geometry() const { return geometry_; }
  int bins() const { return bins_; }
  std::size_t voxel_count() const { return geometry_.voxel_count(); }

  /// Probability of class k (1-based) at linear voxel index n.
  double& at(std::size_t n, int k) { return values_[n * static_cast<std::size_t>(bins_) + static_cast<std::size_t>(k - 1)]; }
  double at(std::size_t n, int k) const { return values_[n * static_cast<std::size_t>(bins_) + static_cast<std::size_t>(k - 1)]; }

  std::span<const double> row(std::size_t n) const {
    return std::span<const double>(values_).subspan(n * static_cast<std::size_t>(bins_), static_cast<std::size_t>(bins_));
  }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  /// 1-based argmax of the row at voxel n; ties go to the smallest class.
  int argmax(std::size_t n) const;

  /// One float grid per class, for storage.
  std::vector<Grid<float>> to_channels() const;
  static ScaleProbabilityField from_channels(const std::vector<Grid<float>>& channels);

 private:
  Geometry geometry_{};
  int bins_ = 0;
  std::vector<double> values_{};
};

/// Probabilities are clamped to [kProbabilityClamp, 1 - kProbabilityClamp]
/// before taking logs.
inline constexpr double kProbabilityClamp = 1e-7;

struct ClassWeights {
  double positive = 0.0;  ///< 0.5 / #foreground
  double negative = 0.0;  ///< 0.5 / #background
};

/// Throws DegenerateInputError when either class is absent.
ClassWeights class_weights(const LabelMap& label);

struct ClsLoss {
  double value = 0.0;
  Grid<double> gradient;  ///< dL/dp_v; zero where the clamp is active
};

struct DisLoss {
  double value = 0.0;
  ScaleProbabilityField gradient;  ///< dL/dg_v^k with argmax and weight held fixed
};

struct LossBreakdown {
  double cls = 0.0;
  double dis = 0.0;
  double total = 0.0;
  double beta_positive = 0.0;
  double beta_negative = 0.0;
};

/// Class-balanced binary cross-entropy (natural log).
ClsLoss cls_loss(const ProbabilityField& p, const LabelMap& label);

/// Scale-class loss: for every voxel with 1 <= z_v <= K,
///   -beta_p * ( log g_v^{z_v} + lambda * w_v * log(1 - max_l g_v^l) ),
/// w_v = |argmax_l g_v^l - z_v| / K. The second term is exactly zero when
/// w_v = 0. Log arguments are floored at kProbabilityClamp (no upper clamp,
/// so a one-hot prediction at the true class costs exactly zero).
DisLoss dis_loss(const ScaleProbabilityField& g, const ScaleClassMap& z, double beta_positive,
                 double lambda = 1.0);

LossBreakdown total_loss(const ProbabilityField& p, const ScaleProbabilityField& g,
                         const LabelMap& label, const ScaleClassMap& z, double lambda = 1.0);

enum class LossKind { classification, distance };

struct LossInstance {
  ProbabilityField p;
  ScaleProbabilityField g;
  LabelMap label;
  ScaleClassMap z;
  double lambda = 1.0;
};

/// Central-difference gradient check. Perturbs every input coordinate of the
/// chosen loss by +/- step and returns the largest relative deviation from
/// the analytic gradient. Rejects (ValidationError) instances with an
/// argmax tie or a clamp boundary within 10 * step.
double finite_difference_check(LossKind kind, const LossInstance& instance, double step = 1e-4);

/// Deterministic pairwise (cascade) summation.
double pairwise_sum(std::span<const double> terms);

}  // namespace tubular
