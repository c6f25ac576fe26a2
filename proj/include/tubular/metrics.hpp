#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "tubular/grid.hpp"

namespace tubular {

/// Dice-Sorensen coefficient 2|A n B| / (|A| + |B|); 1 when both are empty.
double dsc(const LabelMap& a, const LabelMap& b);

/// Symmetric mean surface distance in millimetres: the mean distance from
/// each surface voxel of `a` to the nearest surface voxel of `b`, averaged
/// with the reverse direction. Throws ValidationError on an empty mask.
double mean_surface_distance(const LabelMap& a, const LabelMap& b, unsigned threads = 1);

enum class CaseLabel { normal, abnormal };

struct CaseOutcome {
  std::string id;
  CaseLabel truth = CaseLabel::normal;
  CaseLabel predicted = CaseLabel::normal;
};

/// Case-level screening counts.
struct CaseTally {
  std::size_t abnormal = 0;
  std::size_t normal = 0;
  std::size_t misses = 0;           ///< abnormal predicted normal
  std::size_t false_positives = 0;  ///< normal predicted abnormal

  /// Detected abnormal / abnormal. Throws DegenerateInputError if there are
  /// no abnormal cases.
  double sensitivity() const;
  /// Correctly negative normal / normal. Throws if there are no normal cases.
  double specificity() const;
};

CaseTally case_tally(std::span<const CaseOutcome> outcomes);

}  // namespace tubular
