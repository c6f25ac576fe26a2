#include "tubular/metrics.hpp"

#include <cmath>
#include <vector>

#include "tubular/edt.hpp"

namespace tubular {

namespace {

// Mean over surface voxels of `from` of the mm distance to `to_seeds`.
double directed_mean(const SurfaceSet& from, const LabelMap& to_seeds, unsigned threads) {
  const Grid<double> sq = squared_distance_to_seeds_mm(to_seeds, threads);
  double sum = 0.0;
  for (const Index3& v : from.voxels) sum += std::sqrt(sq.at(v));
  return sum / static_cast<double>(from.size());
}

}  // namespace

double dsc(const LabelMap& a, const LabelMap& b) {
  require_same_dims(a.geometry(), b.geometry(), "dsc");
  std::size_t both = 0, na = 0, nb = 0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    const bool x = a[n] != 0;
    const bool y = b[n] != 0;
    na += x;
    nb += y;
    both += x && y;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

double mean_surface_distance(const LabelMap& a, const LabelMap& b, unsigned threads) {
  require_same_dims(a.geometry(), b.geometry(), "mean_surface_distance");
  const SurfaceSet sa = surface_voxels(a);
  const SurfaceSet sb = surface_voxels(b);
  if (sa.empty() || sb.empty()) {
    throw ValidationError("mean_surface_distance: both masks must be nonempty");
  }
  const double ab = directed_mean(sa, sb.mask(), threads);
  const double ba = directed_mean(sb, sa.mask(), threads);
  return 0.5 * (ab + ba);
}

double CaseTally::sensitivity() const {
  if (abnormal == 0) throw DegenerateInputError("sensitivity undefined: no abnormal cases");
  return static_cast<double>(abnormal - misses) / static_cast<double>(abnormal);
}

double CaseTally::specificity() const {
  if (normal == 0) throw DegenerateInputError("specificity undefined: no normal cases");
  return static_cast<double>(normal - false_positives) / static_cast<double>(normal);
}

CaseTally case_tally(std::span<const CaseOutcome> outcomes) {
  if (outcomes.empty()) throw ValidationError("case_tally: no cases");
  CaseTally t;
  for (const CaseOutcome& c : outcomes) {
    if (c.truth == CaseLabel::abnormal) {
      ++t.abnormal;
      if (c.predicted == CaseLabel::normal) ++t.misses;
    } else {
      ++t.normal;
      if (c.predicted == CaseLabel::abnormal) ++t.false_positives;
    }
  }
  return t;
}

}  // namespace tubular
