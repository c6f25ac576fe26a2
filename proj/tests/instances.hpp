#pragma once

#include <algorithm>

#include "support.hpp"
#include "tubular/loss.hpp"

namespace testing {

/// Random loss instance away from clamp boundaries and argmax ties:
/// p in [0.2, 0.8], g rows normalized from weights in [1, 2] with the top
/// two entries at least `gap` apart, z uniform over 1..K on foreground.
inline tubular::LossInstance random_loss_instance(Rng& rng, const tubular::Geometry& g, int bins,
                                                  double gap = 0.01) {
  using namespace tubular;
  LossInstance inst;
  do {
    inst.label = random_label(g, uniform(rng, 0.1, 0.6), rng);
  } while (count_foreground(inst.label) == 0 || count_foreground(inst.label) == inst.label.size());
  inst.p = ProbabilityField(g);
  for (double& v : inst.p.values()) v = uniform(rng, 0.2, 0.8);
  inst.g = ScaleProbabilityField(g, bins);
  std::vector<double> row(static_cast<std::size_t>(bins));
  for (std::size_t n = 0; n < g.voxel_count(); ++n) {
    for (;;) {
      double sum = 0.0;
      for (double& w : row) sum += (w = uniform(rng, 1.0, 2.0));
      for (double& w : row) w /= sum;
      std::vector<double> sorted = row;
      std::sort(sorted.rbegin(), sorted.rend());
      if (bins == 1 || sorted[0] - sorted[1] >= gap) break;
    }
    for (int k = 1; k <= bins; ++k) inst.g.at(n, k) = row[static_cast<std::size_t>(k - 1)];
  }
  inst.z.bins = bins;
  inst.z.classes = Grid<std::int16_t>(g);
  for (std::size_t n = 0; n < g.voxel_count(); ++n) {
    if (inst.label[n]) inst.z.classes[n] = static_cast<std::int16_t>(uniform_int(rng, 1, bins));
  }
  inst.lambda = 1.0;
  return inst;
}

}  // namespace testing
