#include "tubular/duct.hpp"

#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

namespace tubular {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTieTolerance = 1e-9;

struct Step {
  std::int64_t di, dj, dk;
  double cost;
};

std::vector<Step> neighbourhood() {
  std::vector<Step> steps;
  for (std::int64_t dk = -1; dk <= 1; ++dk) {
    for (std::int64_t dj = -1; dj <= 1; ++dj) {
      for (std::int64_t di = -1; di <= 1; ++di) {
        const std::int64_t moved = std::abs(di) + std::abs(dj) + std::abs(dk);
        if (moved == 0) continue;
        steps.push_back({di, dj, dk, std::sqrt(static_cast<double>(moved))});
      }
    }
  }
  return steps;
}

// Dijkstra over foreground voxels; writes distances into `dist` (which must
// hold +inf on the component) and returns the visited voxels.
std::vector<std::size_t> dijkstra(const LabelMap& mask, std::size_t source, Grid<double>& dist) {
  static const std::vector<Step> steps = neighbourhood();
  const Geometry& g = mask.geometry();
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  std::vector<std::size_t> visited;
  dist[source] = 0.0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    const auto [d, n] = queue.top();
    queue.pop();
    if (d > dist[n]) continue;
    visited.push_back(n);
    const Index3 v = g.coord(n);
    for (const Step& s : steps) {
      const std::int64_t i = v.i + s.di, j = v.j + s.dj, k = v.k + s.dk;
      if (!g.contains(i, j, k) || mask.at(i, j, k) == 0) continue;
      const std::size_t m = g.linear(i, j, k);
      const double nd = d + s.cost;
      if (nd < dist[m]) {
        dist[m] = nd;
        queue.emplace(nd, m);
      }
    }
  }
  return visited;
}

std::size_t farthest(const std::vector<std::size_t>& visited, const Grid<double>& dist) {
  std::size_t best = visited.front();
  for (std::size_t n : visited) {
    if (dist[n] > dist[best] + kTieTolerance ||
        (std::abs(dist[n] - dist[best]) <= kTieTolerance && n < best)) {
      best = n;
    }
  }
  return best;
}

}  // namespace

void DuctParams::validate() const {
  if (!(scale_threshold >= 0.0)) {
    std::ostringstream msg;
    msg << "T^s (scale threshold) must be >= 0, got " << scale_threshold;
    throw ValidationError(msg.str());
  }
  if (edge < 1) throw ValidationError("candidate edge must be >= 1, got " + std::to_string(edge));
}

DuctFinding detect_dilated(const LabelMap& mask, const ScaleMap& scales, double scale_threshold) {
  require_same_dims(mask.geometry(), scales.geometry(), "detect_dilated");
  DuctParams{scale_threshold, 1}.validate();
  DuctFinding f;
  for (std::size_t n = 0; n < mask.size(); ++n) {
    if (mask[n] == 0) continue;
    ++f.voxel_count;
    f.max_scale = std::max<int>(f.max_scale, scales[n]);
  }
  f.dilated = f.voxel_count > 0 && f.max_scale > scale_threshold;
  return f;
}

Grid<double> geodesic_distance(const LabelMap& mask, const Index3& source) {
  Grid<double> dist(mask.geometry(), kInf);
  if (!mask.geometry().contains(source) || mask.at(source) == 0) {
    throw ValidationError("geodesic_distance: source must be a foreground voxel");
  }
  dijkstra(mask, mask.geometry().linear(source), dist);
  return dist;
}

std::vector<ExtremePoints> geodesic_extreme_points(const LabelMap& mask) {
  if (count_foreground(mask) == 0) {
    throw ValidationError("geodesic_extreme_points: empty mask");
  }
  const Geometry& g = mask.geometry();
  Grid<double> dist(g, kInf);
  std::vector<std::uint8_t> assigned(mask.size(), 0);
  std::vector<ExtremePoints> out;
  for (std::size_t seed = 0; seed < mask.size(); ++seed) {
    if (mask[seed] == 0 || assigned[seed]) continue;
    const std::vector<std::size_t> component = dijkstra(mask, seed, dist);
    for (std::size_t n : component) assigned[n] = 1;
    const std::size_t first = farthest(component, dist);

    for (std::size_t n : component) dist[n] = kInf;
    dijkstra(mask, first, dist);
    const std::size_t second = farthest(component, dist);
    out.push_back({out.size(), g.coord(first), g.coord(second), dist[second]});
    for (std::size_t n : component) dist[n] = kInf;
  }
  return out;
}

std::vector<Box> candidate_regions(std::span<const Index3> points, std::int64_t edge, const Dims& dims,
                                   const LabelMap* exclude) {
  if (dims.x < edge || dims.y < edge || dims.z < edge) {
    throw ValidationError("candidate edge " + std::to_string(edge) + " exceeds a volume dimension");
  }
  std::vector<Box> boxes;
  for (const Index3& p : points) {
    if (exclude && exclude->geometry().contains(p) && exclude->at(p) != 0) continue;
    boxes.push_back(centered_box(dims, p, edge));
  }
  return boxes;
}

DuctFinding screen_duct(const LabelMap& mask, const ScaleMap& scales, const DuctParams& params,
                        const LabelMap* exclude) {
  params.validate();
  if (exclude) require_same_dims(mask.geometry(), exclude->geometry(), "screen_duct exclusion mask");
  DuctFinding f = detect_dilated(mask, scales, params.scale_threshold);
  if (!f.dilated) return f;
  f.extremes = geodesic_extreme_points(mask);
  std::vector<Index3> points;
  for (const ExtremePoints& e : f.extremes) {
    points.push_back(e.first);
    if (!(e.second == e.first)) points.push_back(e.second);
  }
  f.candidates = candidate_regions(points, params.edge, mask.dims(), exclude);
  return f;
}

}  // namespace tubular
