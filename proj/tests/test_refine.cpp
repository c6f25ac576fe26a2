#include <cmath>

#include "doctest.h"
#include "support.hpp"
#include "tubular/error.hpp"
#include "tubular/phantom.hpp"
#include "tubular/refine.hpp"

using namespace tubular;
using testing::Rng;

namespace {

SkeletonMap lone_skeleton(const Geometry& g, Index3 at) {
  SkeletonMap s{LabelMap(g), 0.98};
  s.mask.at(at) = 1;
  return s;
}

// Random skeleton voxels with random scales in [1, max_scale].
std::pair<SkeletonMap, ScaleMap> random_skeleton(Rng& rng, const Geometry& g, double fraction, int max_scale) {
  SkeletonMap s{testing::random_label(g, fraction, rng), 0.98};
  ScaleMap z(g);
  for (std::size_t n = 0; n < z.size(); ++n) z[n] = static_cast<std::int16_t>(testing::uniform_int(rng, 1, max_scale));
  return {s, z};
}

double dist2(const Index3& a, const Index3& b) {
  const double di = static_cast<double>(a.i - b.i), dj = static_cast<double>(a.j - b.j), dk = static_cast<double>(a.k - b.k);
  return di * di + dj * dj + dk * dk;
}

}  // namespace

TEST_CASE("default parameters") {
  const GarParams p;
  CHECK(p.skeleton_threshold == 0.98);
  CHECK(p.refine_threshold == 0.5);
  CHECK(p.truncation == 4.0);
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("parameter validation names the parameter") {
  GarParams p;
  p.skeleton_threshold = 1.5;
  try {
    p.validate();
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("T^p") != std::string::npos);
  }
  p = {};
  p.skeleton_threshold = 0.0;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = {};
  p.refine_threshold = 0.0;
  try {
    p.validate();
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("T^r") != std::string::npos);
  }
  p = {};
  p.truncation = 2.5;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p.truncation = 3.0;
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("pseudo skeleton uses a strict threshold") {
  const Geometry g({4, 3, 2});
  const SkeletonMap all = pseudo_skeleton(ProbabilityField(g, 0.99), 0.98);
  CHECK(count_foreground(all.mask) == g.voxel_count());
  CHECK(all.threshold == 0.98);
  const SkeletonMap none = pseudo_skeleton(ProbabilityField(g, 0.98), 0.98);
  CHECK(count_foreground(none.mask) == 0);
  CHECK(pseudo_skeleton(ProbabilityField(g, 0.985)).threshold == 0.98);
}

TEST_CASE("predicted scales are the 1-based argmax") {
  ScaleProbabilityField g(Geometry({3, 1, 1}), 3);
  g.at(0, 1) = 0.1, g.at(0, 2) = 0.7, g.at(0, 3) = 0.2;
  g.at(1, 1) = 0.5, g.at(1, 2) = 0.5;
  g.at(2, 3) = 1.0;
  const ScaleMap z = predicted_scales(g);
  CHECK(z[0] == 2);
  CHECK(z[1] == 1);
  CHECK(z[2] == 3);
  const ScaleMap single = predicted_scales(ScaleProbabilityField(Geometry({2, 2, 2}), 1, 1.0));
  for (std::int16_t v : single.values()) CHECK(v == 1);
}

TEST_CASE("hard reconstruction of a lone voxel with scale 1 is a 7-voxel cross") {
  const Geometry g({5, 5, 5});
  const LabelMap m = reconstruct_hard(lone_skeleton(g, {2, 2, 2}), ScaleMap(g, 1));
  CHECK(count_foreground(m) == 7);
  CHECK(m.at(2, 2, 2) == 1);
  CHECK(m.at(1, 2, 2) == 1);
  CHECK(m.at(2, 2, 3) == 1);
  CHECK(m.at(1, 1, 2) == 0);
}

TEST_CASE("hard reconstruction of an empty skeleton is empty") {
  const Geometry g({6, 6, 6});
  CHECK(count_foreground(reconstruct_hard(SkeletonMap{LabelMap(g), 0.98}, ScaleMap(g, 2))) == 0);
}

TEST_CASE("distant balls add their voxel counts") {
  const Geometry g({30, 12, 12});
  SkeletonMap s{LabelMap(g), 0.98};
  s.mask.at(6, 6, 6) = 1;
  s.mask.at(22, 6, 6) = 1;
  ScaleMap z(g, 3);
  const std::size_t both = count_foreground(reconstruct_hard(s, z));
  const std::size_t a = count_foreground(reconstruct_hard(lone_skeleton(g, {6, 6, 6}), z));
  const std::size_t b = count_foreground(reconstruct_hard(lone_skeleton(g, {22, 6, 6}), z));
  CHECK(a == 123);  // lattice points with x^2 + y^2 + z^2 <= 9
  CHECK(both == a + b);
}

TEST_CASE("hard reconstruction equals brute-force ball union") {
  Rng rng(30);
  for (int trial = 0; trial < 10; ++trial) {
    const Geometry g = testing::random_geometry(rng, 3, 16);
    auto [s, z] = random_skeleton(rng, g, 0.02, 4);
    const LabelMap fast = reconstruct_hard(s, z);
    for (std::size_t n = 0; n < fast.size(); ++n) {
      const Index3 v = g.coord(n);
      bool inside = false;
      for (std::size_t u = 0; u < s.mask.size() && !inside; ++u) {
        if (s.mask[u]) inside = dist2(v, g.coord(u)) <= static_cast<double>(z[u]) * z[u];
      }
      CHECK(fast[n] == (inside ? 1 : 0));
    }
  }
}

TEST_CASE("hard reconstruction from true skeleton scales covers each ball") {
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    const Geometry g({16, 16, 16});
    const LabelMap mask = testing::random_blobs(g, 3, rng);
    const DistanceMap d = distance_transform(mask);
    const ScaleClassMap q = quantize(d, 8);
    SkeletonMap s{LabelMap(g), 0.98};
    ScaleMap z(g);
    for (std::size_t n = 0; n < g.voxel_count(); ++n) {
      if (q.classes[n] >= 1) {
        s.mask[n] = 1;
        z[n] = q.classes[n];
      }
    }
    const LabelMap rec = reconstruct_hard(s, z);
    for (std::size_t n = 0; n < g.voxel_count(); ++n) {
      if (!s.mask[n]) continue;
      const Index3 u = g.coord(n);
      const std::int64_t r = z[n];
      for (std::int64_t dk = -r; dk <= r; ++dk)
        for (std::int64_t dj = -r; dj <= r; ++dj)
          for (std::int64_t di = -r; di <= r; ++di) {
            if (di * di + dj * dj + dk * dk > r * r || !g.contains(u.i + di, u.j + dj, u.k + dk)) continue;
            CHECK(rec.at(u.i + di, u.j + dj, u.k + dk) == 1);
          }
    }
  }
}

TEST_CASE("soft reconstruction of a lone voxel: unit peak and exp(-4.5) at the scale radius") {
  const Geometry g({15, 15, 15});
  const SkeletonMap s = lone_skeleton(g, {7, 7, 7});
  for (int scale : {1, 2, 3, 4}) {
    const SoftShape soft = reconstruct_soft(s, ScaleMap(g, static_cast<std::int16_t>(scale)));
    CHECK(soft.kind == SoftShapeKind::reconstruction);
    CHECK(std::abs(soft.values.at(7, 7, 7) - 1.0) <= 1e-12);
    CHECK(std::abs(soft.values.at(7 + scale, 7, 7) - std::exp(-4.5)) <= 1e-12);
    CHECK(std::abs(soft.values.at(7, 7, 7 - scale) - 0.011109) < 1e-6);
  }
}

TEST_CASE("soft reconstruction drops offsets beyond the truncation radius") {
  const Geometry g({21, 21, 21});
  const SkeletonMap s = lone_skeleton(g, {10, 10, 10});
  const ScaleMap z(g, 3);  // sigma = 1
  const SoftShape m3 = reconstruct_soft(s, z, 3.0);
  CHECK(m3.values.at(13, 10, 10) > 0.0);
  CHECK(m3.values.at(14, 10, 10) == 0.0);
  CHECK(m3.values.at(12, 12, 10) > 0.0);   // sqrt(8) inside 3 sigma
  CHECK(m3.values.at(12, 12, 12) == 0.0);  // sqrt(12) outside
  const SoftShape m4 = reconstruct_soft(s, z, 4.0);
  CHECK(m4.values.at(14, 10, 10) == doctest::Approx(std::exp(-8.0)).epsilon(1e-12));
  CHECK(m4.values.at(15, 10, 10) == 0.0);
}

TEST_CASE("soft reconstruction is linear in the skeleton") {
  Rng rng(32);
  for (int trial = 0; trial < 5; ++trial) {
    const Geometry g = testing::random_geometry(rng, 4, 14);
    auto [s, z] = random_skeleton(rng, g, 0.03, 3);
    const SoftShape all = reconstruct_soft(s, z);
    Grid<double> sum(g);
    for (std::size_t u = 0; u < s.mask.size(); ++u) {
      if (!s.mask[u]) continue;
      const SoftShape one = reconstruct_soft(lone_skeleton(g, g.coord(u)), z);
      for (std::size_t n = 0; n < sum.size(); ++n) sum[n] += one.values[n];
    }
    for (std::size_t n = 0; n < sum.size(); ++n) CHECK(std::abs(all.values[n] - sum[n]) <= 1e-9);
  }
}

TEST_CASE("truncated reconstruction stays within the tail bound of the dense oracle") {
  Rng rng(33);
  for (int trial = 0; trial < 4; ++trial) {
    const Geometry g = testing::random_geometry(rng, 8, 18);
    auto [s, z] = random_skeleton(rng, g, 0.05, 4);
    const std::size_t count = count_foreground(s.mask);
    const SoftShape dense = oracle_reconstruct(s, z);
    for (double m : {3.0, 4.0}) {
      const SoftShape cut = reconstruct_soft(s, z, m);
      double worst = 0.0;
      for (std::size_t n = 0; n < g.voxel_count(); ++n) {
        CHECK(cut.values[n] <= dense.values[n] + 1e-12);
        worst = std::max(worst, dense.values[n] - cut.values[n]);
      }
      CHECK(worst <= std::exp(-m * m / 2.0) * static_cast<double>(count));
    }
  }
}

TEST_CASE("soft reconstruction is identical across thread counts") {
  Rng rng(34);
  const Geometry g({24, 20, 17});
  auto [s, z] = random_skeleton(rng, g, 0.05, 5);
  ProbabilityField p(g);
  for (double& v : p.values()) v = testing::uniform(rng, 0, 1);
  const SoftShape a = reconstruct_soft(s, z, 4.0, 1);
  const SoftShape r1 = refine_map(s, z, p, 4.0, 1);
  for (unsigned t : {2u, 3u, 4u, 7u}) {
    CHECK(reconstruct_soft(s, z, 4.0, t).values == a.values);
    CHECK(refine_map(s, z, p, 4.0, t).values == r1.values);
  }
}

TEST_CASE("a skeleton voxel without a scale is rejected") {
  const Geometry g({5, 5, 5});
  CHECK_THROWS_AS(reconstruct_soft(lone_skeleton(g, {2, 2, 2}), ScaleMap(g, 0)), ValidationError);
  CHECK_THROWS_AS(reconstruct_hard(lone_skeleton(g, {2, 2, 2}), ScaleMap(g, 0)), ValidationError);
}

TEST_CASE("refinement weights each kernel by the skeleton probability") {
  const Geometry g({9, 9, 9});
  const SkeletonMap s = lone_skeleton(g, {4, 4, 4});
  const ScaleMap z(g, 3);
  const SoftShape r = refine_map(s, z, ProbabilityField(g, 0.99));
  CHECK(r.kind == SoftShapeKind::refinement);
  CHECK(r.values.at(4, 4, 4) == doctest::Approx(0.99).epsilon(1e-14));
  const SoftShape silent = refine_map(s, z, ProbabilityField(g, 0.0));
  for (double v : silent.values.values()) CHECK(v == 0.0);
  CHECK(refine_map(s, z, ProbabilityField(g, 1.0)).values == reconstruct_soft(s, z).values);
  CHECK_THROWS_AS(refine_map(s, z, ProbabilityField(Geometry({9, 9, 8}), 1.0)), ValidationError);
}

TEST_CASE("refinement never exceeds reconstruction") {
  Rng rng(35);
  for (int trial = 0; trial < 5; ++trial) {
    const Geometry g = testing::random_geometry(rng, 4, 14);
    auto [s, z] = random_skeleton(rng, g, 0.05, 3);
    ProbabilityField p(g);
    for (double& v : p.values()) v = testing::uniform(rng, 0, 1);
    const SoftShape soft = reconstruct_soft(s, z);
    const SoftShape ref = refine_map(s, z, p);
    for (std::size_t n = 0; n < g.voxel_count(); ++n) CHECK(ref.values[n] <= soft.values[n] + 1e-12);
  }
}

TEST_CASE("binarize uses a strict threshold") {
  const Geometry g({3, 1, 1});
  SoftShape s{Grid<double>(g, std::vector<double>{0.5, 0.5000001, 0.0}), SoftShapeKind::refinement};
  const LabelMap m = binarize(s);
  CHECK(m[0] == 0);
  CHECK(m[1] == 1);
  CHECK(m[2] == 0);
  CHECK(count_foreground(binarize(SoftShape{Grid<double>(Geometry({4, 4, 4})), SoftShapeKind::refinement})) == 0);
}

TEST_CASE("lone skeleton voxel with p = 0.99 and scale 3 binarizes to the 7-voxel cross") {
  const Geometry g({9, 9, 9});
  const LabelMap m = binarize(refine_map(lone_skeleton(g, {4, 4, 4}), ScaleMap(g, 3), ProbabilityField(g, 0.99)), 0.5);
  CHECK(count_foreground(m) == 7);
  CHECK(m.at(5, 4, 4) == 1);
  CHECK(m.at(5, 5, 4) == 0);
  CHECK(std::sqrt(2.0 * std::log(0.99 / 0.5)) == doctest::Approx(1.168).epsilon(1e-3));
}

TEST_CASE("pipeline reproduces the individual operations") {
  Rng rng(36);
  const Geometry g({14, 12, 10});
  ProbabilityField p(g);
  for (double& v : p.values()) v = testing::uniform(rng, 0.9, 1.0);
  ScaleProbabilityField sg(g, 3);
  for (std::size_t n = 0; n < g.voxel_count(); ++n) sg.at(n, static_cast<int>(testing::uniform_int(rng, 1, 3))) = 1.0;
  const GarParams params;
  const GarResult r = gar_pipeline(p, sg, params, 3);
  const SkeletonMap s = pseudo_skeleton(p, 0.98);
  const ScaleMap z = predicted_scales(sg);
  const SoftShape ref = refine_map(s, z, p, 4.0);
  CHECK(r.skeleton.mask == s.mask);
  CHECK(r.scales == z);
  CHECK(r.refined.values == ref.values);
  CHECK(r.mask == binarize(ref, 0.5));
}

TEST_CASE("pipeline on an empty probability field is empty at every stage") {
  const Geometry g({8, 8, 8});
  const GarResult r = gar_pipeline(ProbabilityField(g), ScaleProbabilityField(g, 2, 0.5));
  CHECK(count_foreground(r.skeleton.mask) == 0);
  CHECK(count_foreground(r.mask) == 0);
  for (double v : r.refined.values.values()) CHECK(v == 0.0);
}

TEST_CASE("raising thresholds never adds voxels") {
  Rng rng(37);
  const Geometry g({12, 12, 12});
  ProbabilityField p(g);
  for (double& v : p.values()) v = testing::uniform(rng, 0.5, 1.0);
  ScaleProbabilityField sg(g, 2);
  for (std::size_t n = 0; n < g.voxel_count(); ++n) sg.at(n, static_cast<int>(testing::uniform_int(rng, 1, 2))) = 1.0;
  const double tps[] = {0.6, 0.8, 0.9, 0.95, 0.99};
  for (std::size_t i = 0; i + 1 < std::size(tps); ++i) {
    const LabelMap lo = pseudo_skeleton(p, tps[i]).mask;
    const LabelMap hi = pseudo_skeleton(p, tps[i + 1]).mask;
    for (std::size_t n = 0; n < g.voxel_count(); ++n) CHECK(hi[n] <= lo[n]);
  }
  const GarResult r = gar_pipeline(p, sg, GarParams{0.9, 0.1, 4.0});
  LabelMap prev = binarize(r.refined, 0.1);
  for (double tr = 0.2; tr <= 3.0; tr += 0.2) {
    const LabelMap next = binarize(r.refined, tr);
    for (std::size_t n = 0; n < g.voxel_count(); ++n) CHECK(next[n] <= prev[n]);
    prev = next;
  }
}
