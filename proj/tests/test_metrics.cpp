#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "support.hpp"
#include "tubular/error.hpp"
#include "tubular/metrics.hpp"

using namespace tubular;
using testing::Rng;

namespace {

// Direction-averaged mean over surface voxels of the exhaustive mm distance.
double brute_msd(const LabelMap& a, const LabelMap& b) {
  const Geometry& g = a.geometry();
  const Spacing s = g.spacing();
  auto one_way = [&](const LabelMap& from, const LabelMap& to) {
    const auto src = testing::brute_surface(from);
    const auto dst = testing::brute_surface(to);
    double total = 0.0;
    for (const Index3& u : src) {
      double best = INFINITY;
      for (const Index3& v : dst) {
        const double dx = (u.i - v.i) * s.x, dy = (u.j - v.j) * s.y, dz = (u.k - v.k) * s.z;
        best = std::min(best, dx * dx + dy * dy + dz * dz);
      }
      total += std::sqrt(best);
    }
    return total / static_cast<double>(src.size());
  };
  return 0.5 * (one_way(a, b) + one_way(b, a));
}

std::vector<CaseOutcome> cohort(std::size_t abnormal, std::size_t misses, std::size_t normal, std::size_t fps) {
  std::vector<CaseOutcome> out;
  for (std::size_t i = 0; i < abnormal; ++i) {
    out.push_back({"a" + std::to_string(i), CaseLabel::abnormal, i < misses ? CaseLabel::normal : CaseLabel::abnormal});
  }
  for (std::size_t i = 0; i < normal; ++i) {
    out.push_back({"n" + std::to_string(i), CaseLabel::normal, i < fps ? CaseLabel::abnormal : CaseLabel::normal});
  }
  return out;
}

}  // namespace

TEST_CASE("dsc basics") {
  Rng rng(40);
  const Geometry g({10, 10, 10});
  const LabelMap a = testing::random_blobs(g, 3, rng);
  CHECK(dsc(a, a) == 1.0);
  LabelMap left(g), right(g);
  for (std::size_t n = 0; n < 100; ++n) left[n] = 1;
  for (std::size_t n = 500; n < 600; ++n) right[n] = 1;
  CHECK(dsc(left, right) == 0.0);
  CHECK(dsc(LabelMap(g), LabelMap(g)) == 1.0);
  CHECK(dsc(left, LabelMap(g)) == 0.0);
  CHECK_THROWS_AS(dsc(a, LabelMap(Geometry({10, 10, 9}))), ValidationError);
}

TEST_CASE("dsc of a 50-voxel subset of 100 voxels is 2/3") {
  const Geometry g({10, 10, 1});
  LabelMap a(g), b(g);
  for (std::size_t n = 0; n < 100; ++n) b[n] = 1;
  for (std::size_t n = 0; n < 50; ++n) a[n * 2] = 1;
  CHECK(dsc(a, b) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("dsc is symmetric") {
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const Geometry g = testing::random_geometry(rng, 2, 12);
    const LabelMap a = testing::random_label(g, testing::uniform(rng, 0, 1), rng);
    const LabelMap b = testing::random_label(g, testing::uniform(rng, 0, 1), rng);
    CHECK(dsc(a, b) == dsc(b, a));
    CHECK(dsc(a, b) >= 0.0);
    CHECK(dsc(a, b) <= 1.0);
  }
}

TEST_CASE("msd of identical masks is zero") {
  Rng rng(42);
  const LabelMap a = testing::random_blobs(Geometry({12, 12, 12}, {0.7, 0.8, 1.3}), 3, rng);
  CHECK(mean_surface_distance(a, a) == 0.0);
}

TEST_CASE("msd between parallel plates two voxels apart at 0.5 mm is 1 mm") {
  const Geometry g({8, 8, 10}, {0.5, 0.5, 0.5});
  LabelMap a(g), b(g);
  for (std::int64_t j = 0; j < 8; ++j)
    for (std::int64_t i = 0; i < 8; ++i) {
      a.at(i, j, 3) = 1;
      b.at(i, j, 5) = 1;
    }
  CHECK(mean_surface_distance(a, b) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("msd between single voxels three apart is 3") {
  const Geometry g({9, 9, 9});
  LabelMap a(g), b(g);
  a.at(2, 4, 4) = 1;
  b.at(5, 4, 4) = 1;
  CHECK(mean_surface_distance(a, b) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("msd matches exhaustive search, is symmetric and thread-independent") {
  Rng rng(43);
  for (int trial = 0; trial < 8; ++trial) {
    const Geometry g({testing::uniform_int(rng, 4, 14), testing::uniform_int(rng, 4, 14), testing::uniform_int(rng, 4, 14)},
                     {testing::uniform(rng, 0.4, 1.5), testing::uniform(rng, 0.4, 1.5), testing::uniform(rng, 0.4, 1.5)});
    const LabelMap a = testing::random_blobs(g, 2, rng);
    const LabelMap b = testing::random_blobs(g, 2, rng);
    const double m = mean_surface_distance(a, b);
    CHECK(m == doctest::Approx(brute_msd(a, b)).epsilon(1e-9));
    CHECK(m == mean_surface_distance(b, a));
    CHECK(m == mean_surface_distance(a, b, 4));
  }
}

TEST_CASE("msd rejects empty masks and mismatched geometry") {
  const Geometry g({4, 4, 4});
  LabelMap a(g);
  a[0] = 1;
  CHECK_THROWS_AS(mean_surface_distance(a, LabelMap(g)), ValidationError);
  CHECK_THROWS_AS(mean_surface_distance(LabelMap(g), a), ValidationError);
  CHECK_THROWS_AS(mean_surface_distance(a, LabelMap(Geometry({4, 4, 5}))), ValidationError);
}

TEST_CASE("case tally: 136 abnormal with 8 misses") {
  const CaseTally t = case_tally(cohort(136, 8, 0, 0));
  CHECK(t.abnormal == 136);
  CHECK(t.misses == 8);
  CHECK(t.sensitivity() == doctest::Approx(128.0 / 136.0).epsilon(1e-15));
  CHECK(std::round(t.sensitivity() * 1000.0) / 10.0 == 94.1);
  CHECK_THROWS_AS(t.specificity(), DegenerateInputError);
}

TEST_CASE("case tally: 136 abnormal with 4 misses") {
  const CaseTally t = case_tally(cohort(136, 4, 0, 0));
  CHECK(std::round(t.sensitivity() * 1000.0) / 10.0 == 97.1);
}

TEST_CASE("case tally: all normal predicted normal") {
  const CaseTally t = case_tally(cohort(0, 0, 25, 0));
  CHECK(t.specificity() == 1.0);
  CHECK(t.false_positives == 0);
  CHECK_THROWS_AS(t.sensitivity(), DegenerateInputError);
}

TEST_CASE("case tally rejects an empty list and is permutation-invariant") {
  CHECK_THROWS_AS(case_tally({}), ValidationError);
  Rng rng(44);
  auto cases = cohort(40, 7, 60, 5);
  const CaseTally ref = case_tally(cases);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(cases.begin(), cases.end(), rng);
    const CaseTally t = case_tally(cases);
    CHECK(t.abnormal == ref.abnormal);
    CHECK(t.normal == ref.normal);
    CHECK(t.misses == ref.misses);
    CHECK(t.false_positives == ref.false_positives);
  }
  CHECK(ref.specificity() == doctest::Approx(55.0 / 60.0).epsilon(1e-15));
}
