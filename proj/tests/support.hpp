#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "tubular/grid.hpp"

namespace testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

inline tubular::Geometry random_geometry(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return tubular::Geometry({uniform_int(rng, lo, hi), uniform_int(rng, lo, hi), uniform_int(rng, lo, hi)});
}

/// Independent Bernoulli voxels with the given foreground probability.
inline tubular::LabelMap random_label(const tubular::Geometry& g, double fraction, Rng& rng) {
  tubular::LabelMap label(g);
  std::bernoulli_distribution fg(fraction);
  for (std::size_t n = 0; n < label.size(); ++n) label[n] = fg(rng) ? 1 : 0;
  return label;
}

/// Union of random axis-aligned boxes, giving blob-like foreground with
/// deep interiors.
inline tubular::LabelMap random_blobs(const tubular::Geometry& g, int count, Rng& rng) {
  tubular::LabelMap label(g);
  const tubular::Dims d = g.dims();
  for (int b = 0; b < count; ++b) {
    std::int64_t lo[3], hi[3];
    for (int a = 0; a < 3; ++a) {
      const std::int64_t dim = d[a];
      lo[a] = uniform_int(rng, 0, dim - 1);
      hi[a] = std::min(dim, lo[a] + uniform_int(rng, 1, std::max<std::int64_t>(1, dim / 2)));
    }
    for (std::int64_t k = lo[2]; k < hi[2]; ++k)
      for (std::int64_t j = lo[1]; j < hi[1]; ++j)
        for (std::int64_t i = lo[0]; i < hi[0]; ++i) label.at(i, j, k) = 1;
  }
  return label;
}

/// Surface voxels by direct inspection of the six face neighbours; outside
/// the grid counts as background.
inline std::vector<tubular::Index3> brute_surface(const tubular::LabelMap& label) {
  const tubular::Geometry& g = label.geometry();
  std::vector<tubular::Index3> out;
  const std::int64_t off[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  for (std::size_t n = 0; n < label.size(); ++n) {
    if (!label[n]) continue;
    const tubular::Index3 v = g.coord(n);
    for (const auto& o : off) {
      const std::int64_t i = v.i + o[0], j = v.j + o[1], k = v.k + o[2];
      if (!g.contains(i, j, k) || label.at(i, j, k) == 0) {
        out.push_back(v);
        break;
      }
    }
  }
  return out;
}

/// Squared distance from every foreground voxel to the nearest surface
/// voxel by exhaustive search; zero on background.
inline std::vector<std::int64_t> brute_squared_distance(const tubular::LabelMap& label) {
  const tubular::Geometry& g = label.geometry();
  const auto surface = brute_surface(label);
  std::vector<std::int64_t> out(label.size(), 0);
  for (std::size_t n = 0; n < label.size(); ++n) {
    if (!label[n]) continue;
    const tubular::Index3 v = g.coord(n);
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    for (const tubular::Index3& s : surface) {
      const std::int64_t di = v.i - s.i, dj = v.j - s.j, dk = v.k - s.k;
      best = std::min(best, di * di + dj * dj + dk * dk);
    }
    out[n] = best;
  }
  return out;
}

/// Unique scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("tubular_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

}  // namespace testing
