#include "tubular/edt.hpp"

#include <cmath>
#include <string>

#include "parallel.hpp"

namespace tubular {

namespace {

constexpr std::array<std::array<int, 3>, 6> kFaceOffsets = {{
    {-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}}};

template <typename T>
constexpr T unreachable() {
  if constexpr (std::is_floating_point_v<T>) {
    return std::numeric_limits<T>::infinity();
  } else {
    return kNoSeed;
  }
}

// Lower envelope of the parabolas f[q] + w (x - q)^2 over one line.
// Parabola b between a < b < c is dropped when the a|b breakpoint is not left
// of the b|c breakpoint; the test is cross-multiplied so integer inputs stay
// exact.
template <typename T>
void envelope_1d(const T* f, std::int64_t n, T weight, T* out, std::vector<std::int64_t>& stack) {
  const T inf = unreachable<T>();
  stack.clear();
  auto lifted = [&](std::int64_t q) { return f[q] + weight * static_cast<T>(q) * static_cast<T>(q); };
  for (std::int64_t q = 0; q < n; ++q) {
    if (f[q] == inf) continue;
    while (stack.size() >= 2) {
      const std::int64_t b = stack.back();
      const std::int64_t a = stack[stack.size() - 2];
      const T lhs = (lifted(b) - lifted(a)) * static_cast<T>(q - b);
      const T rhs = (lifted(q) - lifted(b)) * static_cast<T>(b - a);
      if (lhs >= rhs) {
        stack.pop_back();
      } else {
        break;
      }
    }
    stack.push_back(q);
  }
  if (stack.empty()) {
    for (std::int64_t x = 0; x < n; ++x) out[x] = inf;
    return;
  }
  auto eval = [&](std::int64_t q, std::int64_t x) {
    const T dx = static_cast<T>(x - q);
    return f[q] + weight * dx * dx;
  };
  std::size_t j = 0;
  for (std::int64_t x = 0; x < n; ++x) {
    while (j + 1 < stack.size() && eval(stack[j + 1], x) <= eval(stack[j], x)) ++j;
    out[x] = eval(stack[j], x);
  }
}

template <typename T>
void sweep_axis(Grid<T>& field, int axis, T weight, unsigned threads) {
  const Geometry& g = field.geometry();
  const std::int64_t n = g.dims()[axis];
  const int a1 = axis == 0 ? 1 : 0;
  const int a2 = axis == 2 ? 1 : 2;
  const std::int64_t n1 = g.dims()[a1];
  const std::size_t lines = static_cast<std::size_t>(n1 * g.dims()[a2]);
  const std::size_t stride = g.stride(axis);
  const std::size_t s1 = g.stride(a1);
  const std::size_t s2 = g.stride(a2);
  T* data = field.values().data();
  detail::parallel_chunks(lines, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<T> in(static_cast<std::size_t>(n));
    std::vector<T> out(static_cast<std::size_t>(n));
    std::vector<std::int64_t> stack;
    stack.reserve(static_cast<std::size_t>(n));
    for (std::size_t line = begin; line < end; ++line) {
      const auto c1 = static_cast<std::size_t>(static_cast<std::int64_t>(line) % n1);
      const auto c2 = static_cast<std::size_t>(static_cast<std::int64_t>(line) / n1);
      const std::size_t base = c1 * s1 + c2 * s2;
      for (std::int64_t x = 0; x < n; ++x) in[x] = data[base + static_cast<std::size_t>(x) * stride];
      envelope_1d(in.data(), n, weight, out.data(), stack);
      for (std::int64_t x = 0; x < n; ++x) data[base + static_cast<std::size_t>(x) * stride] = out[x];
    }
  });
}

void require_axis_order(const std::array<int, 3>& order) {
  std::array<bool, 3> seen{};
  for (int a : order) {
    if (a < 0 || a > 2 || seen[a]) {
      throw ValidationError("axis_order must be a permutation of {0, 1, 2}");
    }
    seen[a] = true;
  }
}

}  // namespace

LabelMap SurfaceSet::mask() const {
  LabelMap out(geometry);
  for (const auto& v : voxels) out.at(v) = 1;
  return out;
}

SurfaceSet surface_voxels(const LabelMap& label) {
  SurfaceSet set{label.geometry(), {}};
  const Geometry& g = label.geometry();
  const Dims& d = g.dims();
  for (std::int64_t k = 0; k < d.z; ++k) {
    for (std::int64_t j = 0; j < d.y; ++j) {
      for (std::int64_t i = 0; i < d.x; ++i) {
        if (label.at(i, j, k) == 0) continue;
        for (const auto& o : kFaceOffsets) {
          const std::int64_t ni = i + o[0], nj = j + o[1], nk = k + o[2];
          if (!g.contains(ni, nj, nk) || label.at(ni, nj, nk) == 0) {
            set.voxels.push_back({i, j, k});
            break;
          }
        }
      }
    }
  }
  return set;
}

Grid<std::int64_t> squared_distance_to_seeds(const LabelMap& seeds, std::array<int, 3> axis_order,
                                             unsigned threads) {
  require_axis_order(axis_order);
  Grid<std::int64_t> field(seeds.geometry(), kNoSeed);
  for (std::size_t n = 0; n < seeds.size(); ++n) {
    if (seeds[n] != 0) field[n] = 0;
  }
  for (int axis : axis_order) sweep_axis<std::int64_t>(field, axis, 1, threads);
  return field;
}

Grid<double> squared_distance_to_seeds_mm(const LabelMap& seeds, unsigned threads) {
  Grid<double> field(seeds.geometry(), std::numeric_limits<double>::infinity());
  for (std::size_t n = 0; n < seeds.size(); ++n) {
    if (seeds[n] != 0) field[n] = 0.0;
  }
  const Spacing& s = seeds.spacing();
  for (int axis = 0; axis < 3; ++axis) sweep_axis<double>(field, axis, s[axis] * s[axis], threads);
  return field;
}

Grid<std::int64_t> squared_distance_transform(const LabelMap& label, std::array<int, 3> axis_order,
                                              unsigned threads) {
  Grid<std::int64_t> field = squared_distance_to_seeds(surface_voxels(label).mask(), axis_order, threads);
  for (std::size_t n = 0; n < label.size(); ++n) {
    if (label[n] == 0) field[n] = 0;
  }
  return field;
}

DistanceMap distance_transform(const LabelMap& label, DistanceUnits units, unsigned threads) {
  DistanceMap out{Grid<float>(label.geometry()), units};
  if (units == DistanceUnits::voxel) {
    const Grid<std::int64_t> sq = squared_distance_transform(label, {0, 1, 2}, threads);
    for (std::size_t n = 0; n < sq.size(); ++n) {
      out.values[n] = static_cast<float>(std::sqrt(static_cast<double>(sq[n])));
    }
  } else {
    const Grid<double> sq = squared_distance_to_seeds_mm(surface_voxels(label).mask(), threads);
    for (std::size_t n = 0; n < sq.size(); ++n) {
      out.values[n] = label[n] == 0 ? 0.0f : static_cast<float>(std::sqrt(sq[n]));
    }
  }
  return out;
}

int quantize_distance(double d, int bins) {
  if (bins < 1) {
    throw ValidationError("quantize: bin count K must be >= 1, got " + std::to_string(bins));
  }
  if (!(d > 0.0)) return 0;
  const double rounded = std::floor(d + 0.5);
  return rounded >= bins ? bins : static_cast<int>(rounded);
}

ScaleClassMap quantize(const DistanceMap& distances, int bins) {
  if (distances.units != DistanceUnits::voxel) {
    throw ValidationError("quantize: distances must be in voxel units");
  }
  if (bins < 1 || bins > std::numeric_limits<std::int16_t>::max()) {
    throw ValidationError("quantize: bin count K out of range: " + std::to_string(bins));
  }
  ScaleClassMap out{Grid<std::int16_t>(distances.values.geometry()), bins};
  for (std::size_t n = 0; n < distances.values.size(); ++n) {
    out.classes[n] = static_cast<std::int16_t>(quantize_distance(distances.values[n], bins));
  }
  return out;
}

int max_scale_class(const DistanceMap& distances) {
  double largest = 0.0;
  for (float d : distances.values.values()) largest = std::max(largest, static_cast<double>(d));
  return static_cast<int>(std::floor(largest + 0.5));
}

}  // namespace tubular
