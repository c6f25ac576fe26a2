#include "tubular/refine.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <string>

#include "parallel.hpp"

namespace tubular {

namespace {

struct KernelTap {
  std::int64_t di, dj, dk;
  double weight;
};

struct Kernel {
  std::int64_t reach = 0;
  std::vector<KernelTap> taps;
};

// Offsets within truncation * sigma of the centre, sigma = scale / 3.
Kernel gaussian_kernel(int scale, double truncation) {
  const double sigma = scale / 3.0;
  const double radius = truncation * sigma;
  const double radius_sq = radius * radius;
  Kernel kernel;
  kernel.reach = static_cast<std::int64_t>(std::floor(radius));
  for (std::int64_t dk = -kernel.reach; dk <= kernel.reach; ++dk) {
    for (std::int64_t dj = -kernel.reach; dj <= kernel.reach; ++dj) {
      for (std::int64_t di = -kernel.reach; di <= kernel.reach; ++di) {
        const double d2 = static_cast<double>(di * di + dj * dj + dk * dk);
        if (d2 <= radius_sq) {
          kernel.taps.push_back({di, dj, dk, std::exp(-d2 / (2.0 * sigma * sigma))});
        }
      }
    }
  }
  return kernel;
}

void require_skeleton_scales(const SkeletonMap& skeleton, const ScaleMap& scales) {
  require_same_dims(skeleton.mask.geometry(), scales.geometry(), "reconstruction");
  for (std::size_t n = 0; n < scales.size(); ++n) {
    if (skeleton.mask[n] != 0 && scales[n] < 1) {
      throw ValidationError("reconstruction: skeleton voxel " + std::to_string(n) +
                            " has no scale (>= 1 required)");
    }
  }
}

void require_truncation(double truncation) {
  if (!(truncation >= 3.0)) {
    std::ostringstream msg;
    msg << "truncation multiplier must be >= 3, got " << truncation;
    throw ValidationError(msg.str());
  }
}

// Splats every skeleton voxel in linear-index order. Threads own disjoint
// z-slabs of the output, so each voxel receives its contributions in the
// same order whatever the thread count.
SoftShape splat(const SkeletonMap& skeleton, const ScaleMap& scales, const ProbabilityField* p,
                double truncation, unsigned threads) {
  require_skeleton_scales(skeleton, scales);
  require_truncation(truncation);
  const Geometry& g = skeleton.mask.geometry();
  SoftShape out{Grid<double>(g), p ? SoftShapeKind::refinement : SoftShapeKind::reconstruction};

  std::vector<std::size_t> centres;
  std::map<int, Kernel> kernels;
  for (std::size_t n = 0; n < skeleton.mask.size(); ++n) {
    if (skeleton.mask[n] == 0) continue;
    centres.push_back(n);
    const int s = scales[n];
    if (!kernels.contains(s)) kernels.emplace(s, gaussian_kernel(s, truncation));
  }

  const std::size_t slices = static_cast<std::size_t>(g.dims().z);
  double* field = out.values.values().data();
  detail::parallel_chunks(slices, threads, [&](std::size_t k_begin, std::size_t k_end) {
    const auto lo = static_cast<std::int64_t>(k_begin);
    const auto hi = static_cast<std::int64_t>(k_end);
    for (std::size_t n : centres) {
      const Index3 u = g.coord(n);
      const Kernel& kernel = kernels.at(scales[n]);
      if (u.k + kernel.reach < lo || u.k - kernel.reach >= hi) continue;
      const double gain = p ? (*p)[n] : 1.0;
      for (const KernelTap& t : kernel.taps) {
        const std::int64_t vk = u.k + t.dk;
        if (vk < lo || vk >= hi) continue;
        const std::int64_t vi = u.i + t.di;
        const std::int64_t vj = u.j + t.dj;
        if (!g.contains(vi, vj, vk)) continue;
        field[g.linear(vi, vj, vk)] += gain * t.weight;
      }
    }
  });
  return out;
}

}  // namespace

void GarParams::validate() const {
  if (!(skeleton_threshold > 0.0 && skeleton_threshold < 1.0)) {
    std::ostringstream msg;
    msg << "T^p (skeleton threshold) must lie in (0, 1), got " << skeleton_threshold;
    throw ValidationError(msg.str());
  }
  if (!(refine_threshold > 0.0)) {
    std::ostringstream msg;
    msg << "T^r (refinement threshold) must be > 0, got " << refine_threshold;
    throw ValidationError(msg.str());
  }
  require_truncation(truncation);
}

SkeletonMap pseudo_skeleton(const ProbabilityField& p, double threshold) {
  SkeletonMap s{LabelMap(p.geometry()), threshold};
  for (std::size_t n = 0; n < p.size(); ++n) s.mask[n] = p[n] > threshold ? 1 : 0;
  return s;
}

ScaleMap predicted_scales(const ScaleProbabilityField& g) {
  ScaleMap out(g.geometry());
  for (std::size_t n = 0; n < g.voxel_count(); ++n) out[n] = static_cast<std::int16_t>(g.argmax(n));
  return out;
}

LabelMap reconstruct_hard(const SkeletonMap& skeleton, const ScaleMap& scales) {
  require_skeleton_scales(skeleton, scales);
  const Geometry& g = skeleton.mask.geometry();
  LabelMap out(g);
  for (std::size_t n = 0; n < skeleton.mask.size(); ++n) {
    if (skeleton.mask[n] == 0) continue;
    const Index3 u = g.coord(n);
    const std::int64_t r = scales[n];
    for (std::int64_t dk = -r; dk <= r; ++dk) {
      for (std::int64_t dj = -r; dj <= r; ++dj) {
        for (std::int64_t di = -r; di <= r; ++di) {
          if (di * di + dj * dj + dk * dk > r * r) continue;
          if (g.contains(u.i + di, u.j + dj, u.k + dk)) out.at(u.i + di, u.j + dj, u.k + dk) = 1;
        }
      }
    }
  }
  return out;
}

SoftShape reconstruct_soft(const SkeletonMap& skeleton, const ScaleMap& scales, double truncation,
                           unsigned threads) {
  return splat(skeleton, scales, nullptr, truncation, threads);
}

SoftShape refine_map(const SkeletonMap& skeleton, const ScaleMap& scales, const ProbabilityField& p,
                     double truncation, unsigned threads) {
  require_same_dims(skeleton.mask.geometry(), p.geometry(), "refine_map");
  return splat(skeleton, scales, &p, truncation, threads);
}

LabelMap binarize(const SoftShape& shape, double threshold) {
  LabelMap out(shape.values.geometry());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = shape.values[n] > threshold ? 1 : 0;
  return out;
}

GarResult gar_pipeline(const ProbabilityField& p, const ScaleProbabilityField& g,
                       const GarParams& params, unsigned threads) {
  params.validate();
  require_same_dims(p.geometry(), g.geometry(), "gar_pipeline");
  GarResult r;
  r.skeleton = pseudo_skeleton(p, params.skeleton_threshold);
  r.scales = predicted_scales(g);
  r.refined = refine_map(r.skeleton, r.scales, p, params.truncation, threads);
  r.mask = binarize(r.refined, params.refine_threshold);
  return r;
}

}  // namespace tubular
