#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "tubular/edt.hpp"
#include "tubular/grid.hpp"
#include "tubular/loss.hpp"
#include "tubular/refine.hpp"

namespace tubular {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

double dot(Vec3 a, Vec3 b);
Vec3 cross(Vec3 a, Vec3 b);
double norm(Vec3 a);

// Primitive coordinates are in voxel units: voxel (i, j, k) has its centre at
// (i, j, k).

/// Straight tube with flat end caps. The radius may taper linearly from
/// `radius` at `start` to `end_radius` at `end` (end_radius <= 0: constant).
struct Cylinder {
  Vec3 start{};
  Vec3 end{};
  double radius = 1.0;
  double end_radius = 0.0;

  friend bool operator==(const Cylinder&, const Cylinder&) = default;
};

/// Arc of a torus: centre curve is the circle of `major_radius` around
/// `center` in the plane normal to `normal`, restricted to angles
/// [arc_start, arc_end] (radians).
struct TorusSegment {
  Vec3 center{};
  Vec3 normal{0.0, 0.0, 1.0};
  double major_radius = 8.0;
  double minor_radius = 2.0;
  double arc_start = 0.0;
  double arc_end = 3.14159265358979323846;

  friend bool operator==(const TorusSegment&, const TorusSegment&) = default;
};

/// Helical tube starting at `base`, winding around `axis`.
struct Helix {
  Vec3 base{};
  Vec3 axis{0.0, 0.0, 1.0};
  double pitch = 8.0;  ///< advance along the axis per turn
  double helix_radius = 6.0;
  double tube_radius = 1.5;
  double turns = 1.0;

  friend bool operator==(const Helix&, const Helix&) = default;
};

using Primitive = std::variant<Cylinder, TorusSegment, Helix>;

struct PhantomSpec {
  Dims dims{32, 32, 32};
  Spacing spacing{};
  std::vector<Primitive> primitives;

  /// JSON form:
  ///   {"dims":[L,W,H], "spacing_mm":[sx,sy,sz], "primitives":[
  ///     {"type":"cylinder","start":[x,y,z],"end":[x,y,z],"radius":r,"end_radius":r2},
  ///     {"type":"torus","center":[..],"normal":[..],"major_radius":R,"minor_radius":r,
  ///      "arc_start":a0,"arc_end":a1},
  ///     {"type":"helix","base":[..],"axis":[..],"pitch":p,"helix_radius":R,
  ///      "tube_radius":r,"turns":n}]}
  static PhantomSpec from_json(const std::string& text);
  std::string to_json() const;
};

struct SkeletonPoint {
  Index3 voxel{};
  double radius = 0.0;  ///< analytic tube radius at the curve point
};

struct Phantom {
  LabelMap label;
  std::vector<SkeletonPoint> skeleton;
  PhantomSpec spec;

  LabelMap skeleton_mask() const;
  /// True radius at skeleton voxels, zero elsewhere.
  Grid<float> radius_map() const;
};

/// Labels a voxel iff its centre lies within the local radius of some
/// primitive's centre curve. Throws ValidationError for radii < 1 or
/// primitives that leave the grid.
Phantom generate_phantom(const PhantomSpec& spec);

struct SynthOptions {
  double boundary_noise = 0.0;  ///< sigma_b, voxels
  double flip_rate = 0.0;       ///< fraction of voxels replaced by U(0,1)
  int bins = 0;                 ///< K; 0 selects the largest class present
  double scale_blur = 0.0;      ///< mass moved from the true class to its neighbours
  double high = 0.99;           ///< probability inside the confident core
  bool balanced = true;         ///< emit the class-balanced posterior (see synth_fields)
  std::uint64_t seed = 0;
};

struct SynthFields {
  ProbabilityField p;
  ScaleProbabilityField g;
  ScaleClassMap z;  ///< quantized true distance map the g field is built from
};

/// Emulated network outputs for a phantom.
///
/// p: with signed boundary distance phi (voxel centres inside the mask at
/// depth d have phi = d - 1/2, outside phi = -(d - 1/2)) and per-voxel
/// boundary jitter eta ~ N(0, sigma_b^2), the foreground posterior is
///   q = clamp(1/2 + (phi + eta) / (2 sigma_b), 0, 1),
/// which is 1 on the mask eroded by sigma_b and decays to 0 across the
/// boundary. A model trained with the class-balanced cross-entropy
/// (beta_p / beta_n = rho = #background / #foreground) outputs the
/// reweighted posterior rho q / (rho q + 1 - q) rather than q, so with
/// `balanced` set
///   p = high * rho q / (rho q + 1 - q),
/// otherwise p = high * q. sigma_b = 0 gives p = high * mask either way.
/// A flip_rate fraction of voxels is then replaced by uniform noise.
///
/// g: one-hot at the quantized distance class of each voxel (class 1 where
/// that class is 0), optionally spreading `scale_blur` to adjacent classes.
SynthFields synth_fields(const Phantom& phantom, const SynthOptions& options);

/// Voxel budget of the brute-force oracles (64^3).
inline constexpr std::size_t kOracleVoxelLimit = 64 * 64 * 64;

/// Exhaustive squared voxel-unit distance to the surface set.
Grid<std::int64_t> oracle_squared_distance(const LabelMap& label);
DistanceMap oracle_distance(const LabelMap& label);

/// Dense, untruncated soft reconstruction.
SoftShape oracle_reconstruct(const SkeletonMap& skeleton, const ScaleMap& scales);

}  // namespace tubular
