#include "tubular/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace tubular {

using nlohmann::json;

double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kCurveStep = 0.05;

Vec3 normalized(Vec3 v, const char* what) {
  const double n = norm(v);
  if (!(n > 0.0)) throw ValidationError(std::string(what) + " must be a nonzero vector");
  return (1.0 / n) * v;
}

// Orthonormal (e1, e2) spanning the plane normal to n.
std::pair<Vec3, Vec3> plane_basis(Vec3 n) {
  const Vec3 helper = std::abs(n.x) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
  const Vec3 e1 = normalized(helper - dot(helper, n) * n, "plane basis");
  return {e1, cross(n, e1)};
}

double segment_distance(Vec3 p, Vec3 a, Vec3 b) {
  const Vec3 ab = b - a;
  const double len2 = dot(ab, ab);
  const double t = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
  return norm(p - (a + t * ab));
}

// A primitive reduced to what the generator needs: a membership test, the
// centre curve with its radius (for the skeleton), and an axis-aligned box
// that contains the whole tube.
struct Tube {
  std::function<bool(Vec3)> contains;
  std::vector<std::pair<Vec3, double>> curve;  // samples with local radius
  Vec3 lo{}, hi{};
};

void require_radius(double r, const char* what) {
  if (!(r >= 1.0)) {
    std::ostringstream msg;
    msg << what << " must be >= 1 voxel, got " << r;
    throw ValidationError(msg.str());
  }
}

void bound_samples(Tube& tube) {
  tube.lo = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
             std::numeric_limits<double>::infinity()};
  tube.hi = -1.0 * tube.lo;
  for (const auto& [c, r] : tube.curve) {
    tube.lo = {std::min(tube.lo.x, c.x - r), std::min(tube.lo.y, c.y - r), std::min(tube.lo.z, c.z - r)};
    tube.hi = {std::max(tube.hi.x, c.x + r), std::max(tube.hi.y, c.y + r), std::max(tube.hi.z, c.z + r)};
  }
}

Tube make_tube(const Cylinder& c) {
  const double r0 = c.radius;
  const double r1 = c.end_radius > 0.0 ? c.end_radius : c.radius;
  require_radius(r0, "cylinder radius");
  require_radius(r1, "cylinder end_radius");
  const Vec3 axis = c.end - c.start;
  const double len2 = dot(axis, axis);
  if (!(len2 > 0.0)) throw ValidationError("cylinder start and end coincide");
  Tube t;
  t.contains = [=](Vec3 p) {
    const double s = dot(p - c.start, axis) / len2;
    if (s < 0.0 || s > 1.0) return false;
    const double r = r0 + s * (r1 - r0);
    return norm(p - (c.start + s * axis)) <= r;
  };
  const double len = std::sqrt(len2);
  const int steps = std::max(1, static_cast<int>(std::ceil(len / kCurveStep)));
  for (int n = 0; n <= steps; ++n) {
    const double s = static_cast<double>(n) / steps;
    t.curve.emplace_back(c.start + s * axis, r0 + s * (r1 - r0));
  }
  // End discs extend r * sqrt(1 - a_i^2) along axis i (a = unit axis).
  const Vec3 a = (1.0 / len) * axis;
  auto extent = [](double r, double ai) { return r * std::sqrt(std::max(0.0, 1.0 - ai * ai)); };
  t.lo = {std::min(c.start.x - extent(r0, a.x), c.end.x - extent(r1, a.x)),
          std::min(c.start.y - extent(r0, a.y), c.end.y - extent(r1, a.y)),
          std::min(c.start.z - extent(r0, a.z), c.end.z - extent(r1, a.z))};
  t.hi = {std::max(c.start.x + extent(r0, a.x), c.end.x + extent(r1, a.x)),
          std::max(c.start.y + extent(r0, a.y), c.end.y + extent(r1, a.y)),
          std::max(c.start.z + extent(r0, a.z), c.end.z + extent(r1, a.z))};
  return t;
}

Tube make_tube(const TorusSegment& ts) {
  require_radius(ts.minor_radius, "torus minor_radius");
  if (!(ts.major_radius > ts.minor_radius)) {
    throw ValidationError("torus major_radius must exceed minor_radius");
  }
  const double sweep = ts.arc_end - ts.arc_start;
  if (!(sweep > 0.0 && sweep <= kTwoPi)) {
    throw ValidationError("torus arc must satisfy 0 < arc_end - arc_start <= 2*pi");
  }
  const Vec3 n = normalized(ts.normal, "torus normal");
  const auto [e1, e2] = plane_basis(n);
  auto point_at = [=](double angle) {
    return ts.center + ts.major_radius * std::cos(angle) * e1 + ts.major_radius * std::sin(angle) * e2;
  };
  const Vec3 first = point_at(ts.arc_start);
  const Vec3 last = point_at(ts.arc_end);
  Tube t;
  t.contains = [=](Vec3 p) {
    const Vec3 q = p - ts.center;
    const double h = dot(q, n);
    const double u = dot(q, e1);
    const double v = dot(q, e2);
    const double rho = std::sqrt(u * u + v * v);
    double phi = std::atan2(v, u);
    while (phi < ts.arc_start) phi += kTwoPi;
    while (phi >= ts.arc_start + kTwoPi) phi -= kTwoPi;
    double d;
    if (phi <= ts.arc_end) {
      d = std::sqrt((rho - ts.major_radius) * (rho - ts.major_radius) + h * h);
    } else {
      d = std::min(norm(p - first), norm(p - last));
    }
    return d <= ts.minor_radius;
  };
  const int steps = std::max(1, static_cast<int>(std::ceil(sweep * ts.major_radius / kCurveStep)));
  for (int k = 0; k <= steps; ++k) {
    t.curve.emplace_back(point_at(ts.arc_start + sweep * k / steps), ts.minor_radius);
  }
  bound_samples(t);
  return t;
}

Tube make_tube(const Helix& hx) {
  require_radius(hx.tube_radius, "helix tube_radius");
  if (!(hx.helix_radius > 0.0) || !(hx.turns > 0.0)) {
    throw ValidationError("helix requires helix_radius > 0 and turns > 0");
  }
  const Vec3 axis = normalized(hx.axis, "helix axis");
  const auto [e1, e2] = plane_basis(axis);
  const double angle = kTwoPi * hx.turns;
  const double length = hx.turns * std::hypot(kTwoPi * hx.helix_radius, hx.pitch);
  const int steps = std::max(1, static_cast<int>(std::ceil(length / kCurveStep)));
  Tube t;
  std::vector<Vec3> polyline;
  for (int k = 0; k <= steps; ++k) {
    const double s = static_cast<double>(k) / steps;
    const Vec3 c = hx.base + hx.helix_radius * std::cos(angle * s) * e1 +
                   hx.helix_radius * std::sin(angle * s) * e2 + (hx.pitch * hx.turns * s) * axis;
    polyline.push_back(c);
    t.curve.emplace_back(c, hx.tube_radius);
  }
  const double r = hx.tube_radius;
  t.contains = [polyline, r](Vec3 p) {
    for (std::size_t k = 0; k + 1 < polyline.size(); ++k) {
      if (segment_distance(p, polyline[k], polyline[k + 1]) <= r) return true;
    }
    return false;
  };
  bound_samples(t);
  return t;
}

Vec3 read_vec3(const json& j, const char* key) {
  const auto& a = j.at(key);
  if (a.size() != 3) throw ValidationError(std::string("phantom field '") + key + "' needs 3 values");
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

json write_vec3(Vec3 v) { return json::array({v.x, v.y, v.z}); }

}  // namespace

PhantomSpec PhantomSpec::from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    PhantomSpec spec;
    const auto& d = j.at("dims");
    if (d.size() != 3) throw ValidationError("phantom dims needs 3 values");
    spec.dims = {d[0].get<std::int64_t>(), d[1].get<std::int64_t>(), d[2].get<std::int64_t>()};
    if (j.contains("spacing_mm")) {
      const Vec3 s = read_vec3(j, "spacing_mm");
      spec.spacing = {s.x, s.y, s.z};
    }
    for (const auto& p : j.at("primitives")) {
      const std::string type = p.at("type").get<std::string>();
      if (type == "cylinder") {
        Cylinder c;
        c.start = read_vec3(p, "start");
        c.end = read_vec3(p, "end");
        c.radius = p.at("radius").get<double>();
        c.end_radius = p.value("end_radius", 0.0);
        spec.primitives.emplace_back(c);
      } else if (type == "torus") {
        TorusSegment t;
        t.center = read_vec3(p, "center");
        if (p.contains("normal")) t.normal = read_vec3(p, "normal");
        t.major_radius = p.at("major_radius").get<double>();
        t.minor_radius = p.at("minor_radius").get<double>();
        t.arc_start = p.value("arc_start", t.arc_start);
        t.arc_end = p.value("arc_end", t.arc_end);
        spec.primitives.emplace_back(t);
      } else if (type == "helix") {
        Helix h;
        h.base = read_vec3(p, "base");
        if (p.contains("axis")) h.axis = read_vec3(p, "axis");
        h.pitch = p.at("pitch").get<double>();
        h.helix_radius = p.at("helix_radius").get<double>();
        h.tube_radius = p.at("tube_radius").get<double>();
        h.turns = p.value("turns", 1.0);
        spec.primitives.emplace_back(h);
      } else {
        throw ValidationError("unknown phantom primitive type '" + type + "'");
      }
    }
    return spec;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid phantom spec: ") + e.what());
  }
}

std::string PhantomSpec::to_json() const {
  json j;
  j["dims"] = {dims.x, dims.y, dims.z};
  j["spacing_mm"] = {spacing.x, spacing.y, spacing.z};
  j["primitives"] = json::array();
  for (const Primitive& prim : primitives) {
    json p;
    if (const auto* c = std::get_if<Cylinder>(&prim)) {
      p = {{"type", "cylinder"}, {"start", write_vec3(c->start)}, {"end", write_vec3(c->end)},
           {"radius", c->radius}, {"end_radius", c->end_radius}};
    } else if (const auto* t = std::get_if<TorusSegment>(&prim)) {
      p = {{"type", "torus"},          {"center", write_vec3(t->center)},
           {"normal", write_vec3(t->normal)}, {"major_radius", t->major_radius},
           {"minor_radius", t->minor_radius}, {"arc_start", t->arc_start},
           {"arc_end", t->arc_end}};
    } else {
      const auto& h = std::get<Helix>(prim);
      p = {{"type", "helix"},           {"base", write_vec3(h.base)},
           {"axis", write_vec3(h.axis)}, {"pitch", h.pitch},
           {"helix_radius", h.helix_radius}, {"tube_radius", h.tube_radius},
           {"turns", h.turns}};
    }
    j["primitives"].push_back(p);
  }
  return j.dump(2) + "\n";
}

LabelMap Phantom::skeleton_mask() const {
  LabelMap out(label.geometry());
  for (const auto& s : skeleton) out.at(s.voxel) = 1;
  return out;
}

Grid<float> Phantom::radius_map() const {
  Grid<float> out(label.geometry());
  for (const auto& s : skeleton) out.at(s.voxel) = static_cast<float>(s.radius);
  return out;
}

Phantom generate_phantom(const PhantomSpec& spec) {
  const Geometry geometry(spec.dims, spec.spacing);
  Phantom ph{LabelMap(geometry), {}, spec};
  std::unordered_set<std::size_t> seen;
  constexpr double kSlack = 1e-9;
  for (std::size_t index = 0; index < spec.primitives.size(); ++index) {
    const Tube tube = std::visit([](const auto& p) { return make_tube(p); }, spec.primitives[index]);
    for (int axis = 0; axis < 3; ++axis) {
      const double lo = axis == 0 ? tube.lo.x : (axis == 1 ? tube.lo.y : tube.lo.z);
      const double hi = axis == 0 ? tube.hi.x : (axis == 1 ? tube.hi.y : tube.hi.z);
      if (lo < -kSlack || hi > static_cast<double>(spec.dims[axis] - 1) + kSlack) {
        throw ValidationError("phantom primitive " + std::to_string(index) +
                              " does not fit inside the volume");
      }
    }
    const auto i0 = static_cast<std::int64_t>(std::floor(tube.lo.x));
    const auto j0 = static_cast<std::int64_t>(std::floor(tube.lo.y));
    const auto k0 = static_cast<std::int64_t>(std::floor(tube.lo.z));
    const auto i1 = static_cast<std::int64_t>(std::ceil(tube.hi.x));
    const auto j1 = static_cast<std::int64_t>(std::ceil(tube.hi.y));
    const auto k1 = static_cast<std::int64_t>(std::ceil(tube.hi.z));
    for (std::int64_t k = std::max<std::int64_t>(0, k0); k <= std::min(k1, spec.dims.z - 1); ++k) {
      for (std::int64_t j = std::max<std::int64_t>(0, j0); j <= std::min(j1, spec.dims.y - 1); ++j) {
        for (std::int64_t i = std::max<std::int64_t>(0, i0); i <= std::min(i1, spec.dims.x - 1); ++i) {
          if (tube.contains({static_cast<double>(i), static_cast<double>(j), static_cast<double>(k)})) {
            ph.label.at(i, j, k) = 1;
          }
        }
      }
    }
    for (const auto& [c, r] : tube.curve) {
      const Index3 v{std::llround(c.x), std::llround(c.y), std::llround(c.z)};
      if (!geometry.contains(v) || ph.label.at(v) == 0) continue;
      if (seen.insert(geometry.linear(v)).second) ph.skeleton.push_back({v, r});
    }
  }
  return ph;
}

SynthFields synth_fields(const Phantom& phantom, const SynthOptions& options) {
  if (!(options.boundary_noise >= 0.0)) throw ValidationError("boundary noise must be >= 0");
  if (!(options.flip_rate >= 0.0 && options.flip_rate <= 1.0)) {
    throw ValidationError("flip rate must lie in [0, 1]");
  }
  if (!(options.scale_blur >= 0.0 && options.scale_blur < 0.5)) {
    throw ValidationError("scale blur must lie in [0, 0.5)");
  }
  if (!(options.high > 0.0 && options.high <= 1.0)) {
    throw ValidationError("core probability must lie in (0, 1]");
  }
  const LabelMap& label = phantom.label;
  const Geometry& geometry = label.geometry();

  const DistanceMap distances = distance_transform(label);
  const int largest = std::max(1, max_scale_class(distances));
  const int bins = options.bins == 0 ? largest : options.bins;
  if (bins < largest) {
    throw ValidationError("K = " + std::to_string(bins) + " is below the largest scale class " +
                          std::to_string(largest) + " of the phantom");
  }

  SynthFields out{ProbabilityField(geometry), ScaleProbabilityField(geometry, bins),
                  quantize(distances, bins)};

  const double sigma = options.boundary_noise;
  if (sigma == 0.0) {
    for (std::size_t n = 0; n < label.size(); ++n) out.p[n] = label[n] != 0 ? options.high : 0.0;
  } else {
    LabelMap background(geometry);
    for (std::size_t n = 0; n < label.size(); ++n) background[n] = label[n] == 0 ? 1 : 0;
    const Grid<std::int64_t> depth = squared_distance_to_seeds(background);
    const Grid<std::int64_t> gap = squared_distance_to_seeds(label);
    const auto fg = static_cast<double>(count_foreground(label));
    const double bg = static_cast<double>(label.size()) - fg;
    const double rho = options.balanced && fg > 0.0 && bg > 0.0 ? bg / fg : 1.0;
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> jitter(0.0, sigma);
    for (std::size_t n = 0; n < label.size(); ++n) {
      double phi;
      if (label[n] != 0) {
        phi = depth[n] == kNoSeed ? std::numeric_limits<double>::infinity()
                                  : std::sqrt(static_cast<double>(depth[n])) - 0.5;
      } else {
        phi = gap[n] == kNoSeed ? -std::numeric_limits<double>::infinity()
                                : 0.5 - std::sqrt(static_cast<double>(gap[n]));
      }
      const double eta = jitter(rng);
      const double q = std::clamp(0.5 + (phi + eta) / (2.0 * sigma), 0.0, 1.0);
      out.p[n] = options.high * rho * q / (rho * q + 1.0 - q);
    }
  }
  if (options.flip_rate > 0.0) {
    std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t n = 0; n < label.size(); ++n) {
      const double u = unit(rng);
      const double replacement = unit(rng);
      if (u < options.flip_rate) out.p[n] = replacement;
    }
  }

  const double blur = options.scale_blur;
  for (std::size_t n = 0; n < label.size(); ++n) {
    const int z = std::max<int>(1, out.z.classes[n]);
    const bool below = z > 1;
    const bool above = z < bins;
    out.g.at(n, z) = 1.0 - ((below || above) ? blur : 0.0);
    if (below && above) {
      out.g.at(n, z - 1) = blur / 2.0;
      out.g.at(n, z + 1) = blur / 2.0;
    } else if (below) {
      out.g.at(n, z - 1) = blur;
    } else if (above) {
      out.g.at(n, z + 1) = blur;
    }
  }
  return out;
}

Grid<std::int64_t> oracle_squared_distance(const LabelMap& label) {
  if (label.size() > kOracleVoxelLimit) {
    throw ValidationError("oracle_distance: volume exceeds the 64^3 oracle budget");
  }
  const SurfaceSet surface = surface_voxels(label);
  Grid<std::int64_t> out(label.geometry(), 0);
  const Geometry& g = label.geometry();
  for (std::size_t n = 0; n < label.size(); ++n) {
    if (label[n] == 0) continue;
    const Index3 v = g.coord(n);
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    for (const Index3& u : surface.voxels) {
      const std::int64_t di = v.i - u.i, dj = v.j - u.j, dk = v.k - u.k;
      best = std::min(best, di * di + dj * dj + dk * dk);
    }
    out[n] = best;
  }
  return out;
}

DistanceMap oracle_distance(const LabelMap& label) {
  const Grid<std::int64_t> sq = oracle_squared_distance(label);
  DistanceMap out{Grid<float>(label.geometry()), DistanceUnits::voxel};
  for (std::size_t n = 0; n < sq.size(); ++n) {
    out.values[n] = static_cast<float>(std::sqrt(static_cast<double>(sq[n])));
  }
  return out;
}

SoftShape oracle_reconstruct(const SkeletonMap& skeleton, const ScaleMap& scales) {
  const LabelMap& s = skeleton.mask;
  if (s.size() > kOracleVoxelLimit) {
    throw ValidationError("oracle_reconstruct: volume exceeds the 64^3 oracle budget");
  }
  require_same_dims(s.geometry(), scales.geometry(), "oracle_reconstruct");
  const Geometry& g = s.geometry();
  std::vector<std::pair<Index3, double>> centres;
  for (std::size_t n = 0; n < s.size(); ++n) {
    if (s[n] == 0) continue;
    if (scales[n] < 1) throw ValidationError("oracle_reconstruct: skeleton voxel without scale");
    const double sigma = scales[n] / 3.0;
    centres.emplace_back(g.coord(n), 2.0 * sigma * sigma);
  }
  SoftShape out{Grid<double>(g), SoftShapeKind::reconstruction};
  for (std::size_t n = 0; n < s.size(); ++n) {
    const Index3 v = g.coord(n);
    double sum = 0.0;
    for (const auto& [u, two_sigma_sq] : centres) {
      const double di = static_cast<double>(v.i - u.i);
      const double dj = static_cast<double>(v.j - u.j);
      const double dk = static_cast<double>(v.k - u.k);
      sum += std::exp(-(di * di + dj * dj + dk * dk) / two_sigma_sq);
    }
    out.values[n] = sum;
  }
  return out;
}

}  // namespace tubular
