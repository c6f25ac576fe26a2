#include "tubular/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tubular {

Grid<float> preprocess_ct(const Volume& volume, HuWindow window) {
  if (!(window.lo < window.hi)) {
    throw ValidationError("preprocess_ct: HU window requires lo < hi");
  }
  Grid<double> values = volume.to_double();
  if (values.empty()) {
    throw ValidationError("preprocess_ct: empty volume");
  }
  double sum = 0.0;
  for (double& v : values.values()) {
    v = std::clamp(v, window.lo, window.hi);
    sum += v;
  }
  const double n = static_cast<double>(values.size());
  const double mean = sum / n;
  double squares = 0.0;
  for (double v : values.values()) {
    squares += (v - mean) * (v - mean);
  }
  const double variance = squares / n;
  if (!(variance > 0.0)) {
    throw DegenerateInputError("preprocess_ct: volume is constant after clamping");
  }
  const double inv_std = 1.0 / std::sqrt(variance);
  Grid<float> out(values.geometry());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = static_cast<float>((values[i] - mean) * inv_std);
  }
  return out;
}

Box centered_box(const Dims& dims, const Index3& center, std::int64_t edge) {
  if (edge < 1) {
    throw ValidationError("crop edge must be >= 1, got " + std::to_string(edge));
  }
  if (dims.x < edge || dims.y < edge || dims.z < edge) {
    throw ValidationError("crop edge " + std::to_string(edge) + " exceeds a volume dimension");
  }
  auto place = [edge](std::int64_t c, std::int64_t extent) {
    return std::clamp(c - edge / 2, std::int64_t{0}, extent - edge);
  };
  return {{place(center.i, dims.x), place(center.j, dims.y), place(center.k, dims.z)}, edge};
}

Volume crop_region(const Volume& volume, const Index3& center, std::int64_t edge) {
  const Box box = centered_box(volume.geometry().dims(), center, edge);
  return std::visit([&](const auto& g) { return Volume(crop(g, box)); }, volume.storage());
}

}  // namespace tubular
