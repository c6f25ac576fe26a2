#include "tubular/grid.hpp"

#include <algorithm>
#include <sstream>

namespace tubular {

Geometry::Geometry(Dims dims, Spacing spacing) : dims_(dims), spacing_(spacing) {
  if (dims.x <= 0 || dims.y <= 0 || dims.z <= 0) {
    std::ostringstream msg;
    msg << "dims must be positive, got (" << dims.x << ", " << dims.y << ", " << dims.z << ")";
    throw ValidationError(msg.str());
  }
  if (!(spacing.x > 0.0) || !(spacing.y > 0.0) || !(spacing.z > 0.0)) {
    std::ostringstream msg;
    msg << "spacing must be positive, got (" << spacing.x << ", " << spacing.y << ", "
        << spacing.z << ")";
    throw ValidationError(msg.str());
  }
}

std::size_t Geometry::stride(int axis) const {
  switch (axis) {
    case 0:
      return 1;
    case 1:
      return static_cast<std::size_t>(dims_.x);
    default:
      return static_cast<std::size_t>(dims_.x * dims_.y);
  }
}

void require_same_dims(const Geometry& a, const Geometry& b, const std::string& what) {
  if (a.dims() != b.dims()) {
    std::ostringstream msg;
    msg << what << ": geometry mismatch (" << a.dims().x << "x" << a.dims().y << "x"
        << a.dims().z << " vs " << b.dims().x << "x" << b.dims().y << "x" << b.dims().z << ")";
    throw ValidationError(msg.str());
  }
}

void require_binary(const LabelMap& label, const std::string& what) {
  const auto values = label.values();
  if (std::any_of(values.begin(), values.end(), [](std::uint8_t v) { return v > 1; })) {
    throw ValidationError(what + ": label map values must be 0 or 1");
  }
}

std::size_t count_foreground(const LabelMap& label) {
  const auto values = label.values();
  return static_cast<std::size_t>(std::count(values.begin(), values.end(), std::uint8_t{1}));
}

}  // namespace tubular
