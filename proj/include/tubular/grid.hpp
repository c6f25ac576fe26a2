#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tubular/error.hpp"

namespace tubular {

/// Integer voxel coordinate (i, j, k) along axes (x, y, z).
struct Index3 {
  std::int64_t i = 0;
  std::int64_t j = 0;
  std::int64_t k = 0;

  friend bool operator==(const Index3&, const Index3&) = default;
};

/// Grid extent (L, W, H). Each component is strictly positive.
struct Dims {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t z = 0;

  std::int64_t operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  std::size_t voxel_count() const { return static_cast<std::size_t>(x * y * z); }

  friend bool operator==(const Dims&, const Dims&) = default;
};

/// Millimetres per voxel along each axis. Strictly positive.
struct Spacing {
  double x = 1.0;
  double y = 1.0;
  double z = 1.0;

  double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }

  friend bool operator==(const Spacing&, const Spacing&) = default;
};

/// Dimensions and spacing of a voxel grid.
///
/// Storage order is x-fastest: linear index = i + L * (j + W * k).
class Geometry {
 public:
  Geometry() = default;
  Geometry(Dims dims, Spacing spacing = {});

  const Dims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  std::size_t voxel_count() const { return dims_.voxel_count(); }

  std::size_t linear(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return static_cast<std::size_t>(i + dims_.x * (j + dims_.y * k));
  }
  std::size_t linear(const Index3& v) const { return linear(v.i, v.j, v.k); }

  Index3 coord(std::size_t n) const {
    const auto idx = static_cast<std::int64_t>(n);
    return {idx % dims_.x, (idx / dims_.x) % dims_.y, idx / (dims_.x * dims_.y)};
  }

  bool contains(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims_.x && j < dims_.y && k < dims_.z;
  }
  bool contains(const Index3& v) const { return contains(v.i, v.j, v.k); }

  /// Stride in linear index when stepping one voxel along `axis`.
  std::size_t stride(int axis) const;

  friend bool operator==(const Geometry&, const Geometry&) = default;

 private:
  Dims dims_{};
  Spacing spacing_{};
};

/// Throws ValidationError naming `what` if the two geometries differ in dims.
void require_same_dims(const Geometry& a, const Geometry& b, const std::string& what);

/// Dense scalar field on a Geometry.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  explicit Grid(Geometry geometry, T fill = T{})
      : geometry_(geometry), data_(geometry.voxel_count(), fill) {}
  Grid(Geometry geometry, std::vector<T> data) : geometry_(geometry), data_(std::move(data)) {
    if (data_.size() != geometry_.voxel_count()) {
      throw ValidationError("grid data length " + std::to_string(data_.size()) +
                            " does not match dims (" + std::to_string(geometry_.voxel_count()) +
                            " voxels)");
    }
  }

  const Geometry& geometry() const { return geometry_; }
  const Dims& dims() const { return geometry_.dims(); }
  const Spacing& spacing() const { return geometry_.spacing(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator[](std::size_t n) { return data_[n]; }
  const T& operator[](std::size_t n) const { return data_[n]; }
  T& at(std::int64_t i, std::int64_t j, std::int64_t k) { return data_[geometry_.linear(i, j, k)]; }
  const T& at(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return data_[geometry_.linear(i, j, k)];
  }
  T& at(const Index3& v) { return data_[geometry_.linear(v)]; }
  const T& at(const Index3& v) const { return data_[geometry_.linear(v)]; }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  const std::vector<T>& data() const { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  Geometry geometry_{};
  std::vector<T> data_{};
};

/// Binary mask with values in {0, 1}.
using LabelMap = Grid<std::uint8_t>;

/// Per-voxel probability in [0, 1]. Double precision so that loss
/// evaluation and finite-difference checks are not limited by storage.
using ProbabilityField = Grid<double>;

/// Throws ValidationError if any value is not 0 or 1.
void require_binary(const LabelMap& label, const std::string& what);

std::size_t count_foreground(const LabelMap& label);

}  // namespace tubular
