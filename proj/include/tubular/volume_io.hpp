#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "tubular/grid.hpp"

namespace tubular {

enum class ScalarKind { f32, i16, u8 };

std::string to_string(ScalarKind kind);
ScalarKind parse_scalar_kind(const std::string& tag);
std::size_t scalar_size(ScalarKind kind);

/// Contents of the JSON sidecar that describes a raw payload.
///
///   {"dims":[L,W,H], "spacing_mm":[sx,sy,sz], "dtype":"f32"|"i16"|"u8",
///    "order":"x-fastest", "endian":"little", "data":"<payload file>"}
///
/// Multi-channel payloads (per-class scale probabilities) add "channels":K
/// and store the channels one after another, each a full x-fastest volume.
struct VolumeHeader {
  Dims dims{};
  Spacing spacing{};
  ScalarKind kind = ScalarKind::f32;
  std::int64_t channels = 1;
  std::string endian = "little";
  std::string order = "x-fastest";
  std::string data_file;

  std::size_t payload_bytes() const;

  std::string to_json() const;
  static VolumeHeader from_json(const std::string& text);

  friend bool operator==(const VolumeHeader&, const VolumeHeader&) = default;
};

/// A scalar volume of one of the supported storage kinds.
class Volume {
 public:
  using Storage = std::variant<Grid<float>, Grid<std::int16_t>, Grid<std::uint8_t>>;

  Volume(Grid<float> grid) : storage_(std::move(grid)) {}
  Volume(Grid<std::int16_t> grid) : storage_(std::move(grid)) {}
  Volume(Grid<std::uint8_t> grid) : storage_(std::move(grid)) {}

  ScalarKind kind() const;
  const Geometry& geometry() const;
  const Storage& storage() const { return storage_; }

  template <typename T>
  const Grid<T>& as() const {
    return std::get<Grid<T>>(storage_);
  }

  /// Element-wise widening copy.
  Grid<double> to_double() const;

  friend bool operator==(const Volume&, const Volume&) = default;

 private:
  Storage storage_;
};

/// Raw payload path used for a given sidecar path: same stem, ".raw".
std::filesystem::path payload_path_for(const std::filesystem::path& sidecar);

/// Writes `<path>` (JSON sidecar) and its raw little-endian payload.
/// Existing files are truncated.
void save_volume(const Volume& volume, const std::filesystem::path& sidecar);
Volume load_volume(const std::filesystem::path& sidecar);

/// Multi-channel float32 variant used for ScaleProbabilityField storage.
void save_channels(const std::vector<Grid<float>>& channels, const std::filesystem::path& sidecar);
std::vector<Grid<float>> load_channels(const std::filesystem::path& sidecar);

/// Loads a volume and checks that every value is 0 or 1.
LabelMap load_label_map(const std::filesystem::path& sidecar);

}  // namespace tubular
