#include "tubular/volume_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include "json.hpp"
#include <sstream>

namespace tubular {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
constexpr ScalarKind kind_of() {
  if constexpr (std::is_same_v<T, float>) {
    return ScalarKind::f32;
  } else if constexpr (std::is_same_v<T, std::int16_t>) {
    return ScalarKind::i16;
  } else {
    return ScalarKind::u8;
  }
}

template <typename T>
void to_little_endian_bytes(std::span<const T> values, std::vector<char>& out) {
  const std::size_t offset = out.size();
  out.resize(offset + values.size_bytes());
  std::memcpy(out.data() + offset, values.data(), values.size_bytes());
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    for (std::size_t n = offset; n < out.size(); n += sizeof(T)) {
      std::reverse(out.begin() + static_cast<std::ptrdiff_t>(n),
                   out.begin() + static_cast<std::ptrdiff_t>(n + sizeof(T)));
    }
  }
}

template <typename T>
std::vector<T> from_little_endian_bytes(const char* bytes, std::size_t count) {
  std::vector<T> values(count);
  std::memcpy(values.data(), bytes, count * sizeof(T));
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    auto* raw = reinterpret_cast<char*>(values.data());
    for (std::size_t n = 0; n < count; ++n) {
      std::reverse(raw + n * sizeof(T), raw + (n + 1) * sizeof(T));
    }
  }
  return values;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_bytes(const fs::path& path, const char* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  out.write(data, static_cast<std::streamsize>(size));
  if (!out) {
    throw IoError("write failed: " + path.string());
  }
}

std::vector<char> read_payload(const fs::path& sidecar, const VolumeHeader& header) {
  const fs::path payload = sidecar.parent_path() / header.data_file;
  std::ifstream in(payload, std::ios::binary);
  if (!in) {
    throw IoError("cannot open payload " + payload.string());
  }
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() != header.payload_bytes()) {
    throw IoError("payload size mismatch for " + payload.string() + ": expected " +
                  std::to_string(header.payload_bytes()) + " bytes, found " +
                  std::to_string(bytes.size()));
  }
  return bytes;
}

void write_volume_files(const fs::path& sidecar, VolumeHeader header,
                        const std::vector<char>& payload) {
  header.data_file = payload_path_for(sidecar).filename().string();
  write_bytes(payload_path_for(sidecar), payload.data(), payload.size());
  const std::string text = header.to_json();
  write_bytes(sidecar, text.data(), text.size());
}

}  // namespace

std::string to_string(ScalarKind kind) {
  switch (kind) {
    case ScalarKind::f32:
      return "f32";
    case ScalarKind::i16:
      return "i16";
    case ScalarKind::u8:
      return "u8";
  }
  return "?";
}

ScalarKind parse_scalar_kind(const std::string& tag) {
  if (tag == "f32") return ScalarKind::f32;
  if (tag == "i16") return ScalarKind::i16;
  if (tag == "u8") return ScalarKind::u8;
  throw ValidationError("unknown scalar kind '" + tag + "'");
}

std::size_t scalar_size(ScalarKind kind) {
  switch (kind) {
    case ScalarKind::f32:
      return 4;
    case ScalarKind::i16:
      return 2;
    case ScalarKind::u8:
      return 1;
  }
  return 0;
}

std::size_t VolumeHeader::payload_bytes() const {
  return dims.voxel_count() * scalar_size(kind) * static_cast<std::size_t>(channels);
}

std::string VolumeHeader::to_json() const {
  json j;
  j["dims"] = {dims.x, dims.y, dims.z};
  j["spacing_mm"] = {spacing.x, spacing.y, spacing.z};
  j["dtype"] = to_string(kind);
  j["order"] = order;
  j["endian"] = endian;
  j["data"] = data_file;
  if (channels != 1) {
    j["channels"] = channels;
  }
  return j.dump(2) + "\n";
}

VolumeHeader VolumeHeader::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed volume sidecar: ") + e.what());
  }
  try {
    VolumeHeader h;
    const auto d = j.at("dims");
    const auto s = j.at("spacing_mm");
    if (d.size() != 3 || s.size() != 3) {
      throw ValidationError("sidecar dims and spacing_mm must have three entries");
    }
    h.dims = {d[0].get<std::int64_t>(), d[1].get<std::int64_t>(), d[2].get<std::int64_t>()};
    h.spacing = {s[0].get<double>(), s[1].get<double>(), s[2].get<double>()};
    h.kind = parse_scalar_kind(j.at("dtype").get<std::string>());
    h.order = j.value("order", std::string("x-fastest"));
    h.endian = j.value("endian", std::string("little"));
    h.data_file = j.at("data").get<std::string>();
    h.channels = j.value("channels", std::int64_t{1});
    if (h.order != "x-fastest") {
      throw ValidationError("unsupported axis order '" + h.order + "'");
    }
    if (h.endian != "little") {
      throw ValidationError("unsupported endianness '" + h.endian + "'");
    }
    if (h.channels < 1) {
      throw ValidationError("sidecar channels must be >= 1");
    }
    Geometry check(h.dims, h.spacing);  // validates positivity
    (void)check;
    return h;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid volume sidecar: ") + e.what());
  }
}

ScalarKind Volume::kind() const {
  return std::visit([](const auto& g) { return kind_of<typename std::decay_t<decltype(g)>::value_type>(); },
                    storage_);
}

const Geometry& Volume::geometry() const {
  return std::visit([](const auto& g) -> const Geometry& { return g.geometry(); }, storage_);
}

Grid<double> Volume::to_double() const {
  return std::visit(
      [](const auto& g) {
        Grid<double> out(g.geometry());
        for (std::size_t n = 0; n < g.size(); ++n) {
          out[n] = static_cast<double>(g[n]);
        }
        return out;
      },
      storage_);
}

fs::path payload_path_for(const fs::path& sidecar) {
  fs::path raw = sidecar;
  raw.replace_extension(".raw");
  return raw;
}

void save_volume(const Volume& volume, const fs::path& sidecar) {
  VolumeHeader header;
  header.dims = volume.geometry().dims();
  header.spacing = volume.geometry().spacing();
  header.kind = volume.kind();
  std::vector<char> payload;
  std::visit([&](const auto& g) { to_little_endian_bytes(g.values(), payload); }, volume.storage());
  write_volume_files(sidecar, header, payload);
}

Volume load_volume(const fs::path& sidecar) {
  if (!fs::exists(sidecar)) {
    throw IoError("no such file: " + sidecar.string());
  }
  const VolumeHeader header = VolumeHeader::from_json(read_text(sidecar));
  if (header.channels != 1) {
    throw ValidationError(sidecar.string() + " holds " + std::to_string(header.channels) +
                          " channels; expected a single volume");
  }
  const std::vector<char> bytes = read_payload(sidecar, header);
  const Geometry geometry(header.dims, header.spacing);
  const std::size_t n = geometry.voxel_count();
  switch (header.kind) {
    case ScalarKind::f32:
      return Volume(Grid<float>(geometry, from_little_endian_bytes<float>(bytes.data(), n)));
    case ScalarKind::i16:
      return Volume(
          Grid<std::int16_t>(geometry, from_little_endian_bytes<std::int16_t>(bytes.data(), n)));
    case ScalarKind::u8:
      return Volume(
          Grid<std::uint8_t>(geometry, from_little_endian_bytes<std::uint8_t>(bytes.data(), n)));
  }
  throw ValidationError("unknown scalar kind");
}

void save_channels(const std::vector<Grid<float>>& channels, const fs::path& sidecar) {
  if (channels.empty()) {
    throw ValidationError("save_channels: no channels");
  }
  VolumeHeader header;
  header.dims = channels.front().dims();
  header.spacing = channels.front().spacing();
  header.kind = ScalarKind::f32;
  header.channels = static_cast<std::int64_t>(channels.size());
  std::vector<char> payload;
  for (const auto& c : channels) {
    require_same_dims(channels.front().geometry(), c.geometry(), "save_channels");
    to_little_endian_bytes(c.values(), payload);
  }
  write_volume_files(sidecar, header, payload);
}

std::vector<Grid<float>> load_channels(const fs::path& sidecar) {
  if (!fs::exists(sidecar)) {
    throw IoError("no such file: " + sidecar.string());
  }
  const VolumeHeader header = VolumeHeader::from_json(read_text(sidecar));
  if (header.kind != ScalarKind::f32) {
    throw ValidationError(sidecar.string() + ": channel volumes must be f32");
  }
  const std::vector<char> bytes = read_payload(sidecar, header);
  const Geometry geometry(header.dims, header.spacing);
  const std::size_t n = geometry.voxel_count();
  std::vector<Grid<float>> out;
  out.reserve(static_cast<std::size_t>(header.channels));
  for (std::int64_t c = 0; c < header.channels; ++c) {
    out.emplace_back(geometry, from_little_endian_bytes<float>(
                                   bytes.data() + static_cast<std::size_t>(c) * n * 4, n));
  }
  return out;
}

LabelMap load_label_map(const fs::path& sidecar) {
  const Volume volume = load_volume(sidecar);
  if (volume.kind() == ScalarKind::u8) {
    LabelMap label = volume.as<std::uint8_t>();
    require_binary(label, sidecar.string());
    return label;
  }
  const Grid<double> values = volume.to_double();
  LabelMap label(values.geometry());
  for (std::size_t n = 0; n < values.size(); ++n) {
    if (values[n] != 0.0 && values[n] != 1.0) {
      throw ValidationError(sidecar.string() + ": label map values must be 0 or 1");
    }
    label[n] = values[n] == 1.0 ? 1 : 0;
  }
  return label;
}

}  // namespace tubular
