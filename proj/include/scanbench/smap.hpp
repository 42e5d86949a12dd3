#ifndef SCANBENCH_SMAP_HPP
#define SCANBENCH_SMAP_HPP

// SMAP binary priority-map files:
//   "SMAP" | version 0x01 | kind (0x00 priority, 0x01 probability)
//   | u32 LE width | u32 LE height | width*height f32 LE, row-major, row 0 = top

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "types.hpp"

namespace scanbench {

namespace detail {

inline void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_smap(const PriorityMap& map) {
  std::vector<std::uint8_t> out{'S', 'M', 'A', 'P', 0x01, static_cast<std::uint8_t>(map.kind())};
  out.reserve(14 + 4 * map.size());
  detail::put_u32le(out, static_cast<std::uint32_t>(map.width()));
  detail::put_u32le(out, static_cast<std::uint32_t>(map.height()));
  for (double v : map.values()) detail::put_u32le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

/// Decodes an SMAP buffer. Probability maps are renormalized in double
/// precision after the float round trip; their stored sum must be within 1e-4 of 1.
inline PriorityMap decode_smap(const std::vector<std::uint8_t>& buf, int downsample = 1) {
  if (buf.size() < 14 || std::memcmp(buf.data(), "SMAP", 4) != 0) throw ValidationError("not an SMAP file");
  if (buf[4] != 0x01) throw ValidationError("unsupported SMAP version " + std::to_string(buf[4]));
  if (buf[5] > 0x01) throw ValidationError("unknown SMAP map kind " + std::to_string(buf[5]));
  const auto kind = static_cast<MapKind>(buf[5]);
  const std::uint32_t width = detail::get_u32le(buf.data() + 6);
  const std::uint32_t height = detail::get_u32le(buf.data() + 10);
  if (width == 0 || height == 0) throw ValidationError("SMAP dimensions must be positive");
  const std::uint64_t count = static_cast<std::uint64_t>(width) * height;
  if (buf.size() != 14 + 4 * count) throw ValidationError("SMAP payload size does not match its header");
  std::vector<double> values(count);
  double total = 0.0;
  for (std::uint64_t i = 0; i < count; ++i) {
    values[i] = std::bit_cast<float>(detail::get_u32le(buf.data() + 14 + 4 * i));
    if (!std::isfinite(values[i])) throw ValidationError("SMAP contains non-finite values");
    total += values[i];
  }
  if (kind == MapKind::probability) {
    if (std::abs(total - 1.0) > 1e-4) throw ValidationError("SMAP probability map does not sum to 1");
    for (double& v : values) {
      if (v < 0.0) throw ValidationError("SMAP probability map contains negative values");
      v /= total;
    }
  }
  return PriorityMap(static_cast<int>(width), static_cast<int>(height), std::move(values), kind, downsample);
}

inline void write_smap(const PriorityMap& map, const std::string& path) {
  const auto bytes = encode_smap(map);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open '" + path + "' for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

inline PriorityMap read_smap(const std::string& path, int downsample = 1) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open SMAP file '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_smap(bytes, downsample);
}

/// Brings a saliency map to the grid of `geometry`: maps already on the grid
/// pass through, maps at full stimulus resolution are block-averaged.
inline PriorityMap fit_to_grid(const PriorityMap& map, const GridGeometry& geometry) {
  if (map.width() == geometry.cols() && map.height() == geometry.rows()) {
    return PriorityMap(geometry, map.values(), map.kind());
  }
  if (map.width() != geometry.width_px || map.height() != geometry.height_px) {
    throw ValidationError("saliency map size " + std::to_string(map.width()) + "x" + std::to_string(map.height()) +
                          " matches neither the stimulus nor its grid");
  }
  const int ds = geometry.downsample;
  std::vector<double> sums(geometry.cells(), 0.0);
  std::vector<int> counts(geometry.cells(), 0);
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      const std::size_t cell = static_cast<std::size_t>(y / ds) * geometry.cols() + x / ds;
      sums[cell] += map.at(x, y);
      ++counts[cell];
    }
  }
  if (map.is_probability()) return PriorityMap::from_weights(geometry, std::move(sums));
  for (std::size_t i = 0; i < sums.size(); ++i) sums[i] /= counts[i];
  return PriorityMap(geometry, std::move(sums), MapKind::priority);
}

}  // namespace scanbench

#endif  // SCANBENCH_SMAP_HPP
