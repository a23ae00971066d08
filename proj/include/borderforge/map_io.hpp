#pragma once

#include "borderforge/gridmap.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

namespace borderforge {

/// Malformed map file; `offset()` is the byte position where decoding failed.
class MapFormatError : public MapError {
 public:
  MapFormatError(const std::string& what, std::size_t offset);
  [[nodiscard]] std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Pixel values written by the encoder.
inline constexpr unsigned char kPixelOccupied = 0;
inline constexpr unsigned char kPixelUnknown = 205;
inline constexpr unsigned char kPixelFree = 254;

/// 0-49 occupied, 50-205 unknown, 206-255 free.
[[nodiscard]] Occupancy occupancy_from_pixel(unsigned char v);
[[nodiscard]] unsigned char pixel_from_occupancy(Occupancy o);

/// Binary P5 image, maxval 255, top image row = highest grid row.
[[nodiscard]] std::string encode_pgm(const OccupancyGrid& grid);
[[nodiscard]] OccupancyGrid decode_pgm(std::string_view bytes, double resolution, Pose2 origin);

/// Companion metadata text: image, resolution, origin [x, y, theta].
[[nodiscard]] std::string encode_map_yaml(const OccupancyGrid& grid, const std::string& image);

/// Writes `<stem>.pgm` and `<stem>.yaml`; `path` may carry either extension or none.
/// Returns the path of the YAML file.
std::filesystem::path save_map(const OccupancyGrid& grid, const std::filesystem::path& path);

/// Loads a map from its YAML file (or from `<stem>.yaml` when given the PGM).
[[nodiscard]] OccupancyGrid load_map(const std::filesystem::path& path);

}  // namespace borderforge
