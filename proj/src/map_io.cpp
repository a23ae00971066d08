#include "borderforge/map_io.hpp"

#include <yaml-cpp/yaml.h>

#include <array>
#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>

namespace borderforge {

namespace {

std::string shortest(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), res.ptr};
}

class HeaderReader {
 public:
  HeaderReader(std::string_view bytes, std::size_t pos) : bytes_(bytes), pos_(pos) {}

  std::size_t pos() const { return pos_; }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++pos_;
      } else {
        break;
      }
    }
  }

  int read_int(const char* field) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    int value = 0;
    const auto res = std::from_chars(bytes_.data() + pos_, bytes_.data() + bytes_.size(), value);
    if (res.ec != std::errc() || res.ptr == bytes_.data() + pos_)
      throw MapFormatError(std::string("expected integer ") + field, start);
    pos_ = static_cast<std::size_t>(res.ptr - bytes_.data());
    return value;
  }

  void expect_single_whitespace() {
    if (pos_ >= bytes_.size())
      throw MapFormatError("truncated header", pos_);
    const char c = bytes_[pos_];
    if (c != ' ' && c != '\t' && c != '\n' && c != '\r')
      throw MapFormatError("expected whitespace after maxval", pos_);
    ++pos_;
  }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MapError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw MapError("cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw MapError("write failed for " + path.string());
}

std::filesystem::path stem_of(const std::filesystem::path& path) {
  std::filesystem::path stem = path;
  const auto ext = path.extension();
  if (ext == ".yaml" || ext == ".yml" || ext == ".pgm") stem.replace_extension();
  return stem;
}

}  // namespace

MapFormatError::MapFormatError(const std::string& what, std::size_t offset)
    : MapError(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}

Occupancy occupancy_from_pixel(unsigned char v) {
  if (v <= 49) return Occupancy::Occupied;
  if (v <= 205) return Occupancy::Unknown;
  return Occupancy::Free;
}

unsigned char pixel_from_occupancy(Occupancy o) {
  switch (o) {
    case Occupancy::Occupied: return kPixelOccupied;
    case Occupancy::Unknown: return kPixelUnknown;
    case Occupancy::Free: return kPixelFree;
  }
  return kPixelUnknown;
}

std::string encode_pgm(const OccupancyGrid& grid) {
  std::string out = "P5\n" + std::to_string(grid.width()) + " " +
                    std::to_string(grid.height()) + "\n255\n";
  out.reserve(out.size() + grid.cells().size());
  for (int row = grid.height() - 1; row >= 0; --row)
    for (int col = 0; col < grid.width(); ++col)
      out.push_back(static_cast<char>(pixel_from_occupancy(grid.at({col, row}))));
  return out;
}

OccupancyGrid decode_pgm(std::string_view bytes, double resolution, Pose2 origin) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
    throw MapFormatError("missing P5 magic", 0);
  HeaderReader header(bytes, 2);
  const std::size_t width_at = header.pos();
  const int width = header.read_int("width");
  const int height = header.read_int("height");
  if (width <= 0 || height <= 0) throw MapFormatError("non-positive image size", width_at);
  const std::size_t maxval_at = header.pos();
  const int maxval = header.read_int("maxval");
  if (maxval != 255) throw MapFormatError("maxval must be 255", maxval_at);
  header.expect_single_whitespace();

  const std::size_t data_at = header.pos();
  const std::size_t expected = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  const std::size_t available = bytes.size() - data_at;
  if (available < expected)
    throw MapFormatError("truncated pixel data (" + std::to_string(available) + " of " +
                             std::to_string(expected) + " bytes)",
                         bytes.size());
  if (available > expected)
    throw MapFormatError("trailing bytes after pixel data", data_at + expected);

  std::vector<Occupancy> cells(expected);
  std::size_t offset = data_at;
  for (int row = height - 1; row >= 0; --row)
    for (int col = 0; col < width; ++col, ++offset)
      cells[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
            static_cast<std::size_t>(col)] =
          occupancy_from_pixel(static_cast<unsigned char>(bytes[offset]));
  return OccupancyGrid(width, height, resolution, origin, std::move(cells));
}

std::string encode_map_yaml(const OccupancyGrid& grid, const std::string& image) {
  std::ostringstream os;
  os << "image: " << image << "\n"
     << "resolution: " << shortest(grid.resolution()) << "\n"
     << "origin: [" << shortest(grid.origin().position.x) << ", "
     << shortest(grid.origin().position.y) << ", " << shortest(grid.origin().theta) << "]\n";
  return os.str();
}

std::filesystem::path save_map(const OccupancyGrid& grid, const std::filesystem::path& path) {
  const std::filesystem::path stem = stem_of(path);
  std::filesystem::path pgm = stem;
  pgm += ".pgm";
  std::filesystem::path yaml = stem;
  yaml += ".yaml";
  write_file(pgm, encode_pgm(grid));
  write_file(yaml, encode_map_yaml(grid, pgm.filename().string()));
  return yaml;
}

OccupancyGrid load_map(const std::filesystem::path& path) {
  std::filesystem::path yaml_path = path;
  if (path.extension() == ".pgm") {
    yaml_path = stem_of(path);
    yaml_path += ".yaml";
  }
  YAML::Node node;
  try {
    node = YAML::Load(read_file(yaml_path));
  } catch (const YAML::Exception& e) {
    throw MapError("malformed map metadata " + yaml_path.string() + ": " + e.what());
  }
  double resolution = 0.0;
  Pose2 origin;
  std::string image;
  try {
    if (!node["image"] || !node["resolution"] || !node["origin"])
      throw MapError("map metadata " + yaml_path.string() +
                     " needs image, resolution and origin");
    image = node["image"].as<std::string>();
    resolution = node["resolution"].as<double>();
    const YAML::Node o = node["origin"];
    if (!o.IsSequence() || o.size() != 3)
      throw MapError("map origin must be [x, y, theta]");
    origin = Pose2({o[0].as<double>(), o[1].as<double>()}, o[2].as<double>());
  } catch (const YAML::Exception& e) {
    throw MapError("malformed map metadata " + yaml_path.string() + ": " + e.what());
  }
  std::filesystem::path image_path = image;
  if (image_path.is_relative()) image_path = yaml_path.parent_path() / image_path;
  return decode_pgm(read_file(image_path), resolution, origin);
}

}  // namespace borderforge
