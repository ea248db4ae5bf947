#include <cctype>
#include <fstream>
#include <iterator>

#include "ptzcalib/core/errors.hpp"
#include "ptzcalib/core/overlay.hpp"
#include "ptzcalib/synth/image.hpp"

namespace ptzcalib {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view in) : in_(in) {}

  void skip_space_and_comments() {
    while (pos_ < in_.size()) {
      const char c = in_[pos_];
      if (c == '#') {
        while (pos_ < in_.size() && in_[pos_] != '\n' && in_[pos_] != '\r') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long number(const char* what) {
    skip_space_and_comments();
    long value = 0;
    std::size_t digits = 0;
    while (pos_ < in_.size() && std::isdigit(static_cast<unsigned char>(in_[pos_]))) {
      value = value * 10 + (in_[pos_] - '0');
      if (value > 1L << 30) throw ParseError(std::string("PGM ") + what + " too large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) throw ParseError(std::string("PGM header: expected ") + what);
    return value;
  }

  std::size_t pos() const { return pos_; }
  void advance() { ++pos_; }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayImage parse_pgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw ParseError("not a binary PGM (P5) stream");
  HeaderReader r(bytes.substr(2));
  if (bytes.size() < 3 || !std::isspace(static_cast<unsigned char>(bytes[2]))) {
    throw ParseError("PGM header: missing whitespace after magic");
  }
  const long width = r.number("width");
  const long height = r.number("height");
  const long maxval = r.number("maxval");
  if (width <= 0 || height <= 0) throw ParseError("PGM dimensions must be positive");
  if (maxval <= 0 || maxval > 255) throw ParseError("PGM maxval must be in [1, 255]");
  const std::size_t header_end = 2 + r.pos();
  if (header_end >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[header_end]))) {
    throw ParseError("PGM header: missing whitespace after maxval");
  }
  const std::size_t data_start = header_end + 1;
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - data_start < count) throw ParseError("PGM pixel data truncated");
  if (bytes.size() - data_start > count) throw ParseError("PGM has trailing bytes after the pixel data");
  GrayImage img(static_cast<int>(width), static_cast<int>(height));
  for (std::size_t i = 0; i < count; ++i) {
    const auto v = static_cast<std::uint8_t>(bytes[data_start + i]);
    if (v > maxval) throw ParseError("PGM pixel exceeds maxval");
    img.pixels[i] = v;
  }
  return img;
}

std::string encode_pgm(const GrayImage& image) {
  if (image.width <= 0 || image.height <= 0 ||
      image.pixels.size() != static_cast<std::size_t>(image.width) * image.height) {
    throw InvalidArgument("image buffer does not match its dimensions");
  }
  std::string out = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
  return out;
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_pgm(bytes);
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  const std::string bytes = encode_pgm(image);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

GrayImage render_markings(const PtzCamera& cam, const FieldModel& field) {
  GrayImage img(cam.base.image_size.width, cam.base.image_size.height, 30);
  for (const auto& line : render_field_overlay(cam, field)) {
    for (std::size_t k = 1; k < line.points.size(); ++k) {
      const Eigen::Vector2d a = line.points[k - 1];
      const Eigen::Vector2d b = line.points[k];
      const int steps = static_cast<int>(std::ceil((b - a).norm())) + 1;
      for (int s = 0; s <= steps; ++s) {
        const Eigen::Vector2d p = a + (b - a) * (static_cast<double>(s) / steps);
        const int x = static_cast<int>(std::floor(p.x()));
        const int y = static_cast<int>(std::floor(p.y()));
        if (x >= 0 && y >= 0 && x < img.width && y < img.height) img.at(x, y) = 230;
      }
    }
  }
  return img;
}

}  // namespace ptzcalib
