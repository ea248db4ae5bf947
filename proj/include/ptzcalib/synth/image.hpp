#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ptzcalib/core/field_model.hpp"
#include "ptzcalib/core/types.hpp"
#include "ptzcalib/forest/pan_tilt_forest.hpp"

namespace ptzcalib {

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0) : width(w), height(h), pixels(std::size_t(w) * h, fill) {}

  std::uint8_t at(int x, int y) const { return pixels[std::size_t(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return pixels[std::size_t(y) * width + x]; }
  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Binary PGM (P5) with maxval <= 255. Comments are allowed in the header.
/// Throws ParseError on anything else.
GrayImage parse_pgm(std::string_view bytes);
std::string encode_pgm(const GrayImage& image);
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

struct PatchDescriptor {
  Descriptor values;
  /// No gradient anywhere in the patch; values are all zero.
  bool flat = false;
};

inline constexpr int kPatchCells = 4;
inline constexpr int kOrientationBins = 8;

/// 4 x 4 cells x 8 orientation bins of magnitude-weighted central-difference
/// gradients over pixels center + [-r, r-1] in both axes, L2-normalized.
/// Entry index is (cell_row * 4 + cell_col) * 8 + bin, bin 0 at angle 0 with
/// angles measured from +x toward +y (image down). Orientation votes are
/// split linearly between the two nearest bins. `patch_radius` must be a
/// positive even number; throws InvalidArgument when the patch (plus the
/// one-pixel gradient border) leaves the image.
PatchDescriptor patch_descriptor(const GrayImage& image, const Eigen::Vector2i& center, int patch_radius);

/// Descriptors for every keypoint pixel (rounded) that fits in the image.
std::vector<Keypoint> extract_keypoints(const GrayImage& image, const std::vector<Eigen::Vector2d>& pixels,
                                        int patch_radius);

/// Gray render of the field markings seen by a camera: dark background, one
/// pixel wide bright lines.
GrayImage render_markings(const PtzCamera& cam, const FieldModel& field);

}  // namespace ptzcalib
