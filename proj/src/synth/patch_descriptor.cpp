#include <cmath>
#include <numbers>

#include "ptzcalib/core/errors.hpp"
#include "ptzcalib/synth/image.hpp"

namespace ptzcalib {

PatchDescriptor patch_descriptor(const GrayImage& image, const Eigen::Vector2i& center, int patch_radius) {
  if (patch_radius <= 0 || patch_radius % 2 != 0) throw InvalidArgument("patch_radius must be a positive even number");
  const int r = patch_radius;
  const int cx = center.x();
  const int cy = center.y();
  if (cx - r - 1 < 0 || cy - r - 1 < 0 || cx + r > image.width - 1 || cy + r > image.height - 1) {
    throw InvalidArgument("patch leaves the image");
  }
  const int cell = 2 * r / kPatchCells;
  const double bin_width = 2.0 * std::numbers::pi / kOrientationBins;

  PatchDescriptor out;
  out.values = Descriptor::Zero(kPatchCells * kPatchCells * kOrientationBins);
  for (int dy = -r; dy < r; ++dy) {
    for (int dx = -r; dx < r; ++dx) {
      const int x = cx + dx;
      const int y = cy + dy;
      const double gx = double(image.at(x + 1, y)) - double(image.at(x - 1, y));
      const double gy = double(image.at(x, y + 1)) - double(image.at(x, y - 1));
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      double angle = std::atan2(gy, gx);
      if (angle < 0.0) angle += 2.0 * std::numbers::pi;
      const double pos = angle / bin_width;
      const double lower = std::floor(pos);
      const double frac = pos - lower;
      const int b0 = static_cast<int>(lower) % kOrientationBins;
      const int b1 = (b0 + 1) % kOrientationBins;
      const int base = (((dy + r) / cell) * kPatchCells + (dx + r) / cell) * kOrientationBins;
      out.values[base + b0] += (1.0 - frac) * mag;
      out.values[base + b1] += frac * mag;
    }
  }
  const double norm = out.values.norm();
  if (norm == 0.0) {
    out.flat = true;
  } else {
    out.values /= norm;
  }
  return out;
}

std::vector<Keypoint> extract_keypoints(const GrayImage& image, const std::vector<Eigen::Vector2d>& pixels,
                                        int patch_radius) {
  std::vector<Keypoint> out;
  for (const auto& p : pixels) {
    const Eigen::Vector2i c(static_cast<int>(std::lround(p.x())), static_cast<int>(std::lround(p.y())));
    const int r = patch_radius;
    if (c.x() - r - 1 < 0 || c.y() - r - 1 < 0 || c.x() + r > image.width - 1 || c.y() + r > image.height - 1) {
      continue;
    }
    out.push_back({p, patch_descriptor(image, c, patch_radius).values});
  }
  return out;
}

}  // namespace ptzcalib
