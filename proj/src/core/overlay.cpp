#include "ptzcalib/core/overlay.hpp"

#include <cmath>

#include "ptzcalib/core/angles.hpp"
#include "ptzcalib/core/camera.hpp"
#include "ptzcalib/core/errors.hpp"
#include "ptzcalib/core/polygon.hpp"

namespace ptzcalib {

namespace {

void emit_polylines(const PtzCamera& cam, int primitive, const std::vector<Eigen::Vector3d>& samples,
                    std::vector<OverlayPolyline>& out) {
  const double w = cam.base.image_size.width;
  const double h = cam.base.image_size.height;
  OverlayPolyline current{primitive, {}};
  auto flush = [&] {
    if (current.points.size() >= 2) out.push_back(current);
    current.points.clear();
  };

  std::optional<Eigen::Vector2d> prev;
  for (const auto& sample : samples) {
    auto cur = project_point(cam, sample);
    if (!cur) {
      flush();
      prev.reset();
      continue;
    }
    if (prev) {
      auto clipped = clip_segment(*prev, *cur, 0.0, 0.0, w, h);
      if (!clipped) {
        flush();
      } else {
        const bool continues = !current.points.empty() && current.points.back() == clipped->first;
        if (!continues) {
          flush();
          current.points.push_back(clipped->first);
        }
        current.points.push_back(clipped->second);
        if (clipped->second != *cur) flush();
      }
    }
    prev = cur;
  }
  flush();
}

}  // namespace

std::vector<OverlayPolyline> render_field_overlay(const PtzCamera& cam, const FieldModel& field,
                                                  double sample_step) {
  if (!(sample_step > 0.0)) throw InvalidArgument("sample_step must be positive");
  std::vector<OverlayPolyline> out;
  int primitive = 0;
  for (const auto& s : field.segments) {
    const double length = (s.to - s.from).norm();
    const int n = std::max(1, static_cast<int>(std::ceil(length / sample_step)));
    std::vector<Eigen::Vector3d> samples;
    samples.reserve(n + 1);
    for (int i = 0; i <= n; ++i) {
      const Eigen::Vector2d p = s.from + (s.to - s.from) * (double(i) / n);
      samples.emplace_back(p.x(), p.y(), 0.0);
    }
    emit_polylines(cam, primitive++, samples, out);
  }
  for (const auto& a : field.arcs) {
    const double sweep = deg2rad(a.end_deg - a.start_deg);
    const int n = std::max(2, static_cast<int>(std::ceil(a.radius * sweep / sample_step)));
    std::vector<Eigen::Vector3d> samples;
    samples.reserve(n + 1);
    for (int i = 0; i <= n; ++i) {
      const double t = deg2rad(a.start_deg) + sweep * (double(i) / n);
      samples.emplace_back(a.center.x() + a.radius * std::cos(t), a.center.y() + a.radius * std::sin(t), 0.0);
    }
    emit_polylines(cam, primitive++, samples, out);
  }
  return out;
}

}  // namespace ptzcalib
