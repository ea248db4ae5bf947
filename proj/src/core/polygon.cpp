#include "ptzcalib/core/polygon.hpp"

#include <algorithm>
#include <cmath>

namespace ptzcalib {

Polygon2d clip_polygon(const Polygon2d& subject, const Eigen::Vector3d& half_plane) {
  Polygon2d out;
  if (subject.empty()) return out;
  out.reserve(subject.size() + 1);
  auto side = [&half_plane](const Eigen::Vector2d& p) {
    return half_plane.x() * p.x() + half_plane.y() * p.y() + half_plane.z();
  };
  Eigen::Vector2d prev = subject.back();
  double prev_side = side(prev);
  for (const auto& cur : subject) {
    const double cur_side = side(cur);
    if (cur_side >= 0.0) {
      if (prev_side < 0.0) out.push_back(prev + (cur - prev) * (prev_side / (prev_side - cur_side)));
      out.push_back(cur);
    } else if (prev_side >= 0.0) {
      out.push_back(prev + (cur - prev) * (prev_side / (prev_side - cur_side)));
    }
    prev = cur;
    prev_side = cur_side;
  }
  return out;
}

Polygon2d clip_polygon(const Polygon2d& subject, const Polygon2d& convex_clip) {
  if (convex_clip.size() < 3) return {};
  double signed_area = 0.0;
  for (std::size_t i = 0; i < convex_clip.size(); ++i) {
    const auto& a = convex_clip[i];
    const auto& b = convex_clip[(i + 1) % convex_clip.size()];
    signed_area += a.x() * b.y() - b.x() * a.y();
  }
  const double orientation = signed_area >= 0.0 ? 1.0 : -1.0;
  Polygon2d result = subject;
  for (std::size_t i = 0; i < convex_clip.size() && !result.empty(); ++i) {
    const auto& a = convex_clip[i];
    const auto& b = convex_clip[(i + 1) % convex_clip.size()];
    // Interior is to the left of a->b for counter-clockwise clip polygons.
    const Eigen::Vector2d edge = b - a;
    Eigen::Vector3d hp(-edge.y(), edge.x(), edge.y() * a.x() - edge.x() * a.y());
    result = clip_polygon(result, Eigen::Vector3d(orientation * hp));
  }
  return result;
}

double polygon_area(const Polygon2d& polygon) {
  if (polygon.size() < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const auto& a = polygon[i];
    const auto& b = polygon[(i + 1) % polygon.size()];
    twice += a.x() * b.y() - b.x() * a.y();
  }
  return std::abs(twice) / 2.0;
}

Polygon2d axis_aligned_rectangle(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

std::optional<std::pair<Eigen::Vector2d, Eigen::Vector2d>> clip_segment(const Eigen::Vector2d& a,
                                                                        const Eigen::Vector2d& b, double x0,
                                                                        double y0, double x1, double y1) {
  const Eigen::Vector2d d = b - a;
  double t0 = 0.0;
  double t1 = 1.0;
  const double p[4] = {-d.x(), d.x(), -d.y(), d.y()};
  const double q[4] = {a.x() - x0, x1 - a.x(), a.y() - y0, y1 - a.y()};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return std::nullopt;
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0.0) {
      if (r > t1) return std::nullopt;
      if (r > t0) t0 = r;
    } else {
      if (r < t0) return std::nullopt;
      if (r < t1) t1 = r;
    }
  }
  Eigen::Vector2d s = a + t0 * d;
  Eigen::Vector2d e = a + t1 * d;
  // Pin clipped endpoints onto the rectangle against rounding.
  auto pin = [&](Eigen::Vector2d& v) {
    v.x() = std::clamp(v.x(), x0, x1);
    v.y() = std::clamp(v.y(), y0, y1);
  };
  pin(s);
  pin(e);
  return std::make_pair(s, e);
}

}  // namespace ptzcalib
