#include "ptzcalib/synth/scene.hpp"

#include <cmath>

#include "ptzcalib/core/camera.hpp"
#include "ptzcalib/core/errors.hpp"
#include "ptzcalib/synth/appearance.hpp"

namespace ptzcalib {

namespace {

// Quota sampler: draws until both the off-field and on-field quotas are
// filled or the attempt budget runs out, then tops up with whatever comes.
template <typename Draw>
std::vector<std::pair<Ray, std::optional<Eigen::Vector3d>>> fill_quotas(int count, double fraction_off,
                                                                        Draw&& draw) {
  const int want_off = static_cast<int>(std::lround(fraction_off * count));
  const int want_on = count - want_off;
  int off = 0;
  int on = 0;
  std::vector<std::pair<Ray, std::optional<Eigen::Vector3d>>> out;
  const long budget = 200L * count;
  for (long attempt = 0; attempt < budget && (off < want_off || on < want_on); ++attempt) {
    auto sample = draw();
    const bool hit = sample.second.has_value();
    if (hit && on < want_on) {
      ++on;
      out.push_back(std::move(sample));
    } else if (!hit && off < want_off) {
      ++off;
      out.push_back(std::move(sample));
    }
  }
  while (static_cast<int>(out.size()) < count) out.push_back(draw());
  return out;
}

}  // namespace

CameraBase synthetic_base() {
  CameraBase base;
  base.center = Eigen::Vector3d(-4.0, -6.0, 14.0);
  base.base_rotation << 1, 0, 0,
                        0, 0, -1,
                        0, 1, 0;
  base.principal_point = Eigen::Vector2d(640.0, 360.0);
  base.image_size = {1280, 720};
  return base;
}

std::optional<Eigen::Vector3d> ray_field_hit(const CameraBase& base, const FieldModel& field, const Ray& ray) {
  const Eigen::Vector3d w = base.base_rotation.transpose() * ray_direction(ray);
  if (!(w.z() < 0.0)) return std::nullopt;
  const double t = -base.center.z() / w.z();
  if (!(t > 0.0)) return std::nullopt;
  Eigen::Vector3d p = base.center + t * w;
  p.z() = 0.0;
  if (!field.contains(p.head<2>())) return std::nullopt;
  return p;
}

Range bank_pan_range(const ExperimentConfig& config, const CameraBase& base) {
  const double half = rad2deg(std::atan(0.5 * base.image_size.width / config.focal_range.min));
  return {config.pan_range.min - half, config.pan_range.max + half};
}

Range bank_tilt_range(const ExperimentConfig& config, const CameraBase& base) {
  const double half = rad2deg(std::atan(0.5 * base.image_size.height / config.focal_range.min));
  return {std::max(config.tilt_range.min - half, -89.0), std::min(config.tilt_range.max + half, 89.0)};
}

SyntheticScene generate_scene(const ExperimentConfig& config, std::optional<int> bank_size) {
  config.validate();
  const int n = bank_size.value_or(config.bank_size);
  if (n < 1) throw InvalidArgument("bank_size must be >= 1");
  SyntheticScene scene;
  scene.base = synthetic_base();
  scene.field = standard_soccer_field();
  const Range pans = bank_pan_range(config, scene.base);
  const Range tilts = bank_tilt_range(config, scene.base);

  Rng rng(mix_seed({config.seed, 0x5ce9eULL}));
  std::uniform_real_distribution<double> pan(pans.min, pans.max);
  std::uniform_real_distribution<double> tilt(tilts.min, tilts.max);
  const auto drawn = fill_quotas(n, config.fraction_off_field, [&] {
    const double p = pan(rng);
    const Ray ray{p, tilt(rng)};
    return std::make_pair(ray, ray_field_hit(scene.base, scene.field, ray));
  });

  int off = 0;
  for (const auto& [ray, hit] : drawn) {
    BankRay b;
    b.ray = ray;
    b.descriptor = canonical_appearance(ray, config.descriptor_dim);
    b.on_field = hit.has_value();
    if (hit) b.field_point = *hit;
    off += b.on_field ? 0 : 1;
    scene.ray_bank.push_back(std::move(b));
  }
  scene.fraction_off_field = static_cast<double>(off) / n;
  return scene;
}

PtzParams sample_camera(const ExperimentConfig& config, Rng& rng, std::optional<Range> focal_range) {
  const Range f = focal_range.value_or(config.focal_range);
  const double pan = std::uniform_real_distribution<double>(config.pan_range.min, config.pan_range.max)(rng);
  const double tilt = std::uniform_real_distribution<double>(config.tilt_range.min, config.tilt_range.max)(rng);
  const double focal = std::uniform_real_distribution<double>(f.min, f.max)(rng);
  return {pan, tilt, focal};
}

std::vector<int> visible_rays(const SyntheticScene& scene, const PtzParams& ptz) {
  std::vector<int> out;
  for (std::size_t i = 0; i < scene.ray_bank.size(); ++i) {
    const auto pixel = try_project_ray(ptz, scene.base.principal_point, scene.ray_bank[i].ray);
    if (pixel && scene.base.image_size.contains(*pixel)) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<Ray> sample_view_rays(const CameraBase& base, const FieldModel& field, const PtzParams& ptz, int count,
                                  double fraction_off_field, Rng& rng) {
  std::uniform_real_distribution<double> x(0.0, base.image_size.width);
  std::uniform_real_distribution<double> y(0.0, base.image_size.height);
  const auto drawn = fill_quotas(count, fraction_off_field, [&] {
    const double px = x(rng);
    const Ray ray = pixel_to_ray(ptz, base.principal_point, {px, y(rng)});
    return std::make_pair(ray, ray_field_hit(base, field, ray));
  });
  std::vector<Ray> out;
  out.reserve(drawn.size());
  for (const auto& d : drawn) out.push_back(d.first);
  return out;
}

}  // namespace ptzcalib
