#pragma once

#include <optional>
#include <vector>

#include "ptzcalib/core/field_model.hpp"
#include "ptzcalib/core/random.hpp"
#include "ptzcalib/core/types.hpp"
#include "ptzcalib/forest/pan_tilt_forest.hpp"
#include "ptzcalib/synth/config.hpp"

namespace ptzcalib {

/// A fixed world feature seen from the camera center. On-field rays carry
/// the field point they hit; off-field rays are directions at infinity.
struct BankRay {
  Ray ray;
  Descriptor descriptor;
  bool on_field = false;
  Eigen::Vector3d field_point = Eigen::Vector3d::Zero();
};

struct SyntheticScene {
  CameraBase base;
  FieldModel field;
  std::vector<BankRay> ray_bank;
  double fraction_off_field = 0.0;
};

/// Camera 14 m above the ground, 4 m behind the left goal line and 6 m
/// outside the near touch line. Zero pan looks along the touch line (+y of
/// the field), positive pan turns toward the far goal (+x).
CameraBase synthetic_base();

/// Field point hit by a ray of the base frame, nullopt when the ray points
/// upward or lands outside the field rectangle.
std::optional<Eigen::Vector3d> ray_field_hit(const CameraBase& base, const FieldModel& field, const Ray& ray);

/// Pan and tilt span of the ray bank: the configured ranges widened by the
/// half field of view at the smallest focal length.
Range bank_pan_range(const ExperimentConfig& config, const CameraBase& base);
Range bank_tilt_range(const ExperimentConfig& config, const CameraBase& base);

/// Ray bank of `bank_size` rays (config.bank_size when omitted), uniform over
/// the bank ranges with config.fraction_off_field of them off the field.
SyntheticScene generate_scene(const ExperimentConfig& config, std::optional<int> bank_size = std::nullopt);

PtzParams sample_camera(const ExperimentConfig& config, Rng& rng, std::optional<Range> focal_range = std::nullopt);

/// Bank indices whose ray-model pixel lies inside the image.
std::vector<int> visible_rays(const SyntheticScene& scene, const PtzParams& ptz);

/// `count` rays through uniformly drawn pixels of the view, of which about
/// fraction_off_field miss the field (as far as the view allows).
std::vector<Ray> sample_view_rays(const CameraBase& base, const FieldModel& field, const PtzParams& ptz, int count,
                                  double fraction_off_field, Rng& rng);

}  // namespace ptzcalib
