#include "ptzcalib/synth/appearance.hpp"

#include <cmath>

#include "ptzcalib/core/random.hpp"

namespace ptzcalib {

namespace {

std::uint64_t cell_hash(const Ray& ray) {
  const auto ip = static_cast<std::int64_t>(std::floor(ray.pan / kAppearanceCellDeg));
  const auto it = static_cast<std::int64_t>(std::floor(ray.tilt / kAppearanceCellDeg));
  return mix_seed({static_cast<std::uint64_t>(ip), static_cast<std::uint64_t>(it)});
}

Descriptor gaussian_vector(Rng& rng, int dim) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Descriptor d(dim);
  for (int k = 0; k < dim; ++k) d[k] = n01(rng);
  return d;
}

}  // namespace

Descriptor canonical_appearance(const Ray& ray, int dim) {
  Rng rng(cell_hash(ray));
  return gaussian_vector(rng, dim);
}

Descriptor appearance_oracle(const Ray& ray, double noise_sigma, double outlier_prob, std::uint64_t seed, int dim) {
  Rng rng(mix_seed({seed, cell_hash(ray)}));
  if (outlier_prob > 0.0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng) < outlier_prob) {
    return gaussian_vector(rng, dim);
  }
  Descriptor d = canonical_appearance(ray, dim);
  if (noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (int k = 0; k < dim; ++k) d[k] += noise(rng);
  }
  return d;
}

}  // namespace ptzcalib
