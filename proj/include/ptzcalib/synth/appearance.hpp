#pragma once

#include <cstdint>

#include "ptzcalib/core/types.hpp"
#include "ptzcalib/forest/pan_tilt_forest.hpp"

namespace ptzcalib {

inline constexpr int kDefaultDescriptorDim = 128;
inline constexpr double kAppearanceCellDeg = 0.05;

/// Noise-free descriptor of the 0.05 degree cell containing the ray: N(0, 1)
/// entries from a generator seeded by a hash of the cell index.
Descriptor canonical_appearance(const Ray& ray, int dim = kDefaultDescriptorDim);

/// Canonical descriptor plus N(0, noise_sigma^2) per entry. With probability
/// outlier_prob the result is replaced by an unrelated N(0, 1) vector. The
/// noise stream depends on (seed, cell), so equal inputs give equal outputs.
Descriptor appearance_oracle(const Ray& ray, double noise_sigma, double outlier_prob, std::uint64_t seed,
                             int dim = kDefaultDescriptorDim);

}  // namespace ptzcalib
