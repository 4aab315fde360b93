#pragma once

#include <filesystem>
#include <vector>

#include "tenf/mri.hpp"

// Synthetic dynamic phantom: additive soft-edged ellipses whose axes pulse
// sinusoidally over the frame index, a smooth polynomial phase map, Gaussian
// coil profiles around the field of view, and complex Gaussian measurement
// noise added to the fully sampled multi-coil k-space.

namespace tenf {

struct Ellipse {
  double cx = 0.0, cy = 0.0; // center, normalized [-1, 1] coordinates
  double ax = 0.5, ay = 0.5; // semi-axes, normalized
  double intensity = 1.0;    // additive contribution (may be negative)
  double motion_amp = 0.0;   // relative axis modulation over the cycle
  double motion_phase = 0.0; // radians
};

struct PhantomSpec {
  Index nx = 64, ny = 64, nt = 8, ns = 4;
  double noise_std = 0.01;
  uint64_t seed = 0;
  std::vector<Ellipse> ellipses; // empty -> default cardiac-like set
};

std::vector<Ellipse> default_ellipses();

struct PhantomData {
  ImageSeries truth;          // max magnitude normalized to 1
  CoilSensitivities sens;     // sum_c |s_c|^2 > 0 everywhere
  MultiCoilKSpace kspace_full; // fully sampled, noise added
};

PhantomData generate_phantom(const PhantomSpec &spec);

PhantomSpec parse_phantom_spec(const std::filesystem::path &path);

} // namespace tenf
