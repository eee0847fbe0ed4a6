#pragma once

#include <cstdint>

#include "tnoise/spectral_field.hpp"

namespace tnoise {

// Gaussian coefficients on the modes of the cube with |k| <= radius (radius <= 0: whole cube).
SpectralField random_field(int dim, int components, int max_mode, std::uint64_t seed, double radius = 0.0);
// Projected random field rescaled to the requested L2 norm.
SpectralField random_solenoidal(int dim, int max_mode, std::uint64_t seed, double radius = 0.0,
                                double l2 = 1.0);

}  // namespace tnoise
