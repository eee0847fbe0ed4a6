#include "tnoise/random_fields.hpp"

#include <random>

#include "tnoise/operators.hpp"

namespace tnoise {

SpectralField random_field(int dim, int components, int max_mode, std::uint64_t seed, double radius) {
  SpectralField x(dim, components, max_mode);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < x.size(); ++i) {
    bool keep = radius <= 0.0 || norm2(x.wave(i)) <= r2;
    for (int c = 0; c < components; ++c) {
      double re = g(rng), im = g(rng);
      if (keep) x.at(i, c) = cplx(re, im);
    }
  }
  return x;
}

SpectralField random_solenoidal(int dim, int max_mode, std::uint64_t seed, double radius, double l2) {
  SpectralField x = helmholtz_project(random_field(dim, dim, max_mode, seed, radius));
  double n = l2_norm(x);
  if (n > 0.0) x *= l2 / n;
  return x;
}

}  // namespace tnoise
