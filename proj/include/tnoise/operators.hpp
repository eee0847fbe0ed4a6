#pragma once

#include "tnoise/spectral_field.hpp"

namespace tnoise {

// Relative tolerance for the divergence-free check.
inline constexpr double kDivergenceTolerance = 1e-12;

// Per mode (I - k k^T / |k|^2) X_k; the result is flagged divergence-free.
SpectralField helmholtz_project(const SpectralField& x);
// Per mode k (k . X_k) / |k|^2.
SpectralField helmholtz_complement(const SpectralField& x);

// ||div part|| / ||X|| computed from the complement.
double divergence_residual(const SpectralField& x);
// Throws when the residual exceeds the tolerance, re-projects otherwise.
SpectralField require_divergence_free(const SpectralField& x, const char* who);

SpectralField laplacian(const SpectralField& x);
// Mode k multiplied by exp(-4 pi^2 delta |k|^2 t).
SpectralField heat_semigroup(const SpectralField& x, double t, double delta);

// 3D: 2 pi i k x X_k. 2D vector input: scalar 2 pi i (k0 X1 - k1 X0).
SpectralField curl(const SpectralField& x);
// 2D: scalar psi -> (-d1 psi, d0 psi).
SpectralField perp_gradient(const SpectralField& psi);

// 3D: divergence-free vorticity -> velocity with curl u = xi.
// 2D: scalar vorticity -> divergence-free velocity with curl u = xi.
SpectralField biot_savart(const SpectralField& xi);

}  // namespace tnoise
