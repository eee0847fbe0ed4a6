#pragma once

#include <cstdint>
#include <vector>

#include "tnoise/solver.hpp"

namespace tnoise {

// Random divergence-free vorticity with the given L2 norm, Fourier support |k| <= radius.
SpectralField random_vorticity(int max_mode, std::uint64_t seed, double radius, double l2);

// Deterministic 3D run with viscosity `viscosity`, no noise and no cut-off.
struct LimitRun {
  double max_decay_ratio = 0.0;   // sup_t ||xi_t|| / (e^{-t} ||xi_0||)
  double max_energy_ratio = 0.0;  // sup_t (||xi_t||^2 + int_0^t ||grad xi||^2) / ||xi_0||^2
  bool monotone = true;           // ||xi_t|| non-increasing at every sample
  double end_time = 0.0;
};
LimitRun run_limit(int max_mode, const SpectralField& xi0, double viscosity, double horizon, double dt);

struct CalibrationOptions {
  int max_mode = 5;
  int family = 4;          // initial data per size
  std::uint64_t seed = 1;
  double radius = 2.0;     // Fourier support of the initial data
  double dt = 1e-3;
  double horizon = 0.5;
  int iterations = 30;     // bisection steps
};

// Largest ||xi_0|| for which every member of the family decays monotonically
// under the unit-viscosity flow (bisection on a log scale in [lo, hi]).
double calibrate_small_data_radius(const CalibrationOptions& o, double lo, double hi);

// Smallest kappa with ||xi_t|| <= e^{-t} ||xi_0|| under viscosity 1 + 3 kappa / 5 for
// the family at each size; returns max over sizes of (kappa_min - 1)_+ / size^4.
struct LimitCalibration {
  double C1 = 0.0;
  std::vector<double> sizes;
  std::vector<double> kappa_min;
};
LimitCalibration calibrate_limit_constant(const CalibrationOptions& o, const std::vector<double>& sizes);

// One cut-off trajectory for the a.s. energy bound: sup ||xi||^2 + int ||grad xi||^2.
struct CutoffEnergySample {
  double lhs = 0.0;
  double initial = 0.0;   // ||xi_0||^2
  double scale = 0.0;     // (R + 1)^{2 / (3 + 2 alpha)} T
  bool engaged = false;
  double fitted() const { return (lhs - initial) / scale; }
};
CutoffEnergySample cutoff_energy_sample(Solver& solver, const SpectralField& xi0, BrownianDriver& driver,
                                        double horizon);

// Pilot fit of the constant of the a.s. bound: margin * max over trajectories of
// (lhs - ||xi_0||^2) / scale. Trajectory i starts from random_vorticity(seed_i)
// and uses the driver seed derive_seed(seed, 2^20 + i).
struct CutoffConstantFit {
  double C_alpha = 0.0;
  std::vector<CutoffEnergySample> samples;
};
CutoffConstantFit fit_cutoff_constant(const SolverOptions& o, std::uint64_t seed, int trajectories, double radius,
                                      double size, double horizon, double margin = 1.25);

}  // namespace tnoise
