#include "tnoise/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tnoise/random_fields.hpp"

namespace tnoise {

SpectralField random_vorticity(int max_mode, std::uint64_t seed, double radius, double l2) {
  return random_solenoidal(3, max_mode, seed, radius, l2);
}

LimitRun run_limit(int max_mode, const SpectralField& xi0, double viscosity, double horizon, double dt) {
  SolverOptions o;
  o.dim = 3;
  o.max_mode = max_mode;
  o.viscosity = viscosity;
  o.dt = dt;
  o.dissipation_resolution = 0.0;
  Solver s(o);
  SolverState st = s.initial_state(xi0);
  BrownianDriver drv(3, 0);
  const double n0 = l2_norm(st.u);
  LimitRun r;
  r.max_decay_ratio = 1.0;
  r.max_energy_ratio = 1.0;
  if (n0 == 0.0) return r;
  double prev = n0;
  const long long steps = static_cast<long long>(std::llround(horizon / dt));
  for (long long n = 0; n < steps; ++n) {
    s.step(st, drv);
    const double x = l2_norm(st.u);
    r.max_decay_ratio = std::max(r.max_decay_ratio, x / (std::exp(-st.t) * n0));
    r.max_energy_ratio = std::max(r.max_energy_ratio, (x * x + st.ledger.dissipation) / (n0 * n0));
    if (x > prev) r.monotone = false;
    prev = x;
    r.end_time = st.t;
    if (x < 1e-12 * n0) break;
  }
  return r;
}

namespace {

SpectralField family_member(const CalibrationOptions& o, int i, double size) {
  return random_vorticity(o.max_mode, derive_seed(o.seed, static_cast<std::uint64_t>(i)), o.radius, size);
}

}  // namespace

double calibrate_small_data_radius(const CalibrationOptions& o, double lo, double hi) {
  if (!(lo > 0.0 && hi > lo)) throw std::invalid_argument("calibrate_small_data_radius: need 0 < lo < hi");
  auto ok = [&](double size) {
    for (int i = 0; i < o.family; ++i)
      if (!run_limit(o.max_mode, family_member(o, i, size), 1.0, o.horizon, o.dt).monotone) return false;
    return true;
  };
  if (!ok(lo)) throw std::runtime_error("calibrate_small_data_radius: lower end already grows");
  if (ok(hi)) return hi;
  for (int it = 0; it < o.iterations; ++it) {
    const double mid = std::sqrt(lo * hi);
    (ok(mid) ? lo : hi) = mid;
    if (hi / lo < 1.01) break;
  }
  return lo;
}

LimitCalibration calibrate_limit_constant(const CalibrationOptions& o, const std::vector<double>& sizes) {
  LimitCalibration c;
  for (double size : sizes) {
    auto ok = [&](double kappa) {
      for (int i = 0; i < o.family; ++i)
        if (run_limit(o.max_mode, family_member(o, i, size), 1.0 + 0.6 * kappa, o.horizon, o.dt).max_decay_ratio > 1.0)
          return false;
      return true;
    };
    double kmin = 0.0;
    if (!ok(0.0)) {
      double lo = 0.0, hi = 1.0;
      while (!ok(hi)) {
        lo = hi;
        hi *= 4.0;
        if (hi > 1e12) throw std::runtime_error("calibrate_limit_constant: no kappa gives e^{-t} decay");
      }
      for (int it = 0; it < o.iterations && hi - lo > 1e-3 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (ok(mid) ? hi : lo) = mid;
      }
      kmin = hi;
    }
    c.sizes.push_back(size);
    c.kappa_min.push_back(kmin);
    c.C1 = std::max(c.C1, std::max(0.0, kmin - 1.0) / std::pow(size, 4));
  }
  return c;
}

CutoffEnergySample cutoff_energy_sample(Solver& solver, const SpectralField& xi0, BrownianDriver& driver,
                                        double horizon) {
  const SolverOptions& o = solver.options();
  if (!o.cutoff) throw std::invalid_argument("cutoff_energy_sample: solver has no cut-off");
  SolverState st = solver.initial_state(xi0);
  CutoffEnergySample r;
  r.initial = std::pow(l2_norm(st.u), 2);
  double sup = r.initial;
  const long long steps = static_cast<long long>(std::llround(horizon / o.dt));
  for (long long n = 0; n < steps; ++n) {
    solver.step(st, driver);
    sup = std::max(sup, std::pow(l2_norm(st.u), 2));
  }
  r.lhs = sup + st.ledger.dissipation;
  r.scale = std::pow(o.cutoff->R + 1.0, 2.0 / (3.0 + 2.0 * o.alpha)) * horizon;
  r.engaged = st.cutoff_engaged;
  return r;
}

CutoffConstantFit fit_cutoff_constant(const SolverOptions& o, std::uint64_t seed, int trajectories, double radius,
                                      double size, double horizon, double margin) {
  if (trajectories < 1) throw std::invalid_argument("fit_cutoff_constant: need at least one trajectory");
  Solver solver(o);
  CutoffConstantFit fit;
  double worst = 0.0;
  for (int i = 0; i < trajectories; ++i) {
    const SpectralField xi0 = random_vorticity(o.max_mode, derive_seed(seed, i), radius, size);
    BrownianDriver drv(3, derive_seed(seed, (std::uint64_t{1} << 20) | static_cast<std::uint64_t>(i)));
    fit.samples.push_back(cutoff_energy_sample(solver, xi0, drv, horizon));
    worst = std::max(worst, fit.samples.back().fitted());
  }
  fit.C_alpha = margin * worst;
  return fit;
}

}  // namespace tnoise
