#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tnoise/corrector.hpp"
#include "tnoise/nonlinear.hpp"
#include "tnoise/noise.hpp"
#include "tnoise/spectral_field.hpp"

namespace tnoise {

// 1 on [0, R], linear down to 0 on [R, R + 1], 0 beyond.
struct CutoffFunction {
  double R = 0.0;
  double operator()(double x) const;
};

// How the noise step is integrated.
//   isometric: exact exponential of the frozen transport operator over the step,
//              followed by an integrating-factor RK3 step of the deterministic part.
//   eem:       exponential Euler-Maruyama on the Ito form with the enhanced
//              viscosity inside the semigroup.
enum class Scheme { isometric, eem };

// Which Ito correction the truncated system carries.
//   stratonovich: the Galerkin-projected Stratonovich system; its correction is
//                 the resolved multiplier, energy is conserved by the noise.
//   ito:          the projected Ito system with the full corrector S_theta; the
//                 transfer to modes outside the cube is dissipated.
enum class Truncation { stratonovich, ito };

std::string to_string(Scheme s);
std::string to_string(Truncation t);
Scheme parse_scheme(const std::string& s);
Truncation parse_truncation(const std::string& s);

struct SolverOptions {
  int dim = 2;
  int max_mode = 16;
  double viscosity = 1.0;
  double kappa = 0.0;
  ThetaSequence theta;  // may be empty when kappa == 0
  Scheme scheme = Scheme::isometric;
  Truncation truncation = Truncation::stratonovich;
  double dt = 0.01;
  double cfl = 0.5;
  // substeps also resolve the fastest dissipation rate to this fraction
  double dissipation_resolution = 0.25;
  bool nonlinear = true;
  std::optional<CutoffFunction> cutoff;  // 3D only
  double alpha = 0.25;                   // index of the cut-off norm H^{-alpha}
};

// Running quantities of one trajectory.
struct EnergyLedger {
  double initial_energy = 0.0;     // ||u_0||^2
  double dissipation = 0.0;        // int_0^t ||grad u||^2 ds, trapezoidal
  double energy_change = 0.0;      // ||u_t||^2 - ||u_0||^2
  double last_step_change = 0.0;   // ||u^+||^2 - ||u||^2 of the last step
  double last_step_dissipation = 0.0;
};

struct SolverState {
  double t = 0.0;
  SpectralField u;  // velocity (2D) or vorticity (3D), divergence-free
  EnergyLedger ledger;
  long long steps = 0;
  long long substeps = 0;
  long long guard_reductions = 0;
  double max_cutoff_norm = 0.0;  // sup_t ||xi||_{H^{-alpha}}
  bool cutoff_engaged = false;   // g < 1 at some stage
};

class Solver {
 public:
  explicit Solver(SolverOptions opt);
  ~Solver();
  Solver(const Solver&) = delete;
  Solver& operator=(const Solver&) = delete;

  const SolverOptions& options() const { return opt_; }
  const ModeSetPtr& modes() const { return modes_; }

  SolverState initial_state(const SpectralField& u0) const;
  // Advances by options().dt; increments are drawn from the driver even when
  // kappa == 0 so runs with different kappa share the same Brownian path.
  void step(SolverState& s, BrownianDriver& driver);

  // Exact exp of P_M Pi (V . grad) applied to f; V given as a field on the noise grid.
  SpectralField transport_exponential(const GridField& v, const SpectralField& f);
  // Noise velocity sqrt(C_d kappa) sum theta_k a_{k,i} e_k dW^{k,i}, restricted to |k_j| <= 2M.
  SpectralField noise_velocity(const IncrementTable& inc) const;

  // Deterministic right-hand side without the linear part (minus the nonlinearity).
  SpectralField nonlinear_rhs(const SpectralField& u, SolverState* s);
  double cutoff_norm(const SpectralField& u) const;
  // Largest step allowed by the explicit-scheme stability guard.
  double stability_limit(const SpectralField& u) const;

 private:
  struct Propagator;
  void deterministic_step(SolverState& s, double dt);
  void eem_step(SolverState& s, double dt, BrownianDriver& driver);
  void check_finite(const SpectralField& u) const;
  const Propagator& propagator(double h);

  SolverOptions opt_;
  ModeSetPtr modes_;
  std::unique_ptr<ProductEngine> nl_;
  std::unique_ptr<ProductEngine> noise_;
  ModeSetPtr noise_modes_;
  NoiseBasis basis_;
  // per mode: eigenvalues and eigenvectors of the linear multiplier
  std::vector<double> eig_vals_;
  std::vector<double> eig_vecs_;
  std::vector<double> expl_mats_;  // explicit drift multiplier for eem
  std::vector<std::unique_ptr<Propagator>> props_;
  double max_rate_ = 0.0;
  std::vector<std::ptrdiff_t> noise_index_;
  std::vector<double> noise_weights_;
  std::vector<std::array<Vec3, 2>> noise_vectors_;
};

// Sup of ||.||_{H^{-alpha}} ceiling, window integral and exit state of a 3D run.
struct BlowupRecord {
  bool sup_exceeded = false;     // (a) sup_t ||xi||_{H^{-alpha}} > 2L
  bool window_exceeded = false;  // (b) ||xi||_{L^2(T-1,T;L^2)} > r0
  bool ceiling_hit = false;      // ||xi||_{L^2} > ceiling, trajectory aborted
  double sup_norm = 0.0;
  double window_norm = 0.0;
  double exit_time = 0.0;
  bool early_exit = false;
  bool possible_blowup() const { return sup_exceeded || window_exceeded || ceiling_hit; }
};

// Accumulates the blow-up indicators along a trajectory.
class BlowupMonitor {
 public:
  BlowupMonitor(double L, double r0, double T, double ceiling);
  double horizon() const { return T_; }
  // Returns false when the trajectory should stop (ceiling crossed).
  bool observe(double t, double l2, double hmalpha);
  // Closes the record; for an early exit the remaining window is bounded by
  // the current L2 norm (energy is non-increasing below the small-data radius).
  BlowupRecord finish(double t, double l2, bool early);

 private:
  double L_, r0_, T_, ceiling_;
  BlowupRecord rec_;
  double window_sq_ = 0.0;
  double prev_t_ = -1.0, prev_l2_ = 0.0;
};

// Horizon 1 + log(2L / r0) of the blow-up experiment.
double blowup_horizon(double L, double r0);
BlowupRecord detect_blowup(const std::vector<double>& t, const std::vector<double>& l2,
                           const std::vector<double>& hmalpha, double L, double r0, double T);

struct DecayFit {
  double rate = 0.0;  // lambda_hat = - slope of log ||u|| vs t
  double r2 = 0.0;
  int samples = 0;
};
// Least squares over the samples with ||u|| > floor; needs at least 10 of them.
DecayFit decay_rate_fit(const std::vector<double>& t, const std::vector<double>& norm, double floor = 1e-10);

// Trajectory sample as written to CSV.
struct TrajectoryRow {
  double t = 0.0;
  double l2 = 0.0;
  double grad = 0.0;
  double hmalpha = std::numeric_limits<double>::quiet_NaN();
  std::string flags;
};

std::string trajectory_csv_header();
std::string trajectory_csv_row(const TrajectoryRow& r);

}  // namespace tnoise
