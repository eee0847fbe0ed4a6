#include "tnoise/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "tnoise/operators.hpp"

namespace tnoise {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFourPi2 = 4.0 * kPi * kPi;

// J_0..J_m(x) by Miller's backward recurrence, normalized with J_0 + 2 sum J_{2k} = 1.
std::vector<double> bessel_sequence(double x, int m) {
  std::vector<double> j(m + 1, 0.0);
  if (x == 0.0) {
    j[0] = 1.0;
    return j;
  }
  const int start = m + 40 + static_cast<int>(std::sqrt(40.0 * (m + 1)));
  double jp = 0.0, jc = 1e-300, sum = 0.0;
  for (int k = start; k > 0; --k) {
    double jm = 2.0 * k / x * jc - jp;
    jp = jc;
    jc = jm;
    if (std::abs(jc) > 1e250) {
      jc *= 1e-250;
      jp *= 1e-250;
      sum *= 1e-250;
      for (double& v : j) v *= 1e-250;
    }
    if (k - 1 <= m) j[k - 1] = jc;
    if ((k - 1) % 2 == 0 && k - 1 > 0) sum += 2.0 * jc;
  }
  sum += jc;
  for (double& v : j) v /= sum;
  return j;
}

}  // namespace

double CutoffFunction::operator()(double x) const {
  if (x <= R) return 1.0;
  if (x >= R + 1.0) return 0.0;
  return R + 1.0 - x;
}

std::string to_string(Scheme s) { return s == Scheme::isometric ? "isometric" : "eem"; }
std::string to_string(Truncation t) { return t == Truncation::stratonovich ? "stratonovich" : "ito"; }

Scheme parse_scheme(const std::string& s) {
  if (s == "isometric") return Scheme::isometric;
  if (s == "eem") return Scheme::eem;
  throw std::invalid_argument("unknown scheme '" + s + "' (isometric, eem)");
}

Truncation parse_truncation(const std::string& s) {
  if (s == "stratonovich") return Truncation::stratonovich;
  if (s == "ito") return Truncation::ito;
  throw std::invalid_argument("unknown truncation '" + s + "' (stratonovich, ito)");
}

struct Solver::Propagator {
  double h = 0.0;
  std::vector<double> full;  // exp(h L) per mode, 3x3 row-major
  std::vector<double> half;  // exp(h L / 2)
};

Solver::Solver(SolverOptions opt) : opt_(std::move(opt)), basis_(opt_.dim) {
  const int d = opt_.dim;
  if (d != 2 && d != 3) throw std::invalid_argument("Solver: dimension must be 2 or 3");
  if (opt_.max_mode < 1) throw std::invalid_argument("Solver: max_mode must be >= 1");
  if (!(opt_.dt > 0.0)) throw std::invalid_argument("Solver: dt must be positive");
  if (!(opt_.viscosity >= 0.0)) throw std::invalid_argument("Solver: viscosity must be >= 0");
  if (!(opt_.kappa >= 0.0)) throw std::invalid_argument("Solver: kappa must be >= 0");
  if (opt_.kappa > 0.0 && opt_.theta.empty()) throw std::invalid_argument("Solver: kappa > 0 needs theta");
  if (!opt_.theta.empty() && opt_.theta.dim() != d) throw std::invalid_argument("Solver: theta dimension");
  if (opt_.cutoff && d != 3) throw std::invalid_argument("Solver: the cut-off is a 3D option");
  const int M = opt_.max_mode;
  modes_ = ModeSet::cube(d, M);
  nl_ = std::make_unique<ProductEngine>(d, ProductEngine::grid_for(M, M, M));
  if (!opt_.theta.empty()) {
    // only k = l - m with l, m in the cube couple modes of the Galerkin space
    const int R = std::min(opt_.theta.radius_bound(), 2 * M);
    noise_modes_ = ModeSet::cube(d, R);
    noise_ = std::make_unique<ProductEngine>(d, ProductEngine::grid_for(R, M, M));
    for (const Wave& k : opt_.theta.canonical_support()) {
      noise_index_.push_back(noise_modes_->find(k));
      noise_weights_.push_back(opt_.theta.value(k));
      noise_vectors_.push_back(basis_.vectors(k));
    }
  }

  // linear multiplier per mode
  const std::size_t n = modes_->size();
  std::vector<double> lin(9 * n, 0.0);
  expl_mats_.assign(9 * n, 0.0);
  const bool noisy = opt_.kappa > 0.0;
  ModeMultiplier full, resolved;
  const bool need_full = noisy && opt_.truncation == Truncation::ito;
  const bool need_resolved =
      noisy && (opt_.scheme == Scheme::eem ? opt_.truncation == Truncation::stratonovich
                                           : opt_.truncation == Truncation::ito);
  if (need_full) {
    LatticeKernel kernel(opt_.theta);
    full = corrector_multiplier_full(modes_, kernel, opt_.kappa);
  }
  if (need_resolved) resolved = corrector_multiplier_resolved(modes_, opt_.theta, opt_.kappa);
  const double enhanced = opt_.kappa * corrector_limit_constant(d);
  for (std::size_t i = 0; i < n; ++i) {
    const double l2 = norm2((*modes_)[i]);
    double* L = lin.data() + 9 * i;
    double* D = expl_mats_.data() + 9 * i;
    if (opt_.scheme == Scheme::isometric) {
      for (int r = 0; r < d; ++r) L[4 * r] = -kFourPi2 * opt_.viscosity * l2;
      if (need_full)
        for (int e = 0; e < 9; ++e) L[e] += full.mat(i)[e] - resolved.mat(i)[e];
    } else {
      for (int r = 0; r < d; ++r) L[4 * r] = -kFourPi2 * (opt_.viscosity + enhanced) * l2;
      if (noisy) {
        const double* S = need_full ? full.mat(i) : resolved.mat(i);
        for (int e = 0; e < 9; ++e) D[e] = S[e];
        for (int r = 0; r < d; ++r) D[4 * r] += kFourPi2 * enhanced * l2;
      }
    }
  }
  eig_vals_.assign(3 * n, 0.0);
  eig_vecs_.assign(9 * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) A(r, c) = 0.5 * (lin[9 * i + 3 * r + c] + lin[9 * i + 3 * c + r]);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(A);
    for (int r = 0; r < 3; ++r) {
      eig_vals_[3 * i + r] = es.eigenvalues()(r);
      max_rate_ = std::max(max_rate_, std::abs(es.eigenvalues()(r)));
      for (int c = 0; c < 3; ++c) eig_vecs_[9 * i + 3 * c + r] = es.eigenvectors()(c, r);
    }
  }
}

Solver::~Solver() = default;

const Solver::Propagator& Solver::propagator(double h) {
  for (const auto& p : props_)
    if (p->h == h) return *p;
  auto p = std::make_unique<Propagator>();
  p->h = h;
  const std::size_t n = modes_->size();
  p->full.assign(9 * n, 0.0);
  p->half.assign(9 * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* lam = eig_vals_.data() + 3 * i;
    const double* Q = eig_vecs_.data() + 9 * i;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        double f = 0.0, g = 0.0;
        for (int e = 0; e < 3; ++e) {
          f += Q[3 * r + e] * std::exp(h * lam[e]) * Q[3 * c + e];
          g += Q[3 * r + e] * std::exp(0.5 * h * lam[e]) * Q[3 * c + e];
        }
        p->full[9 * i + 3 * r + c] = f;
        p->half[9 * i + 3 * r + c] = g;
      }
  }
  if (props_.size() >= 4) props_.erase(props_.begin());
  props_.push_back(std::move(p));
  return *props_.back();
}

namespace {

SpectralField apply_mats(const std::vector<double>& mats, const SpectralField& x) {
  SpectralField out = x.zeros_like();
  const int d = x.components();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double* m = mats.data() + 9 * i;
    const cplx* v = x.mode(i);
    for (int r = 0; r < d; ++r) {
      cplx s = 0.0;
      for (int c = 0; c < d; ++c) s += m[3 * r + c] * v[c];
      out.at(i, r) = s;
    }
  }
  return out;
}

}  // namespace

double Solver::cutoff_norm(const SpectralField& u) const { return sobolev_norm(u, -opt_.alpha); }

SpectralField Solver::nonlinear_rhs(const SpectralField& u, SolverState* s) {
  if (!opt_.nonlinear) return u.zeros_like();
  if (opt_.dim == 2) {
    SpectralField b = nl_->navier_stokes_term(u);
    b *= -1.0;
    return b;
  }
  double g = 1.0;
  if (opt_.cutoff) {
    g = (*opt_.cutoff)(cutoff_norm(u));
    if (g < 1.0 && s) s->cutoff_engaged = true;
    if (g == 0.0) return u.zeros_like();
  }
  SpectralField lie = helmholtz_project(nl_->lie_derivative(u));
  lie *= -g;
  return lie;
}

void Solver::check_finite(const SpectralField& u) const {
  for (const cplx& v : u.data())
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw std::runtime_error("solver: non-finite coefficient, trajectory aborted");
}

SolverState Solver::initial_state(const SpectralField& u0) const {
  if (u0.dim() != opt_.dim || u0.components() != opt_.dim)
    throw std::invalid_argument("Solver: initial field has the wrong shape");
  SolverState s;
  s.u = require_divergence_free(u0.max_mode() == opt_.max_mode ? u0 : resample(u0, opt_.max_mode), "Solver");
  check_finite(s.u);
  s.ledger.initial_energy = std::pow(l2_norm(s.u), 2);
  if (opt_.dim == 3) s.max_cutoff_norm = cutoff_norm(s.u);
  return s;
}

SpectralField Solver::noise_velocity(const IncrementTable& inc) const {
  SpectralField v(noise_modes_, opt_.dim);
  const double amp = std::sqrt(noise_constant(opt_.dim) * opt_.kappa);
  for (std::size_t n = 0; n < inc.modes->size(); ++n) {
    const std::ptrdiff_t idx = noise_index_[n];
    if (idx < 0) continue;
    const auto& a = noise_vectors_[n];
    for (int i = 0; i < opt_.dim - 1; ++i) {
      const cplx w = amp * noise_weights_[n] * inc.at(n, i);
      for (int c = 0; c < opt_.dim; ++c) v.at(idx, c) += w * a[i][c];
    }
  }
  v.mark_divergence_free(true);
  return v;
}

SpectralField Solver::transport_exponential(const GridField& v, const SpectralField& f) {
  const double sup = v.sup_norm();
  if (sup == 0.0) return f;
  const double kmax = 2.0 * kPi * opt_.max_mode * std::sqrt(static_cast<double>(opt_.dim));
  double rho = 1.25 * sup * kmax;
  const double f_norm = l2_norm(f);
  for (int attempt = 0; attempt < 4; ++attempt, rho *= 2.0) {
    const int terms = static_cast<int>(std::ceil(rho + 12.0 * std::cbrt(rho) + 30.0));
    std::vector<double> J = bessel_sequence(rho, terms);
    auto Y = [&](const SpectralField& x) {
      SpectralField y = helmholtz_project(noise_->transport(v, x, modes_));
      y *= 1.0 / rho;
      return y;
    };
    SpectralField prev = f;
    SpectralField cur = Y(f);
    SpectralField out = f;
    out *= J[0];
    out.axpy(2.0 * J[1], cur);
    for (int m = 2; m <= terms; ++m) {
      SpectralField next = Y(cur);
      next *= 2.0;
      next += prev;
      out.axpy(2.0 * J[m], next);
      prev = std::move(cur);
      cur = std::move(next);
      if (m > rho && std::abs(J[m]) < 1e-18) break;
    }
    const double err = std::abs(l2_norm(out) - f_norm);
    if (err <= 1e-10 * std::max(f_norm, 1e-300)) {
      out.mark_divergence_free(true);
      return out;
    }
  }
  throw std::runtime_error("transport_exponential: series failed the isometry check");
}

double Solver::stability_limit(const SpectralField& u) const {
  double limit = std::numeric_limits<double>::infinity();
  const double h1 = sobolev_norm(u, 1.0);
  if (h1 > 0.0) limit = 0.1 / (h1 * opt_.max_mode);
  if (opt_.kappa > 0.0) {
    const double N = opt_.theta.annulus_scale() > 0 ? opt_.theta.annulus_scale() : opt_.theta.radius_bound() / 2.0;
    const double sup = opt_.theta.sup();
    const double kk = 2.0 * kPi * 2.0 * N;
    const double count = static_cast<double>(opt_.theta.support_size());
    limit = std::min(limit, 0.5 / (2.0 * opt_.kappa * sup * sup * kk * kk * count));
  }
  return limit;
}

void Solver::deterministic_step(SolverState& s, double dt) {
  // substep count from the transport speed and the dissipation rate
  double speed = 0.0;
  if (opt_.nonlinear && l2_norm(s.u) > 0.0) {
    GridField ug;
    SpectralField vel = opt_.dim == 2 ? s.u : biot_savart(s.u);
    nl_->to_grid(vel, ug);
    // not reduced by the cut-off: the stage states may fall back below R
    speed = ug.sup_norm();
  }
  double hmax = dt;
  if (speed > 0.0) hmax = std::min(hmax, opt_.cfl / (speed * nl_->n()));
  if (opt_.dissipation_resolution > 0.0 && max_rate_ > 0.0)
    hmax = std::min(hmax, opt_.dissipation_resolution / max_rate_);
  const double ratio = dt / hmax;
  if (ratio > 1e6) throw std::runtime_error("solver: step size collapse, trajectory aborted");
  const long long nsub = std::max(1LL, static_cast<long long>(std::ceil(ratio - 1e-12)));
  const double h = dt / static_cast<double>(nsub);
  const Propagator& P = propagator(h);
  double g0 = std::pow(gradient_norm(s.u), 2);
  for (long long q = 0; q < nsub; ++q) {
    const SpectralField& u0 = s.u;
    SpectralField k1 = nonlinear_rhs(u0, &s);
    SpectralField w = u0;
    w.axpy(0.5 * h, k1);
    SpectralField u2 = apply_mats(P.half, w);
    SpectralField k2 = nonlinear_rhs(u2, &s);
    SpectralField e0 = apply_mats(P.full, u0);
    SpectralField ek1 = apply_mats(P.full, k1);
    SpectralField ek2 = apply_mats(P.half, k2);
    SpectralField u3 = e0;
    u3.axpy(-h, ek1);
    u3.axpy(2.0 * h, ek2);
    SpectralField k3 = nonlinear_rhs(u3, &s);
    SpectralField u1 = std::move(e0);
    u1.axpy(h / 6.0, ek1);
    u1.axpy(2.0 * h / 3.0, ek2);
    u1.axpy(h / 6.0, k3);
    s.u = helmholtz_project(u1);
    const double g1 = std::pow(gradient_norm(s.u), 2);
    const double inc = 0.5 * h * (g0 + g1);
    s.ledger.dissipation += inc;
    s.ledger.last_step_dissipation += inc;
    g0 = g1;
    ++s.substeps;
  }
}

void Solver::eem_step(SolverState& s, double dt, BrownianDriver& driver) {
  const double limit = stability_limit(s.u);
  long long nsub = 1;
  if (dt > limit) {
    nsub = static_cast<long long>(std::ceil(dt / limit));
    if (nsub > 100000000LL) throw std::runtime_error("solver: step size collapse, trajectory aborted");
    ++s.guard_reductions;
  }
  const double h = dt / static_cast<double>(nsub);
  const Propagator& P = propagator(h);
  double g0 = std::pow(gradient_norm(s.u), 2);
  for (long long q = 0; q < nsub; ++q) {
    SpectralField w = s.u;
    if (opt_.kappa > 0.0) w.axpy(h, apply_mats(expl_mats_, s.u));
    w.axpy(h, nonlinear_rhs(s.u, &s));
    if (!opt_.theta.empty()) {
      const IncrementTable& inc = driver.sample_increments(h, opt_.theta);
      if (opt_.kappa > 0.0) {
        GridField vg;
        noise_->to_grid(noise_velocity(inc), vg);
        w += helmholtz_project(noise_->transport(vg, s.u, modes_));
      }
    }
    s.u = helmholtz_project(apply_mats(P.full, w));
    check_finite(s.u);
    const double g1 = std::pow(gradient_norm(s.u), 2);
    const double inc = 0.5 * h * (g0 + g1);
    s.ledger.dissipation += inc;
    s.ledger.last_step_dissipation += inc;
    g0 = g1;
    ++s.substeps;
  }
}

void Solver::step(SolverState& s, BrownianDriver& driver) {
  const double before = std::pow(l2_norm(s.u), 2);
  s.ledger.last_step_dissipation = 0.0;
  const double dt = opt_.dt;
  if (opt_.scheme == Scheme::isometric) {
    if (!opt_.theta.empty()) {
      const IncrementTable& inc = driver.sample_increments(dt, opt_.theta);
      if (opt_.kappa > 0.0) {
        GridField vg;
        noise_->to_grid(noise_velocity(inc), vg);
        s.u = transport_exponential(vg, s.u);
      }
    }
    deterministic_step(s, dt);
  } else {
    eem_step(s, dt, driver);
  }
  check_finite(s.u);
  ++s.steps;
  s.t = static_cast<double>(s.steps) * dt;
  const double after = std::pow(l2_norm(s.u), 2);
  s.ledger.last_step_change = after - before;
  s.ledger.energy_change = after - s.ledger.initial_energy;
  if (opt_.dim == 3) s.max_cutoff_norm = std::max(s.max_cutoff_norm, cutoff_norm(s.u));
}

BlowupMonitor::BlowupMonitor(double L, double r0, double T, double ceiling)
    : L_(L), r0_(r0), T_(T), ceiling_(ceiling) {
  if (!(L > 0.0) || !(r0 > 0.0)) throw std::invalid_argument("BlowupMonitor: L and r0 must be positive");
  if (!(T >= 1.0)) throw std::invalid_argument("BlowupMonitor: horizon shorter than 1 leaves no window");
}

bool BlowupMonitor::observe(double t, double l2, double hmalpha) {
  rec_.sup_norm = std::max(rec_.sup_norm, hmalpha);
  if (hmalpha > 2.0 * L_) rec_.sup_exceeded = true;
  if (prev_t_ >= 0.0 && t > prev_t_) {
    // trapezoid of ||xi||^2 on [prev, t] clipped to the window [T - 1, T]
    const double a = std::max(prev_t_, T_ - 1.0), b = std::min(t, T_);
    if (b > a) {
      const double fa = prev_l2_ * prev_l2_, fb = l2 * l2;
      auto lerp = [&](double x) { return fa + (fb - fa) * (x - prev_t_) / (t - prev_t_); };
      window_sq_ += 0.5 * (b - a) * (lerp(a) + lerp(b));
    }
  }
  prev_t_ = t;
  prev_l2_ = l2;
  rec_.exit_time = t;
  if (!(l2 <= ceiling_)) {
    rec_.ceiling_hit = true;
    return false;
  }
  return true;
}

BlowupRecord BlowupMonitor::finish(double t, double l2, bool early) {
  BlowupRecord r = rec_;
  double w = window_sq_;
  if (early && t < T_) {
    const double a = std::max(t, T_ - 1.0);
    w += l2 * l2 * (T_ - a);
  }
  r.early_exit = early;
  r.exit_time = t;
  r.window_norm = std::sqrt(w);
  r.window_exceeded = r.window_norm > r0_;
  return r;
}

double blowup_horizon(double L, double r0) {
  if (!(L > 0.0) || !(r0 > 0.0)) throw std::invalid_argument("blowup_horizon: L and r0 must be positive");
  return 1.0 + std::log(2.0 * L / r0);
}

BlowupRecord detect_blowup(const std::vector<double>& t, const std::vector<double>& l2,
                           const std::vector<double>& hmalpha, double L, double r0, double T) {
  if (t.size() != l2.size() || t.size() != hmalpha.size())
    throw std::invalid_argument("detect_blowup: sample arrays differ in length");
  BlowupMonitor mon(L, r0, T, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < t.size(); ++i) mon.observe(t[i], l2[i], hmalpha[i]);
  return mon.finish(t.empty() ? 0.0 : t.back(), l2.empty() ? 0.0 : l2.back(), false);
}

DecayFit decay_rate_fit(const std::vector<double>& t, const std::vector<double>& norm, double floor) {
  if (t.size() != norm.size()) throw std::invalid_argument("decay_rate_fit: sample arrays differ in length");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (std::isfinite(norm[i]) && norm[i] > floor) {
      x.push_back(t[i]);
      y.push_back(std::log(norm[i]));
    }
  if (x.size() < 10) throw std::runtime_error("decay_rate_fit: fewer than 10 samples above the floor");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::runtime_error("decay_rate_fit: samples share one time");
  const double slope = sxy / sxx;
  DecayFit f;
  f.rate = -slope;
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  f.samples = static_cast<int>(x.size());
  return f;
}

std::string trajectory_csv_header() { return "t,l2,grad_l2,h_minus_alpha,flags"; }

std::string trajectory_csv_row(const TrajectoryRow& r) {
  char buf[256];
  if (std::isnan(r.hmalpha))
    std::snprintf(buf, sizeof buf, "%.10g,%.12e,%.12e,,", r.t, r.l2, r.grad);
  else
    std::snprintf(buf, sizeof buf, "%.10g,%.12e,%.12e,%.12e,", r.t, r.l2, r.grad, r.hmalpha);
  return std::string(buf) + r.flags;
}

}  // namespace tnoise
