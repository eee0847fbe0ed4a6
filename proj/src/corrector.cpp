#include "tnoise/corrector.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "tnoise/operators.hpp"

namespace tnoise {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;

using Mat = std::array<double, 9>;

Mat projector(const Wave& l, int d) {
  Mat p{};
  double n2 = norm2(l);
  for (int r = 0; r < d; ++r)
    for (int s = 0; s < d; ++s) p[3 * r + s] = (r == s ? 1.0 : 0.0) - l[r] * l[s] / n2;
  return p;
}

Mat matmul(const Mat& a, const Mat& b) {
  Mat c{};
  for (int r = 0; r < 3; ++r)
    for (int s = 0; s < 3; ++s)
      for (int t = 0; t < 3; ++t) c[3 * r + s] += a[3 * r + t] * b[3 * t + s];
  return c;
}

SpectralField to_real(const ComplexField& f, const ModeSetPtr& modes) {
  SpectralField out(modes, f.components());
  for (std::size_t i = 0; i < modes->size(); ++i) {
    const cplx* v = f.at((*modes)[i]);
    for (int c = 0; c < f.components(); ++c) out.at(i, c) = v[c];
  }
  return out;
}

SpectralField corrector_sum(const SpectralField& v0, const ThetaSequence& theta, double kappa,
                            const NoiseBasis& basis, bool inner_projection) {
  SpectralField v = require_divergence_free(v0, "corrector");
  if (theta.dim() != v.dim() || basis.dim() != v.dim())
    throw std::invalid_argument("corrector: dimension mismatch");
  const int d = v.dim();
  const int Mv = v.max_mode();
  const int Mint = Mv + theta.radius_bound();
  ComplexField vf = ComplexField::from_real(v, Mv);
  ComplexField acc(d, d, Mv);
  const double cd = noise_constant(d) * kappa;
  for (const Wave& kc : theta.canonical_support()) {
    const double w = cd * theta.square(norm2(kc));
    auto a = basis.vectors(kc);
    for (const Wave& k : {kc, negate(kc)}) {
      for (int i = 0; i < d - 1; ++i) {
        ComplexField inner = vf.shift_gradient(negate(k), a[i], Mint);
        if (inner_projection) inner.project();
        ComplexField outer = inner.shift_gradient(k, a[i], Mv);
        outer.project();
        outer.for_each_nonzero([&](const Wave& m, const cplx* z) {
          cplx* dst = acc.at(m);
          for (int c = 0; c < d; ++c) dst[c] += w * z[c];
        });
      }
    }
  }
  SpectralField out = to_real(acc, v.modes_ptr());
  out.mark_divergence_free(true);
  return out;
}

}  // namespace

ComplexField::ComplexField(int dim, int components, int max_mode) : dim_(dim), m_(components), M_(max_mode) {
  std::size_t w = 2 * M_ + 1;
  data_.assign(w * w * (dim == 3 ? w : 1) * m_, cplx(0.0));
}

ComplexField ComplexField::from_real(const SpectralField& x, int max_mode) {
  if (max_mode < x.max_mode()) throw std::invalid_argument("ComplexField: cube too small");
  ComplexField f(x.dim(), x.components(), max_mode);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Wave& k = x.wave(i);
    cplx* p = f.at(k);
    cplx* q = f.at(negate(k));
    for (int c = 0; c < x.components(); ++c) {
      p[c] = x.at(i, c);
      q[c] = std::conj(x.at(i, c));
    }
  }
  return f;
}

bool ComplexField::contains(const Wave& k) const {
  if (dim_ == 2 && k[2] != 0) return false;
  return sup_norm(k) <= M_;
}

std::size_t ComplexField::index(const Wave& k) const {
  const std::size_t w = 2 * M_ + 1;
  std::size_t idx = static_cast<std::size_t>(k[0] + M_) * w + static_cast<std::size_t>(k[1] + M_);
  if (dim_ == 3) idx = idx * w + static_cast<std::size_t>(k[2] + M_);
  return idx * m_;
}

cplx* ComplexField::at(const Wave& k) {
  if (!contains(k)) throw std::out_of_range("ComplexField: wave vector outside the stored lattice");
  return data_.data() + index(k);
}

const cplx* ComplexField::at(const Wave& k) const {
  if (!contains(k)) throw std::out_of_range("ComplexField: wave vector outside the stored lattice");
  return data_.data() + index(k);
}

ComplexField ComplexField::shift_gradient(const Wave& k, const Vec3& a, int out_max_mode) const {
  ComplexField out(dim_, m_, out_max_mode);
  for_each_nonzero([&](const Wave& m, const cplx* v) {
    cplx f(0.0, kTwoPi * (a[0] * m[0] + a[1] * m[1] + a[2] * m[2]));
    if (f == cplx(0.0)) return;
    Wave t = m + k;
    if (!out.contains(t)) throw std::out_of_range("corrector: intermediate mode outside the truncation");
    cplx* dst = out.at(t);
    for (int c = 0; c < m_; ++c) dst[c] += f * v[c];
  });
  return out;
}

void ComplexField::project() {
  if (m_ != dim_) throw std::invalid_argument("ComplexField::project: vector field required");
  const int M = M_;
  const int lo2 = dim_ == 3 ? -M : 0, hi2 = dim_ == 3 ? M : 0;
  std::size_t p = 0;
  for (int a = -M; a <= M; ++a)
    for (int b = -M; b <= M; ++b)
      for (int c = lo2; c <= hi2; ++c, p += m_) {
        Wave k{a, b, c};
        int n2 = norm2(k);
        if (n2 == 0) continue;
        cplx kv = 0.0;
        for (int j = 0; j < dim_; ++j) kv += static_cast<double>(k[j]) * data_[p + j];
        if (kv == cplx(0.0)) continue;
        kv /= static_cast<double>(n2);
        for (int j = 0; j < dim_; ++j) data_[p + j] -= kv * static_cast<double>(k[j]);
      }
}

double ComplexField::norm_squared() const {
  double s = 0.0;
  for (const auto& v : data_) s += std::norm(v);
  return s;
}

SpectralField corrector_compositional(const SpectralField& v, const ThetaSequence& theta, double kappa,
                                      const NoiseBasis& basis) {
  return corrector_sum(v, theta, kappa, basis, true);
}

SpectralField corrector_no_projection(const SpectralField& v, const ThetaSequence& theta, double kappa,
                                      const NoiseBasis& basis) {
  return corrector_sum(v, theta, kappa, basis, false);
}

double noise_dissipation(const SpectralField& v0, const ThetaSequence& theta, double kappa,
                         const NoiseBasis& basis) {
  SpectralField v = require_divergence_free(v0, "noise_dissipation");
  const int d = v.dim();
  const int Mout = v.max_mode() + theta.radius_bound();
  ComplexField vf = ComplexField::from_real(v, v.max_mode());
  double total = 0.0;
  for (const Wave& kc : theta.canonical_support()) {
    const double w = noise_constant(d) * kappa * theta.square(norm2(kc));
    auto a = basis.vectors(kc);
    for (const Wave& k : {kc, negate(kc)})
      for (int i = 0; i < d - 1; ++i) {
        ComplexField g = vf.shift_gradient(k, a[i], Mout);
        g.project();
        total += w * g.norm_squared();
      }
  }
  return total;
}

LatticeKernel::LatticeKernel(ThetaSequence theta) : theta_(std::move(theta)) {}

double sym_get(const Sym3& a, int i, int j) {
  if (i == j) return a[i];
  int lo = std::min(i, j), hi = std::max(i, j);
  if (lo == 0) return hi == 1 ? a[3] : a[4];
  return a[5];
}

double sym_form(const Sym3& a, const Vec3& u, const Vec3& w) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s += u[i] * sym_get(a, i, j) * w[j];
  return s;
}

Sym3 LatticeKernel::compute(const Wave& l) const {
  const int d = theta_.dim();
  const int R = theta_.radius_bound();
  const int r2lo = theta_.r2_min(), r2hi = theta_.r2_max();
  const auto& tsq = theta_.shell_squares();
  const double l2 = norm2(l);
  Sym3 total{};
  auto add = [&](int k0, int k1, int k2, Sym3& acc) {
    const int r2 = k0 * k0 + k1 * k1 + k2 * k2;
    const double t2 = tsq[r2 - r2lo];
    if (t2 == 0.0) return;
    const double dx = k0 - l[0], dy = k1 - l[1], dz = k2 - l[2];
    const double dd = dx * dx + dy * dy + dz * dz;
    if (dd == 0.0) return;
    const double kl = static_cast<double>(k0) * l[0] + static_cast<double>(k1) * l[1] + static_cast<double>(k2) * l[2];
    const double s2 = 1.0 - kl * kl / (r2 * l2);
    const double w = t2 * s2 / dd;
    acc[0] += w * dx * dx;
    acc[1] += w * dy * dy;
    acc[2] += w * dz * dz;
    acc[3] += w * dx * dy;
    acc[4] += w * dx * dz;
    acc[5] += w * dy * dz;
  };
  auto isqrt_ceil = [](int v) {
    if (v <= 0) return 0;
    int r = static_cast<int>(std::sqrt(static_cast<double>(v)));
    while (r * r < v) ++r;
    while (r > 0 && (r - 1) * (r - 1) >= v) --r;
    return r;
  };
  auto isqrt_floor = [](int v) {
    int r = static_cast<int>(std::sqrt(static_cast<double>(v)));
    while (r * r > v) --r;
    while ((r + 1) * (r + 1) <= v) ++r;
    return r;
  };
  for (int k0 = -R; k0 <= R; ++k0) {
    Sym3 row{};
    for (int k1 = -R; k1 <= R; ++k1) {
      const int base = k0 * k0 + k1 * k1;
      if (base > r2hi) continue;
      if (d == 2) {
        if (base >= r2lo) add(k0, k1, 0, row);
        continue;
      }
      const int lo = isqrt_ceil(r2lo - base);
      const int hi = isqrt_floor(r2hi - base);
      for (int k2 = lo; k2 <= hi; ++k2) {
        add(k0, k1, k2, row);
        if (k2 != 0) add(k0, k1, -k2, row);
      }
    }
    for (int c = 0; c < 6; ++c) total[c] += row[c];
  }
  return total;
}

Sym3 LatticeKernel::tensor(const Wave& l) {
  const int d = theta_.dim();
  if (is_zero(l)) throw std::invalid_argument("LatticeKernel: l must be nonzero");
  // representative: ascending absolute values; l_j = s_j rep[pos_j]
  std::array<int, 3> idx{0, 1, 2};
  std::sort(idx.begin(), idx.begin() + d, [&](int a, int b) {
    int la = std::abs(l[a]), lb = std::abs(l[b]);
    return la != lb ? la < lb : a < b;
  });
  Wave rep{0, 0, 0};
  std::array<int, 3> pos{0, 1, 2};
  for (int m = 0; m < d; ++m) {
    rep[m] = std::abs(l[idx[m]]);
    pos[idx[m]] = m;
  }
  auto it = cache_.find(rep);
  if (it == cache_.end()) it = cache_.emplace(rep, compute(rep)).first;
  const Sym3& a = it->second;
  auto sign = [&](int j) { return l[j] < 0 ? -1.0 : 1.0; };
  Sym3 out{};
  for (int i = 0; i < d; ++i) out[i] = sym_get(a, pos[i], pos[i]);
  out[3] = sign(0) * sign(1) * sym_get(a, pos[0], pos[1]);
  if (d == 3) {
    out[4] = sign(0) * sign(2) * sym_get(a, pos[0], pos[2]);
    out[5] = sign(1) * sign(2) * sym_get(a, pos[1], pos[2]);
  }
  return out;
}

SpectralField corrector_closed_form(const SpectralField& v0, LatticeKernel& kernel, double kappa,
                                    const NoiseBasis& basis) {
  SpectralField v = require_divergence_free(v0, "corrector_closed_form");
  const int d = v.dim();
  if (kernel.theta().dim() != d || basis.dim() != d)
    throw std::invalid_argument("corrector_closed_form: dimension mismatch");
  const double cd = noise_constant(d);
  SpectralField out = v.zeros_like();
  for (std::size_t n = 0; n < v.size(); ++n) {
    const Wave& l = v.wave(n);
    const cplx* x = v.mode(n);
    bool nonzero = false;
    for (int c = 0; c < d; ++c) nonzero = nonzero || x[c] != cplx(0.0);
    if (!nonzero) continue;
    const double l2 = norm2(l);
    auto a = basis.vectors(l);
    Sym3 A = kernel.tensor(l);
    std::array<cplx, 2> coef{};
    for (int i = 0; i < d - 1; ++i)
      for (int c = 0; c < d; ++c) coef[i] += a[i][c] * x[c];
    const double f = 4.0 * kPi * kPi * kappa * l2;
    for (int j = 0; j < d - 1; ++j) {
      cplx s = -f * coef[j];
      for (int i = 0; i < d - 1; ++i) s += f * cd * sym_form(A, a[i], a[j]) * coef[i];
      for (int c = 0; c < d; ++c) out.at(n, c) += s * a[j][c];
    }
  }
  out.mark_divergence_free(true);
  return out;
}

SpectralField corrector_closed_form(const SpectralField& v, const ThetaSequence& theta, double kappa,
                                    const NoiseBasis& basis) {
  LatticeKernel kernel(theta);
  return corrector_closed_form(v, kernel, kappa, basis);
}

LatticeSumRecord lattice_sum(LatticeKernel& kernel, const Wave& l, int i, int j, const NoiseBasis& basis) {
  const ThetaSequence& th = kernel.theta();
  const int d = th.dim();
  if (i < 0 || j < 0 || i >= d - 1 || j >= d - 1) throw std::invalid_argument("lattice_sum: bad index");
  auto a = basis.vectors(l);
  Sym3 A = kernel.tensor(l);
  LatticeSumRecord r;
  r.dim = d;
  r.l = l;
  r.N = th.annulus_scale();
  r.gamma = th.gamma();
  r.i = i;
  r.j = j;
  r.value = sym_form(A, a[i], a[j]);
  r.target = d == 2 ? 0.375 : (i == j ? 4.0 / 15.0 : 0.0);
  r.deviation = std::abs(r.value - r.target);
  r.bound = r.N > 0 ? 4.0 * std::sqrt(static_cast<double>(norm2(l))) / r.N : 0.0;
  return r;
}

LatticeSumRecord lattice_sum(const Wave& l, int N, double gamma, int dim, int i, int j,
                             const NoiseBasis& basis) {
  LatticeKernel kernel(ThetaSequence::annulus(N, gamma, dim));
  return lattice_sum(kernel, l, i, j, basis);
}

double lattice_difference_sum(const Wave& l, const ThetaSequence& theta) {
  if (theta.dim() != 2) throw std::invalid_argument("lattice_difference_sum: 2D only");
  NoiseBasis basis(2);
  const Vec3 a = basis.vectors(l)[0];
  const int R = theta.radius_bound();
  const double l2 = norm2(l);
  double total = 0.0;
  for (int k0 = -R; k0 <= R; ++k0) {
    double row = 0.0;
    for (int k1 = -R; k1 <= R; ++k1) {
      const int r2 = k0 * k0 + k1 * k1;
      const double t2 = theta.square(r2);
      if (t2 == 0.0) continue;
      const double dx = k0 - l[0], dy = k1 - l[1];
      const double dd = dx * dx + dy * dy;
      if (dd == 0.0) continue;
      const double kl = static_cast<double>(k0) * l[0] + static_cast<double>(k1) * l[1];
      const double s2 = 1.0 - kl * kl / (r2 * l2);
      const double ad = a[0] * dx + a[1] * dy;
      const double ak = a[0] * k0 + a[1] * k1;
      row += t2 * s2 * (ad * ad / dd - ak * ak / r2);
    }
    total += row;
  }
  return total;
}

double annulus_radial_integral(int N, double gamma) {
  if (gamma == 1.0) return std::log(2.0);
  double e = 2.0 - 2.0 * gamma;
  return (std::pow(2.0 * N, e) - std::pow(static_cast<double>(N), e)) / e;
}

double continuum_integral_JN(int N, double gamma, int dim) {
  if (dim != 2) throw std::invalid_argument("continuum_integral_JN: 2D only");
  ThetaSequence th = ThetaSequence::annulus(N, gamma, 2);
  return 3.0 * kPi / (4.0 * th.lambda_sq()) * annulus_radial_integral(N, gamma);
}

double annulus_normalization_defect(int N, double gamma) {
  ThetaSequence th = ThetaSequence::annulus(N, gamma, 2);
  return std::abs(1.0 - 2.0 * kPi / th.lambda_sq() * annulus_radial_integral(N, gamma));
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ConvergenceTable convergence_table(int dim, double alpha, double gamma, double kappa,
                                   const std::vector<int>& N_list, const SpectralField& v,
                                   const NoiseBasis& basis) {
  if (v.dim() != dim) throw std::invalid_argument("convergence_table: dimension mismatch");
  ConvergenceTable table;
  const double h1 = sobolev_norm(v, 1.0);
  SpectralField target = laplacian(v);
  target *= corrector_limit_constant(dim) * kappa;
  std::vector<double> xs, ys;
  for (int N : N_list) {
    LatticeKernel kernel(ThetaSequence::annulus(N, gamma, dim));
    SpectralField s = corrector_closed_form(v, kernel, kappa, basis);
    s -= target;
    ConvergenceRow row{dim, N, gamma, alpha, h1 > 0.0 ? sobolev_norm(s, -1.0 - alpha) / h1 : 0.0};
    table.rows.push_back(row);
    if (row.deviation > 0.0) {
      xs.push_back(N);
      ys.push_back(row.deviation);
    }
  }
  table.fitted_rate = xs.size() >= 2 ? -loglog_slope(xs, ys) : 0.0;
  return table;
}

SpectralField ModeMultiplier::apply(const SpectralField& x) const {
  if (x.modes_ptr() != modes || x.components() != dim)
    throw std::invalid_argument("ModeMultiplier: layout mismatch");
  SpectralField out = x.zeros_like();
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double* m = mat(n);
    const cplx* v = x.mode(n);
    for (int r = 0; r < dim; ++r) {
      cplx s = 0.0;
      for (int c = 0; c < dim; ++c) s += m[3 * r + c] * v[c];
      out.at(n, r) = s;
    }
  }
  out.mark_divergence_free(x.divergence_free());
  return out;
}

ModeMultiplier corrector_multiplier_full(const ModeSetPtr& modes, LatticeKernel& kernel, double kappa) {
  const int d = modes->dim();
  ModeMultiplier mm{modes, d, std::vector<double>(9 * modes->size(), 0.0)};
  if (kappa == 0.0) return mm;
  const double cd = noise_constant(d);
  for (std::size_t n = 0; n < modes->size(); ++n) {
    const Wave& l = (*modes)[n];
    const double f = 4.0 * kPi * kPi * kappa * norm2(l);
    Mat P = projector(l, d);
    Sym3 A = kernel.tensor(l);
    Mat Am{};
    for (int r = 0; r < d; ++r)
      for (int s = 0; s < d; ++s) Am[3 * r + s] = sym_get(A, r, s);
    Mat PAP = matmul(P, matmul(Am, P));
    double* out = mm.mat(n);
    for (int e = 0; e < 9; ++e) out[e] = -f * P[e] + f * cd * PAP[e];
  }
  return mm;
}

ModeMultiplier corrector_multiplier_resolved(const ModeSetPtr& modes, const ThetaSequence& theta,
                                             double kappa) {
  const int d = modes->dim();
  ModeMultiplier mm{modes, d, std::vector<double>(9 * modes->size(), 0.0)};
  if (kappa == 0.0) return mm;
  const double cd = noise_constant(d);
  for (std::size_t n = 0; n < modes->size(); ++n) {
    const Wave& l = (*modes)[n];
    const double l2 = norm2(l);
    Mat P = projector(l, d);
    Mat sum{};
    for (std::size_t q = 0; q < modes->size(); ++q) {
      for (const Wave& m : {(*modes)[q], negate((*modes)[q])}) {
        const Wave k = l - m;
        if (is_zero(k)) continue;
        const int r2 = norm2(k);
        const double t2 = theta.square(r2);
        if (t2 == 0.0) continue;
        const double kl = dot(k, l);
        const double s2 = 1.0 - kl * kl / (r2 * l2);
        if (s2 == 0.0) continue;
        Mat Pm = projector(m, d);
        for (int e = 0; e < 9; ++e) sum[e] += t2 * s2 * Pm[e];
      }
    }
    Mat PSP = matmul(P, matmul(sum, P));
    double* out = mm.mat(n);
    const double f = -4.0 * kPi * kPi * cd * kappa * l2;
    for (int e = 0; e < 9; ++e) out[e] = f * PSP[e];
  }
  return mm;
}

}  // namespace tnoise
