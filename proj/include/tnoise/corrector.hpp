#pragma once

#include <map>
#include <string>
#include <vector>

#include "tnoise/noise.hpp"
#include "tnoise/spectral_field.hpp"

namespace tnoise {

// Complex vector field on a cube without the reality constraint; holds the
// intermediate terms sigma_{k,i} . grad v, which are not real fields.
class ComplexField {
 public:
  ComplexField(int dim, int components, int max_mode);
  static ComplexField from_real(const SpectralField& x, int max_mode);

  int dim() const { return dim_; }
  int components() const { return m_; }
  int max_mode() const { return M_; }
  bool contains(const Wave& k) const;
  cplx* at(const Wave& k);
  const cplx* at(const Wave& k) const;
  template <class F>
  void for_each_nonzero(F f) const;

  // sigma . grad with sigma = a e_k: mode m goes to m + k with factor 2 pi i (a . m).
  ComplexField shift_gradient(const Wave& k, const Vec3& a, int out_max_mode) const;
  void project();
  double norm_squared() const;

 private:
  std::size_t index(const Wave& k) const;
  int dim_, m_, M_;
  std::vector<cplx> data_;
};

template <class F>
void ComplexField::for_each_nonzero(F f) const {
  const int M = M_;
  const int lo2 = dim_ == 3 ? -M : 0, hi2 = dim_ == 3 ? M : 0;
  std::size_t p = 0;
  for (int a = -M; a <= M; ++a)
    for (int b = -M; b <= M; ++b)
      for (int c = lo2; c <= hi2; ++c, p += m_) {
        bool nz = false;
        for (int j = 0; j < m_; ++j) nz = nz || data_[p + j] != cplx(0.0);
        if (nz) f(Wave{a, b, c}, &data_[p]);
      }
}

// C_d kappa sum_{k,i} theta_k^2 Pi[sigma_{k,i} . grad Pi(sigma_{-k,i} . grad v)], term by term.
SpectralField corrector_compositional(const SpectralField& v, const ThetaSequence& theta, double kappa,
                                      const NoiseBasis& basis);
// Same sum with the inner projection removed.
SpectralField corrector_no_projection(const SpectralField& v, const ThetaSequence& theta, double kappa,
                                      const NoiseBasis& basis);
// C_d kappa sum_{k,i} theta_k^2 ||Pi(sigma_{k,i} . grad v)||^2
double noise_dissipation(const SpectralField& v, const ThetaSequence& theta, double kappa,
                         const NoiseBasis& basis);

using Sym3 = std::array<double, 6>;  // xx, yy, zz, xy, xz, yz

// A(l) = sum_{k != l} theta_k^2 sin^2(k,l) (k-l)(k-l)^T / |k-l|^2, cached per
// orbit of the signed permutation group (theta depends on |k| only).
class LatticeKernel {
 public:
  explicit LatticeKernel(ThetaSequence theta);
  const ThetaSequence& theta() const { return theta_; }
  Sym3 tensor(const Wave& l);
  std::size_t cached_classes() const { return cache_.size(); }

 private:
  Sym3 compute(const Wave& l) const;
  ThetaSequence theta_;
  std::map<Wave, Sym3> cache_;
};

double sym_get(const Sym3& a, int i, int j);
// u^T A w
double sym_form(const Sym3& a, const Vec3& u, const Vec3& w);

// Closed form in the basis sigma_{l,i}: diagonal in l (block per l in 3D).
SpectralField corrector_closed_form(const SpectralField& v, LatticeKernel& kernel, double kappa,
                                    const NoiseBasis& basis);
SpectralField corrector_closed_form(const SpectralField& v, const ThetaSequence& theta, double kappa,
                                    const NoiseBasis& basis);

struct LatticeSumRecord {
  int dim = 0;
  Wave l{};
  int N = 0;
  double gamma = 0.0;
  int i = 0, j = 0;
  double value = 0.0;
  double target = 0.0;
  double deviation = 0.0;  // |value - target|
  double bound = 0.0;      // 4 |l| / N
};

// sum_k (theta^N_k)^2 sin^2(k,l) (a_{l,i}.(k-l)) (a_{l,j}.(k-l)) / |k-l|^2
LatticeSumRecord lattice_sum(const Wave& l, int N, double gamma, int dim, int i, int j,
                             const NoiseBasis& basis);
LatticeSumRecord lattice_sum(LatticeKernel& kernel, const Wave& l, int i, int j, const NoiseBasis& basis);

// 2D: sum_k theta^2 sin^2 [(a_l.(k-l))^2/|k-l|^2 - (a_l.k)^2/|k|^2]
double lattice_difference_sum(const Wave& l, const ThetaSequence& theta);

// int_N^{2N} r^{1 - 2 gamma} dr
double annulus_radial_integral(int N, double gamma);
// (3 pi / (4 Lambda_N^2)) int_N^{2N} r^{1-2gamma} dr, 2D
double continuum_integral_JN(int N, double gamma, int dim);
// |1 - (2 pi / Lambda_N^2) int_N^{2N} r^{1-2gamma} dr|, 2D
double annulus_normalization_defect(int N, double gamma);

// Limit constant of the corrector: 1/4 in 2D, 3/5 in 3D.
inline double corrector_limit_constant(int dim) { return dim == 2 ? 0.25 : 0.6; }

struct ConvergenceRow {
  int dim = 0;
  int N = 0;
  double gamma = 0.0;
  double alpha = 0.0;
  double deviation = 0.0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  double fitted_rate = 0.0;  // minus the least-squares slope of log deviation vs log N
};

ConvergenceTable convergence_table(int dim, double alpha, double gamma, double kappa,
                                   const std::vector<int>& N_list, const SpectralField& v,
                                   const NoiseBasis& basis);

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Symmetric d x d matrix per canonical mode, acting on vector coefficients.
struct ModeMultiplier {
  ModeSetPtr modes;
  int dim = 0;
  std::vector<double> mats;  // row-major 3x3 per mode

  const double* mat(std::size_t i) const { return mats.data() + 9 * i; }
  double* mat(std::size_t i) { return mats.data() + 9 * i; }
  SpectralField apply(const SpectralField& x) const;
};

// The corrector as a multiplier on divergence-free fields of the cube, summing
// over every k in the support of theta.
ModeMultiplier corrector_multiplier_full(const ModeSetPtr& modes, LatticeKernel& kernel, double kappa);
// Only the terms whose intermediate mode l - k stays in the cube; this is the
// corrector of the Galerkin-truncated Stratonovich system.
ModeMultiplier corrector_multiplier_resolved(const ModeSetPtr& modes, const ThetaSequence& theta,
                                             double kappa);

}  // namespace tnoise
