#pragma once

#include <complex>
#include <span>
#include <vector>

#include "tnoise/lattice.hpp"

namespace tnoise {

using cplx = std::complex<double>;

// Zero-mean real field on the torus T^d, stored by its Fourier coefficients on
// the canonical half of the cube |k_j| <= M. Mirror coefficients are derived by
// conjugation, so the reality constraint holds by construction.
class SpectralField {
 public:
  SpectralField() = default;
  SpectralField(int dim, int components, int max_mode);
  SpectralField(ModeSetPtr modes, int components);

  int dim() const { return modes_ ? modes_->dim() : 0; }
  int components() const { return components_; }
  int max_mode() const { return modes_ ? modes_->max_mode() : 0; }
  std::size_t size() const { return modes_ ? modes_->size() : 0; }
  bool empty() const { return !modes_; }
  const ModeSet& modes() const { return *modes_; }
  const ModeSetPtr& modes_ptr() const { return modes_; }
  const Wave& wave(std::size_t i) const { return (*modes_)[i]; }

  cplx& at(std::size_t i, int c) { return data_[i * components_ + c]; }
  const cplx& at(std::size_t i, int c) const { return data_[i * components_ + c]; }
  cplx* mode(std::size_t i) { return data_.data() + i * components_; }
  const cplx* mode(std::size_t i) const { return data_.data() + i * components_; }
  std::vector<cplx>& data() { return data_; }
  const std::vector<cplx>& data() const { return data_; }

  // Coefficient of an arbitrary wave vector (conjugated for mirrors, zero
  // outside the cube or at k = 0).
  std::array<cplx, 3> get(const Wave& k) const;
  // Writes the coefficient of k; the partner -k follows by conjugation.
  void set(const Wave& k, std::span<const cplx> values);

  bool divergence_free() const { return div_free_; }
  void mark_divergence_free(bool v) { div_free_ = v; }

  bool same_layout(const SpectralField& o) const {
    return modes_ == o.modes_ && components_ == o.components_;
  }

  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator-=(const SpectralField& o);
  SpectralField& operator*=(double a);
  // this += a * o
  void axpy(double a, const SpectralField& o);
  void set_zero();
  SpectralField zeros_like() const;

 private:
  ModeSetPtr modes_;
  int components_ = 0;
  bool div_free_ = false;
  std::vector<cplx> data_;
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(double s, SpectralField a);

// Real L2 inner product over the full lattice, <X, Y> = sum_k X_k . conj(Y_k).
double inner(const SpectralField& x, const SpectralField& y);
double l2_norm(const SpectralField& x);
// (sum_k |k|^{2s} |X_k|^2)^{1/2}
double sobolev_norm(const SpectralField& x, double s);
// ||grad X||_{L2} = 2 pi ||X||_{H^1}
double gradient_norm(const SpectralField& x);
double max_abs_coefficient(const SpectralField& x);

// Copy onto another cube, dropping modes outside the target.
SpectralField resample(const SpectralField& x, int max_mode);

}  // namespace tnoise
