#include "tnoise/spectral_field.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tnoise {

SpectralField::SpectralField(int dim, int components, int max_mode)
    : SpectralField(ModeSet::cube(dim, max_mode), components) {}

SpectralField::SpectralField(ModeSetPtr modes, int components)
    : modes_(std::move(modes)), components_(components) {
  if (!modes_) throw std::invalid_argument("SpectralField: null mode set");
  if (components != 1 && components != modes_->dim())
    throw std::invalid_argument("SpectralField: components must be 1 or d");
  data_.assign(modes_->size() * components_, cplx(0.0, 0.0));
}

std::array<cplx, 3> SpectralField::get(const Wave& k) const {
  std::array<cplx, 3> out{};
  bool mirrored = false;
  auto idx = modes_->find(k, &mirrored);
  if (idx < 0) return out;
  for (int c = 0; c < components_; ++c) {
    cplx v = at(static_cast<std::size_t>(idx), c);
    out[c] = mirrored ? std::conj(v) : v;
  }
  return out;
}

void SpectralField::set(const Wave& k, std::span<const cplx> values) {
  if (is_zero(k)) throw std::invalid_argument("SpectralField::set: zero mode is excluded");
  if (static_cast<int>(values.size()) != components_)
    throw std::invalid_argument("SpectralField::set: wrong number of components");
  bool mirrored = false;
  auto idx = modes_->find(k, &mirrored);
  if (idx < 0) throw std::out_of_range("SpectralField::set: wave vector outside the cube");
  for (int c = 0; c < components_; ++c)
    at(static_cast<std::size_t>(idx), c) = mirrored ? std::conj(values[c]) : values[c];
  div_free_ = false;
}

SpectralField& SpectralField::operator+=(const SpectralField& o) {
  axpy(1.0, o);
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
  axpy(-1.0, o);
  return *this;
}

SpectralField& SpectralField::operator*=(double a) {
  for (auto& v : data_) v *= a;
  return *this;
}

void SpectralField::axpy(double a, const SpectralField& o) {
  if (!same_layout(o)) throw std::invalid_argument("SpectralField: layout mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += a * o.data_[i];
  div_free_ = div_free_ && o.div_free_;
}

void SpectralField::set_zero() {
  for (auto& v : data_) v = 0.0;
}

SpectralField SpectralField::zeros_like() const {
  SpectralField z(modes_, components_);
  z.div_free_ = div_free_;
  return z;
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(double s, SpectralField a) { return a *= s; }

double inner(const SpectralField& x, const SpectralField& y) {
  if (!x.same_layout(y)) throw std::invalid_argument("inner: layout mismatch");
  double s = 0.0;
  const auto& a = x.data();
  const auto& b = y.data();
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
  return 2.0 * s;
}

double l2_norm(const SpectralField& x) { return sobolev_norm(x, 0.0); }

double sobolev_norm(const SpectralField& x, double s) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double m2 = 0.0;
    for (int c = 0; c < x.components(); ++c) m2 += std::norm(x.at(i, c));
    if (m2 == 0.0) continue;
    double k2 = norm2(x.wave(i));
    acc += (s == 0.0 ? 1.0 : std::pow(k2, s)) * m2;
  }
  return std::sqrt(2.0 * acc);
}

double gradient_norm(const SpectralField& x) { return 2.0 * std::numbers::pi * sobolev_norm(x, 1.0); }

double max_abs_coefficient(const SpectralField& x) {
  double m = 0.0;
  for (const auto& v : x.data()) m = std::max(m, std::abs(v));
  return m;
}

SpectralField resample(const SpectralField& x, int max_mode) {
  SpectralField out(ModeSet::cube(x.dim(), max_mode), x.components());
  const auto& target = out.modes();
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto j = target.find(x.wave(i));
    if (j < 0) continue;
    for (int c = 0; c < x.components(); ++c) out.at(static_cast<std::size_t>(j), c) = x.at(i, c);
  }
  out.mark_divergence_free(x.divergence_free());
  return out;
}

}  // namespace tnoise
