#include "tnoise/operators.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tnoise {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_vector(const SpectralField& x, const char* who) {
  if (x.empty() || x.components() != x.dim())
    throw std::invalid_argument(std::string(who) + ": expected a d-component vector field");
}

}  // namespace

SpectralField helmholtz_project(const SpectralField& x) {
  require_vector(x, "helmholtz_project");
  SpectralField out = x;
  const int d = x.dim();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Wave& k = x.wave(i);
    cplx* v = out.mode(i);
    cplx kv = 0.0;
    for (int c = 0; c < d; ++c) kv += static_cast<double>(k[c]) * v[c];
    kv /= static_cast<double>(norm2(k));
    for (int c = 0; c < d; ++c) v[c] -= kv * static_cast<double>(k[c]);
  }
  out.mark_divergence_free(true);
  return out;
}

SpectralField helmholtz_complement(const SpectralField& x) {
  require_vector(x, "helmholtz_complement");
  SpectralField out = x.zeros_like();
  out.mark_divergence_free(false);
  const int d = x.dim();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Wave& k = x.wave(i);
    const cplx* v = x.mode(i);
    cplx kv = 0.0;
    for (int c = 0; c < d; ++c) kv += static_cast<double>(k[c]) * v[c];
    kv /= static_cast<double>(norm2(k));
    for (int c = 0; c < d; ++c) out.at(i, c) = kv * static_cast<double>(k[c]);
  }
  return out;
}

double divergence_residual(const SpectralField& x) {
  double n = l2_norm(x);
  if (n == 0.0) return 0.0;
  return l2_norm(helmholtz_complement(x)) / n;
}

SpectralField require_divergence_free(const SpectralField& x, const char* who) {
  require_vector(x, who);
  if (x.divergence_free()) return x;
  double r = divergence_residual(x);
  if (r > kDivergenceTolerance)
    throw std::invalid_argument(std::string(who) + ": input is not divergence-free (residual " +
                                std::to_string(r) + ")");
  return helmholtz_project(x);
}

SpectralField laplacian(const SpectralField& x) {
  SpectralField out = x;
  const double f = -kTwoPi * kTwoPi;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double s = f * norm2(x.wave(i));
    for (int c = 0; c < x.components(); ++c) out.at(i, c) *= s;
  }
  return out;
}

SpectralField heat_semigroup(const SpectralField& x, double t, double delta) {
  if (t < 0.0) throw std::invalid_argument("heat_semigroup: negative time");
  if (delta < 0.0) throw std::invalid_argument("heat_semigroup: negative diffusivity");
  SpectralField out = x;
  if (t == 0.0) return out;
  const double f = -kTwoPi * kTwoPi * delta * t;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double s = std::exp(f * norm2(x.wave(i)));
    for (int c = 0; c < x.components(); ++c) out.at(i, c) *= s;
  }
  return out;
}

SpectralField curl(const SpectralField& x) {
  require_vector(x, "curl");
  const cplx ii(0.0, kTwoPi);
  if (x.dim() == 3) {
    SpectralField out = x.zeros_like();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const Wave& k = x.wave(i);
      const cplx* v = x.mode(i);
      out.at(i, 0) = ii * (static_cast<double>(k[1]) * v[2] - static_cast<double>(k[2]) * v[1]);
      out.at(i, 1) = ii * (static_cast<double>(k[2]) * v[0] - static_cast<double>(k[0]) * v[2]);
      out.at(i, 2) = ii * (static_cast<double>(k[0]) * v[1] - static_cast<double>(k[1]) * v[0]);
    }
    out.mark_divergence_free(true);
    return out;
  }
  SpectralField out(x.modes_ptr(), 1);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Wave& k = x.wave(i);
    const cplx* v = x.mode(i);
    out.at(i, 0) = ii * (static_cast<double>(k[0]) * v[1] - static_cast<double>(k[1]) * v[0]);
  }
  return out;
}

SpectralField perp_gradient(const SpectralField& psi) {
  if (psi.dim() != 2 || psi.components() != 1)
    throw std::invalid_argument("perp_gradient: expected a 2D scalar field");
  SpectralField out(psi.modes_ptr(), 2);
  const cplx ii(0.0, kTwoPi);
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const Wave& k = psi.wave(i);
    cplx p = psi.at(i, 0);
    out.at(i, 0) = -ii * static_cast<double>(k[1]) * p;
    out.at(i, 1) = ii * static_cast<double>(k[0]) * p;
  }
  out.mark_divergence_free(true);
  return out;
}

SpectralField biot_savart(const SpectralField& xi) {
  if (xi.empty()) throw std::invalid_argument("biot_savart: empty field");
  const double f = 1.0 / (kTwoPi * kTwoPi);
  if (xi.dim() == 2) {
    if (xi.components() != 1) throw std::invalid_argument("biot_savart: 2D input must be a scalar vorticity");
    // psi = Delta^{-1} xi, u = grad^perp psi
    SpectralField psi = xi;
    for (std::size_t i = 0; i < xi.size(); ++i) psi.at(i, 0) *= -f / norm2(xi.wave(i));
    return perp_gradient(psi);
  }
  SpectralField w = require_divergence_free(xi, "biot_savart");
  // u = curl (-Delta)^{-1} xi
  for (std::size_t i = 0; i < w.size(); ++i) {
    double s = f / norm2(w.wave(i));
    for (int c = 0; c < 3; ++c) w.at(i, c) *= s;
  }
  return curl(w);
}

}  // namespace tnoise
