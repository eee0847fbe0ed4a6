#include "tnoise/nonlinear.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "tnoise/operators.hpp"

namespace tnoise {

double GridField::sup_norm() const {
  if (values.empty()) return 0.0;
  double m = 0.0;
  const std::size_t n = values[0].size();
  for (std::size_t p = 0; p < n; ++p) {
    double s = 0.0;
    for (const auto& comp : values) s += comp[p] * comp[p];
    m = std::max(m, s);
  }
  return std::sqrt(m);
}

ProductEngine::ProductEngine(int dim, int n) : grid_(dim, n) {
  acc_.resize(grid_.real_size());
  tmp_.resize(grid_.real_size());
}

void ProductEngine::to_grid(const SpectralField& x, GridField& out) {
  out.components = x.components();
  out.values.resize(x.components());
  for (int c = 0; c < x.components(); ++c) {
    out.values[c].resize(grid_.real_size());
    grid_.to_physical(x, c, out.values[c].data());
  }
}

SpectralField ProductEngine::transport(const GridField& v, const SpectralField& f,
                                       const ModeSetPtr& out_modes) {
  const int d = dim();
  if (v.components != d) throw std::invalid_argument("transport: velocity must have d components");
  SpectralField out(out_modes, f.components());
  const std::size_t np = grid_.real_size();
  for (int c = 0; c < f.components(); ++c) {
    std::fill(acc_.begin(), acc_.end(), 0.0);
    for (int j = 0; j < d; ++j) {
      grid_.to_physical(f, c, tmp_.data(), j);
      const double* vj = v.values[j].data();
      for (std::size_t p = 0; p < np; ++p) acc_[p] += vj[p] * tmp_[p];
    }
    grid_.to_spectral(acc_.data(), out, c);
  }
  return out;
}

SpectralField ProductEngine::transport(const SpectralField& v, const SpectralField& f,
                                       const ModeSetPtr& out_modes) {
  GridField vg;
  to_grid(v, vg);
  return transport(vg, f, out_modes);
}

SpectralField ProductEngine::cross(const GridField& a, const GridField& b, const ModeSetPtr& out_modes) {
  if (dim() != 3 || a.components != 3 || b.components != 3)
    throw std::invalid_argument("cross: 3D vector fields required");
  SpectralField out(out_modes, 3);
  const std::size_t np = grid_.real_size();
  for (int c = 0; c < 3; ++c) {
    const int p1 = (c + 1) % 3;
    const int p2 = (c + 2) % 3;
    const double* a1 = a.values[p1].data();
    const double* a2 = a.values[p2].data();
    const double* b1 = b.values[p1].data();
    const double* b2 = b.values[p2].data();
    for (std::size_t p = 0; p < np; ++p) acc_[p] = a1[p] * b2[p] - a2[p] * b1[p];
    grid_.to_spectral(acc_.data(), out, c);
  }
  return out;
}

SpectralField ProductEngine::lie_derivative(const SpectralField& xi, GridField* u_grid) {
  if (xi.dim() != 3) throw std::invalid_argument("lie_derivative: 3D only");
  SpectralField u = biot_savart(xi);
  GridField ug, xg;
  GridField& ur = u_grid ? *u_grid : ug;
  to_grid(u, ur);
  to_grid(xi, xg);
  SpectralField c = cross(xg, ur, xi.modes_ptr());
  return curl(c);
}

SpectralField ProductEngine::navier_stokes_term(const SpectralField& u, GridField* u_grid) {
  GridField ug;
  GridField& ur = u_grid ? *u_grid : ug;
  to_grid(u, ur);
  return helmholtz_project(transport(ur, u, u.modes_ptr()));
}

namespace {

SpectralField product(const SpectralField& v, const SpectralField& f) {
  if (v.dim() != f.dim()) throw std::invalid_argument("advect: dimension mismatch");
  ProductEngine eng(f.dim(), ProductEngine::grid_for(v.max_mode(), f.max_mode(), f.max_mode()));
  return eng.transport(v, f, f.modes_ptr());
}

}  // namespace

SpectralField advect(const SpectralField& v, const SpectralField& f) {
  SpectralField w = require_divergence_free(v, "advect");
  return product(w, f);
}

SpectralField directional_derivative(const SpectralField& v, const SpectralField& f) {
  if (v.components() != v.dim()) throw std::invalid_argument("directional_derivative: vector field required");
  return product(v, f);
}

SpectralField lie_derivative(const SpectralField& xi) {
  if (xi.dim() != 3) throw std::invalid_argument("lie_derivative: 3D only");
  SpectralField w = require_divergence_free(xi, "lie_derivative");
  SpectralField u = biot_savart(w);
  SpectralField out = advect(u, w);
  out -= directional_derivative(w, u);
  return out;
}

SpectralField nonlinear_term(const SpectralField& u) {
  return helmholtz_project(advect(u, u));
}

}  // namespace tnoise
