#pragma once

#include <vector>

#include "tnoise/fft.hpp"
#include "tnoise/spectral_field.hpp"

namespace tnoise {

// Grid values of every component of a field.
struct GridField {
  int components = 0;
  std::vector<std::vector<double>> values;
  double sup_norm() const;  // max over points of the Euclidean norm
};

// Pseudospectral products on one grid. Products of modes up to A and B
// truncated to C are alias free when n > A + B + C.
class ProductEngine {
 public:
  ProductEngine(int dim, int n);

  int dim() const { return grid_.dim(); }
  int n() const { return grid_.n(); }
  FftGrid& grid() { return grid_; }

  // Smallest good grid size resolving a product of modes a and b onto c.
  static int grid_for(int a, int b, int c) { return fft_good_size(a + b + c + 1); }

  void to_grid(const SpectralField& x, GridField& out);
  // P_out (V . grad f) with V given on the grid.
  SpectralField transport(const GridField& v, const SpectralField& f, const ModeSetPtr& out_modes);
  SpectralField transport(const SpectralField& v, const SpectralField& f, const ModeSetPtr& out_modes);
  // P_out (a x b), 3D only.
  SpectralField cross(const GridField& a, const GridField& b, const ModeSetPtr& out_modes);

  // L_u xi = curl(xi x u) with u = biot_savart(xi), on the cube of xi.
  SpectralField lie_derivative(const SpectralField& xi, GridField* u_grid = nullptr);
  // Pi (u . grad u) on the cube of u (2D velocity form).
  SpectralField navier_stokes_term(const SpectralField& u, GridField* u_grid = nullptr);

 private:
  FftGrid grid_;
  std::vector<double> acc_;
  std::vector<double> tmp_;
};

// V . grad f on the cube of f; V must be divergence-free.
SpectralField advect(const SpectralField& v, const SpectralField& f);
// V . grad f without the divergence check (used for the stretching term xi . grad u).
SpectralField directional_derivative(const SpectralField& v, const SpectralField& f);
// u . grad xi - xi . grad u with u = biot_savart(xi); 3D only.
SpectralField lie_derivative(const SpectralField& xi);
// b(u) = Pi (u . grad u).
SpectralField nonlinear_term(const SpectralField& u);

}  // namespace tnoise
