#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "tnoise/fft.hpp"
#include "tnoise/nonlinear.hpp"
#include "tnoise/operators.hpp"
#include "tnoise/random_fields.hpp"

using namespace tnoise;

namespace {

constexpr double kPi = std::numbers::pi;
const cplx I2pi(0.0, 2.0 * kPi);

double max_diff(const SpectralField& a, const SpectralField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

SpectralField single_mode(int dim, int M, const Wave& k, std::vector<cplx> v) {
  SpectralField x(dim, static_cast<int>(v.size()), M);
  x.set(k, v);
  return x;
}

// Brute-force (V . grad f)_k = sum_{p+q=k} (2 pi i q . V_p) f_q over the full lattices.
SpectralField convolution_oracle(const SpectralField& v, const SpectralField& f) {
  SpectralField out = f.zeros_like();
  out.mark_divergence_free(false);
  const int d = f.dim();
  std::vector<Wave> vf, ff;
  for (std::size_t i = 0; i < v.size(); ++i) {
    vf.push_back(v.wave(i));
    vf.push_back(negate(v.wave(i)));
  }
  for (std::size_t i = 0; i < f.size(); ++i) {
    ff.push_back(f.wave(i));
    ff.push_back(negate(f.wave(i)));
  }
  for (std::size_t n = 0; n < out.size(); ++n) {
    const Wave& k = out.wave(n);
    for (const Wave& p : vf) {
      Wave q = k - p;
      if (!f.modes().contains(q)) continue;
      auto vp = v.get(p);
      auto fq = f.get(q);
      cplx s = 0.0;
      for (int j = 0; j < d; ++j) s += I2pi * static_cast<double>(q[j]) * vp[j];
      for (int c = 0; c < f.components(); ++c) out.at(n, c) += s * fq[c];
    }
  }
  return out;
}

}  // namespace

TEST(Lattice, CanonicalHalfOfTheCube) {
  auto ms = ModeSet::cube(2, 3);
  EXPECT_EQ(ms->size(), (7u * 7u - 1u) / 2u);
  auto ms3 = ModeSet::cube(3, 2);
  EXPECT_EQ(ms3->size(), (125u - 1u) / 2u);
  for (const Wave& k : ms3->modes()) {
    EXPECT_TRUE(is_canonical(k));
    bool mirrored = true;
    EXPECT_EQ(ms3->find(k, &mirrored), ms3->find(negate(k)));
    EXPECT_FALSE(mirrored);
  }
  EXPECT_EQ(ms3->find(Wave{0, 0, 0}), -1);
  EXPECT_EQ(ms3->find(Wave{3, 0, 0}), -1);
}

TEST(SpectralField, MirrorsAreConjugates) {
  SpectralField x(2, 2, 3);
  std::vector<cplx> v{cplx(1, 2), cplx(-3, 0.5)};
  x.set(Wave{-1, 2, 0}, v);
  auto a = x.get(Wave{-1, 2, 0});
  auto b = x.get(Wave{1, -2, 0});
  EXPECT_EQ(a[0], v[0]);
  EXPECT_EQ(b[0], std::conj(v[0]));
  EXPECT_EQ(b[1], std::conj(v[1]));
  EXPECT_THROW(x.set(Wave{0, 0, 0}, v), std::invalid_argument);
  EXPECT_THROW(x.set(Wave{4, 0, 0}, v), std::out_of_range);
}

TEST(SpectralField, GridValuesAreRealAndMatchDirectSum) {
  SpectralField x = random_field(2, 1, 3, 7);
  FftGrid grid(2, 8);
  std::vector<double> g(grid.real_size());
  grid.to_physical(x, 0, g.data());
  double max_imag = 0.0, max_err = 0.0;
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) {
      cplx s = 0.0;
      for (int k0 = -3; k0 <= 3; ++k0)
        for (int k1 = -3; k1 <= 3; ++k1) {
          Wave k{k0, k1, 0};
          if (is_zero(k)) continue;
          s += x.get(k)[0] * std::exp(I2pi * ((k0 * a + k1 * b) / 8.0));
        }
      max_imag = std::max(max_imag, std::abs(s.imag()));
      max_err = std::max(max_err, std::abs(s.real() - g[a * 8 + b]));
    }
  EXPECT_LT(max_imag, 1e-12);
  EXPECT_LT(max_err, 1e-12);
  SpectralField back(x.modes_ptr(), 1);
  grid.to_spectral(g.data(), back, 0);
  EXPECT_LT(max_diff(back, x), 1e-14);
}

TEST(Helmholtz, AnnihilatesCoefficientParallelToK) {
  SpectralField x = single_mode(2, 2, {1, 0, 0}, {1.0, 0.0});
  EXPECT_EQ(l2_norm(helmholtz_project(x)), 0.0);
}

TEST(Helmholtz, DivergenceFreeInputUnchanged) {
  SpectralField x = random_solenoidal(3, 3, 11);
  EXPECT_LT(max_diff(helmholtz_project(x), x), 1e-15);
}

TEST(Helmholtz, RandomFieldNormAndDivergence) {
  SpectralField x(2, 2, 5);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int n = 0; n < 50; ++n) x.at(n, 0) = cplx(g(rng), g(rng)), x.at(n, 1) = cplx(g(rng), g(rng));
  SpectralField p = helmholtz_project(x);
  EXPECT_LE(sobolev_norm(p, 1.0), sobolev_norm(x, 1.0));
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Wave& k = p.wave(i);
    cplx kv = static_cast<double>(k[0]) * p.at(i, 0) + static_cast<double>(k[1]) * p.at(i, 1);
    EXPECT_LT(std::abs(kv), 1e-13);
  }
  EXPECT_TRUE(p.divergence_free());
}

TEST(Helmholtz, NormNonIncreasingInEverySobolevIndex) {
  SpectralField x = random_field(3, 3, 4, 5);
  SpectralField p = helmholtz_project(x);
  for (double s : {-2.0, -0.5, 0.0, 1.0, 2.5}) EXPECT_LE(sobolev_norm(p, s), sobolev_norm(x, s) * (1 + 1e-15));
}

TEST(Helmholtz, ComplementExamples) {
  SpectralField grad(2, 2, 3);
  grad.set(Wave{1, 2, 0}, std::vector<cplx>{cplx(0, 1), cplx(0, 2)});
  grad.set(Wave{2, -1, 0}, std::vector<cplx>{cplx(3, 0), cplx(-1.5, 0)});
  EXPECT_LT(max_diff(helmholtz_complement(grad), grad), 1e-15);
  SpectralField df = random_solenoidal(2, 3, 9);
  EXPECT_LT(l2_norm(helmholtz_complement(df)), 1e-15);
  SpectralField one = single_mode(2, 2, {1, 1, 0}, {1.0, 0.0});
  auto c = helmholtz_complement(one).get(Wave{1, 1, 0});
  EXPECT_NEAR(c[0].real(), 0.5, 1e-16);
  EXPECT_NEAR(c[1].real(), 0.5, 1e-16);
}

TEST(Helmholtz, ComplementIsResidualOfProjection) {
  SpectralField x = random_field(3, 3, 3, 21);
  SpectralField sum = helmholtz_project(x) + helmholtz_complement(x);
  EXPECT_LT(max_diff(sum, x), 1e-14);
}

TEST(Helmholtz, RejectsScalarInput) {
  SpectralField s(2, 1, 2);
  EXPECT_THROW(helmholtz_project(s), std::invalid_argument);
  EXPECT_THROW(helmholtz_complement(s), std::invalid_argument);
}

TEST(Helmholtz, IdempotenceOrthogonalityPythagoras) {
  for (int d : {2, 3}) {
    SpectralField x = random_field(d, d, 4, 100 + d);
    SpectralField y = random_field(d, d, 4, 200 + d);
    SpectralField px = helmholtz_project(x);
    EXPECT_LT(max_diff(helmholtz_project(px), px), 1e-14);
    EXPECT_LT(std::abs(inner(px, helmholtz_complement(y))), 1e-13 * l2_norm(x) * l2_norm(y));
    double lhs = std::pow(l2_norm(x), 2);
    double rhs = std::pow(l2_norm(px), 2) + std::pow(l2_norm(helmholtz_complement(x)), 2);
    EXPECT_NEAR(lhs, rhs, 1e-12 * lhs);
  }
}

TEST(Sobolev, SingleShellPairWithUnitL2Norm) {
  // a real field on one pair {k, -k} with unit L2 norm
  const double c = 1.0 / std::sqrt(2.0);
  SpectralField a = single_mode(2, 3, {1, 0, 0}, {c});
  for (double s : {-1.5, 0.0, 0.7, 2.0}) EXPECT_NEAR(sobolev_norm(a, s), 1.0, 1e-15);
  SpectralField b(2, 1, 5);
  b.set(Wave{3, 4, 0}, std::vector<cplx>{c});
  EXPECT_NEAR(sobolev_norm(b, 1.0), 5.0, 1e-14);
}

TEST(Sobolev, InterpolationInequality) {
  SpectralField x = random_field(3, 3, 5, 17);
  for (double alpha : {0.5, 1.0, 2.0})
    for (double beta : {0.5, 1.0, 1.5}) {
      double rhs = std::pow(sobolev_norm(x, alpha), beta / (alpha + beta)) *
                   std::pow(sobolev_norm(x, -beta), alpha / (alpha + beta));
      EXPECT_LE(l2_norm(x), rhs * (1 + 1e-14));
    }
}

TEST(Laplacian, SingleModeAndPoincare) {
  SpectralField x = single_mode(3, 2, {0, 1, 0}, {1.0, 0.0, 0.0});
  EXPECT_NEAR(laplacian(x).get(Wave{0, 1, 0})[0].real(), -4 * kPi * kPi, 1e-13);
  for (int d : {2, 3}) {
    SpectralField r = random_field(d, d, 4, 40 + d);
    EXPECT_LE(4 * kPi * kPi * std::pow(l2_norm(r), 2), std::pow(gradient_norm(r), 2));
  }
}

TEST(Laplacian, CommutesWithHeatSemigroup) {
  SpectralField x = random_field(2, 2, 6, 3);
  EXPECT_LT(max_diff(laplacian(heat_semigroup(x, 0.01, 0.3)), heat_semigroup(laplacian(x), 0.01, 0.3)), 1e-12);
}

TEST(HeatSemigroup, IdentityAtZeroAndSingleMode) {
  SpectralField x = random_field(3, 3, 3, 5);
  EXPECT_EQ(max_diff(heat_semigroup(x, 0.0, 1.0), x), 0.0);
  SpectralField one = single_mode(2, 3, {2, 1, 0}, {1.0, 0.0});
  double t = 0.013, delta = 0.7;
  double expected = std::exp(-4 * kPi * kPi * delta * 5 * t);
  EXPECT_NEAR(heat_semigroup(one, t, delta).get(Wave{2, 1, 0})[0].real(), expected, 1e-15);
  EXPECT_THROW(heat_semigroup(x, -1.0, 1.0), std::invalid_argument);
}

TEST(HeatSemigroup, SemigroupProperty) {
  SpectralField x = random_field(2, 2, 8, 13);
  SpectralField a = heat_semigroup(heat_semigroup(x, 0.002, 0.5), 0.005, 0.5);
  SpectralField b = heat_semigroup(x, 0.007, 0.5);
  EXPECT_LT(max_diff(a, b), 1e-13);
}

TEST(HeatSemigroup, SmoothingConstantBelowAnalyticBound) {
  // sup_x x^rho exp(-8 pi^2 delta t x) = (rho / (8 pi^2 e delta t))^rho
  const double delta = 0.5, alpha = 0.5;
  for (double rho : {1.0, 2.0}) {
    double bound = std::pow(rho / (8 * kPi * kPi * std::exp(1.0) * delta), rho / 2);
    double measured = 0.0;
    for (int seed = 0; seed < 5; ++seed) {
      SpectralField x = random_field(2, 2, 16, 900 + seed);
      for (double t : {1e-4, 1e-3, 1e-2, 1e-1}) {
        double c = std::pow(t, rho / 2) * sobolev_norm(heat_semigroup(x, t, delta), alpha + rho) /
                   sobolev_norm(x, alpha);
        measured = std::max(measured, c);
      }
    }
    EXPECT_TRUE(std::isfinite(measured));
    EXPECT_LE(measured, bound * (1 + 1e-12));
    EXPECT_GT(measured, 0.05 * bound);
  }
}

TEST(HeatSemigroup, ConvolutionBoundWithDeltaScaling) {
  // Z = int_0^t e^{(t-s) delta Delta} f_s ds for piecewise-constant f, evaluated exactly per mode.
  auto ratio = [](double delta) {
    const int steps = 8;
    const double t = 0.04, h = t / steps, alpha = 0.0;
    std::vector<SpectralField> f;
    for (int j = 0; j < steps; ++j) f.push_back(random_field(2, 2, 10, 300 + j));
    SpectralField z = f[0].zeros_like();
    double fint = 0.0;
    for (int j = 0; j < steps; ++j) {
      fint += h * std::pow(sobolev_norm(f[j], alpha), 2);
      for (std::size_t n = 0; n < z.size(); ++n) {
        double lam = 4 * kPi * kPi * delta * norm2(z.wave(n));
        double w = (std::exp(-lam * (t - (j + 1) * h)) - std::exp(-lam * (t - j * h))) / lam;
        for (int c = 0; c < 2; ++c) z.at(n, c) += w * f[j].at(n, c);
      }
    }
    return delta * std::pow(sobolev_norm(z, alpha + 1), 2) / fint;
  };
  const double bound = 1.0 / (8 * kPi * kPi);
  double c1 = ratio(0.2), c2 = ratio(0.1), c3 = ratio(0.05);
  for (double c : {c1, c2, c3}) {
    EXPECT_TRUE(std::isfinite(c));
    EXPECT_LE(c, bound);
  }
  EXPECT_LT(std::max({c1, c2, c3}) / std::min({c1, c2, c3}), 4.0);
}

TEST(BiotSavart, TwoDimensionalRoundTrip) {
  SpectralField xi(2, 1, 4);
  xi.set(Wave{1, 2, 0}, std::vector<cplx>{cplx(0.7, -0.2)});
  SpectralField u = biot_savart(xi);
  auto uk = u.get(Wave{1, 2, 0});
  cplx x = cplx(0.7, -0.2);
  cplx expected0 = I2pi * (-2.0) / (-4 * kPi * kPi * 5) * x;
  cplx expected1 = I2pi * (1.0) / (-4 * kPi * kPi * 5) * x;
  EXPECT_LT(std::abs(uk[0] - expected0), 1e-16);
  EXPECT_LT(std::abs(uk[1] - expected1), 1e-16);
  SpectralField r = random_field(2, 1, 6, 8);
  EXPECT_LT(max_diff(curl(biot_savart(r)), r), 1e-14);
  EXPECT_LT(divergence_residual(biot_savart(r)), 1e-15);
  EXPECT_EQ(l2_norm(biot_savart(SpectralField(2, 1, 3))), 0.0);
}

TEST(BiotSavart, ThreeDimensionalCurlIdentity) {
  SpectralField xi = random_solenoidal(3, 4, 31);
  SpectralField u = biot_savart(xi);
  EXPECT_LT(max_diff(curl(u), xi), 1e-15);
  EXPECT_LT(divergence_residual(u), 1e-15);
  for (double s : {0.0, 0.5, 1.0})
    EXPECT_NEAR(sobolev_norm(u, s), sobolev_norm(xi, s - 1) / (2 * kPi), 1e-14);
  EXPECT_THROW(biot_savart(random_field(3, 3, 3, 4)), std::invalid_argument);
}

TEST(Advect, NoiseModeDoesNotMoveItsOwnMode) {
  // sigma_k . grad e_k = 0 since a_k . k = 0
  SpectralField v = single_mode(2, 2, {1, 2, 0}, {-2.0, 1.0});
  SpectralField f = single_mode(2, 2, {1, 2, 0}, {1.0});
  SpectralField vf = helmholtz_project(v);
  SpectralField out = advect(vf, f);
  EXPECT_LT(std::abs(out.get(Wave{2, 4, 0})[0]), 1e-16);
  EXPECT_LT(l2_norm(out), 1e-15);
}

TEST(Advect, SkewSymmetry) {
  for (int d : {2, 3}) {
    SpectralField v = random_solenoidal(d, 4, 50 + d);
    SpectralField f = random_field(d, d, 4, 60 + d);
    SpectralField s = random_field(d, 1, 4, 70 + d);
    EXPECT_LT(std::abs(inner(f, advect(v, f))), 1e-10 * std::pow(l2_norm(f), 2) * l2_norm(v));
    EXPECT_LT(std::abs(inner(s, advect(v, s))), 1e-10 * std::pow(l2_norm(s), 2) * l2_norm(v));
  }
}

TEST(Advect, MatchesConvolutionOracle) {
  for (int d : {2, 3}) {
    SpectralField v = random_solenoidal(d, 3, 80 + d);
    SpectralField f = random_field(d, d, 3, 90 + d);
    SpectralField fast = advect(v, f);
    SpectralField slow = convolution_oracle(v, f);
    EXPECT_LT(max_diff(fast, slow), 1e-13 * std::max(1.0, max_abs_coefficient(slow)));
  }
}

TEST(Advect, RejectsCompressibleVelocity) {
  SpectralField v = random_field(2, 2, 3, 1);
  EXPECT_THROW(advect(v, v), std::invalid_argument);
}

TEST(LieDerivative, ZeroAndEnergyOrthogonality) {
  EXPECT_EQ(l2_norm(lie_derivative(SpectralField(3, 3, 3))), 0.0);
  SpectralField xi = random_solenoidal(3, 4, 12, 0.0, 5.0);
  SpectralField u = biot_savart(xi);
  EXPECT_LT(std::abs(inner(xi, advect(u, xi))), 1e-10 * std::pow(l2_norm(xi), 2) * l2_norm(u));
  EXPECT_THROW(lie_derivative(random_solenoidal(2, 3, 1)), std::invalid_argument);
}

TEST(LieDerivative, MatchesConvolutionOracleAndCurlForm) {
  SpectralField xi = random_solenoidal(3, 3, 44);
  SpectralField u = biot_savart(xi);
  SpectralField oracle = convolution_oracle(u, xi) - convolution_oracle(xi, u);
  SpectralField fast = lie_derivative(xi);
  const double scale = std::max(1.0, max_abs_coefficient(oracle));
  EXPECT_LT(max_diff(fast, oracle), 1e-12 * scale);
  ProductEngine eng(3, ProductEngine::grid_for(3, 3, 3));
  EXPECT_LT(max_diff(eng.lie_derivative(xi), oracle), 1e-12 * scale);
  EXPECT_LT(divergence_residual(fast), 1e-10);
}

TEST(NonlinearTerm, ConservesEnergy) {
  SpectralField u = random_solenoidal(2, 8, 3, 0.0, 2.0);
  SpectralField b = nonlinear_term(u);
  EXPECT_LT(std::abs(inner(u, b)), 1e-10 * l2_norm(u) * l2_norm(b));
  EXPECT_TRUE(b.divergence_free());
}

TEST(Resample, DropsOutsideModes) {
  SpectralField x = random_field(2, 2, 5, 2);
  SpectralField y = resample(x, 3);
  EXPECT_EQ(y.max_mode(), 3);
  EXPECT_EQ(y.get(Wave{2, -3, 0})[1], x.get(Wave{2, -3, 0})[1]);
  SpectralField z = resample(y, 5);
  EXPECT_EQ(z.get(Wave{4, 0, 0})[0], cplx(0.0));
}
