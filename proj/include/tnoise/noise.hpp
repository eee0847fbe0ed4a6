#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "tnoise/spectral_field.hpp"

namespace tnoise {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

// C_d = d / (d - 1)
inline double noise_constant(int dim) { return static_cast<double>(dim) / (dim - 1); }

// Orthonormal basis a_{k,i} of the plane orthogonal to k, identical for k and -k.
class NoiseBasis {
 public:
  enum class Variant { standard, rotated };

  explicit NoiseBasis(int dim, Variant variant = Variant::standard);

  int dim() const { return dim_; }
  int count() const { return dim_ - 1; }
  Variant variant() const { return variant_; }
  std::array<Vec3, 2> vectors(const Wave& k) const;

 private:
  int dim_;
  Variant variant_;
};

NoiseBasis build_basis(int dim, int max_mode);

// Radially symmetric coefficient family over Z^d \ {0}, stored as theta^2 per shell |k|^2.
class ThetaSequence {
 public:
  ThetaSequence() = default;
  // theta_sq[r2 - r2_min] is the unnormalized theta^2 on the shell |k|^2 = r2.
  ThetaSequence(int dim, int r2_min, std::vector<double> theta_sq, bool normalize = true);

  // theta_k = |k|^{-gamma} / Lambda_N on N <= |k| <= 2N.
  static ThetaSequence annulus(int N, double gamma, int dim);
  // Arbitrary shell weights (theta^2 up to normalization).
  static ThetaSequence from_shells(int dim, const std::map<int, double>& weights);

  bool empty() const { return theta_sq_.empty(); }
  int dim() const { return dim_; }
  int r2_min() const { return r2_min_; }
  int r2_max() const { return r2_min_ + static_cast<int>(theta_sq_.size()) - 1; }
  int radius_bound() const;
  double square(int r2) const {
    int i = r2 - r2_min_;
    return (i < 0 || i >= static_cast<int>(theta_sq_.size())) ? 0.0 : theta_sq_[i];
  }
  double value(const Wave& k) const;
  const std::vector<double>& shell_squares() const { return theta_sq_; }

  // Lattice point count per shell, index r2 - r2_min.
  const std::vector<long long>& shell_counts() const { return counts_; }
  double norm_squared() const;  // sum over the full support
  double sup() const;
  long long support_size() const;
  // Normalization constant Lambda_N^2 of the annulus family (0 otherwise).
  double lambda_sq() const { return lambda_sq_; }
  int annulus_scale() const { return N_; }
  double gamma() const { return gamma_; }

  // Canonical support points in lexicographic order.
  std::vector<Wave> canonical_support() const;

 private:
  int dim_ = 0;
  int r2_min_ = 0;
  std::vector<double> theta_sq_;
  std::vector<long long> counts_;
  double lambda_sq_ = 0.0;
  int N_ = 0;
  double gamma_ = 0.0;
};

// Number of lattice points of Z^d on each shell |k|^2 = r2 for r2 <= r2_max.
std::vector<long long> lattice_shell_counts(int dim, int r2_max);

// 2 C_d kappa sum_{k,i} theta_k^2 a_{k,i} a_{k,i}^T
Mat3 covariance_at_origin(const ThetaSequence& theta, const NoiseBasis& basis, double kappa);

// Increments dW^{k,i} on the canonical support of theta.
struct IncrementTable {
  int dim = 0;
  int per_mode = 0;
  std::shared_ptr<const std::vector<Wave>> modes;
  std::vector<cplx> values;

  cplx at(std::size_t idx, int i) const { return values[idx * per_mode + i]; }
  // Any k; mirrors are conjugates, zero outside the support.
  cplx get(const Wave& k, int i) const;
};

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Complex Brownian increments with the conjugate pairing dW^{-k,i} = conj(dW^{k,i})
// and E|dW|^2 = 2 dt.
class BrownianDriver {
 public:
  BrownianDriver(int dim, std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  const IncrementTable& sample_increments(double dt, const ThetaSequence& theta);
  const IncrementTable& last() const { return table_; }

  std::string save_state() const;
  void load_state(const std::string& s);

 private:
  int dim_;
  std::uint64_t seed_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
  IncrementTable table_;
  int cached_r2_min_ = -1;
  std::vector<double> cached_shells_;
};

}  // namespace tnoise
