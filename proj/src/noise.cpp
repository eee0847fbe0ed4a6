#include "tnoise/noise.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tnoise {

namespace {

Vec3 cross3(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double length(const Vec3& a) { return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]); }

bool lex_less(const Wave& a, const Wave& b) { return a < b; }

}  // namespace

NoiseBasis::NoiseBasis(int dim, Variant variant) : dim_(dim), variant_(variant) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("NoiseBasis: dimension must be 2 or 3");
}

std::array<Vec3, 2> NoiseBasis::vectors(const Wave& kin) const {
  if (is_zero(kin)) throw std::invalid_argument("NoiseBasis: zero wave vector");
  const Wave k = canonical(kin);
  std::array<Vec3, 2> a{};
  if (dim_ == 2) {
    double n = std::sqrt(static_cast<double>(norm2(k)));
    a[0] = {-k[1] / n, k[0] / n, 0.0};
    if (variant_ == Variant::rotated) a[0] = {-a[0][0], -a[0][1], 0.0};
    return a;
  }
  Vec3 kv{static_cast<double>(k[0]), static_cast<double>(k[1]), static_cast<double>(k[2])};
  Vec3 r{0.0, 0.0, 1.0};
  if (k[0] == 0 && k[1] == 0) r = {1.0, 0.0, 0.0};
  Vec3 a1 = cross3(kv, r);
  double l1 = length(a1);
  for (double& c : a1) c /= l1;
  Vec3 a2 = cross3(kv, a1);
  double kn = length(kv);
  for (double& c : a2) c /= kn;
  if (variant_ == Variant::rotated) {
    double phi = 0.3 + 0.1 * (norm2(k) % 7) + 0.05 * k[0];
    double cs = std::cos(phi), sn = std::sin(phi);
    Vec3 b1, b2;
    for (int j = 0; j < 3; ++j) {
      b1[j] = cs * a1[j] + sn * a2[j];
      b2[j] = -sn * a1[j] + cs * a2[j];
    }
    a1 = b1;
    a2 = b2;
  }
  a[0] = a1;
  a[1] = a2;
  return a;
}

NoiseBasis build_basis(int dim, int max_mode) {
  if (max_mode < 1) throw std::invalid_argument("build_basis: max_mode must be >= 1");
  return NoiseBasis(dim);
}

std::vector<long long> lattice_shell_counts(int dim, int r2_max) {
  std::vector<long long> c1(r2_max + 1, 0);
  for (int a = 0; a * a <= r2_max; ++a) c1[a * a] += (a == 0 ? 1 : 2);
  std::vector<long long> c2(r2_max + 1, 0);
  for (int m = 0; m <= r2_max; ++m) {
    if (!c1[m]) continue;
    for (int b = 0; m + b * b <= r2_max; ++b) c2[m + b * b] += c1[m] * (b == 0 ? 1 : 2);
  }
  if (dim == 2) return c2;
  std::vector<long long> c3(r2_max + 1, 0);
  for (int m = 0; m <= r2_max; ++m) {
    if (!c2[m]) continue;
    for (int b = 0; m + b * b <= r2_max; ++b) c3[m + b * b] += c2[m] * (b == 0 ? 1 : 2);
  }
  return c3;
}

ThetaSequence::ThetaSequence(int dim, int r2_min, std::vector<double> theta_sq, bool normalize)
    : dim_(dim), r2_min_(r2_min), theta_sq_(std::move(theta_sq)) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("ThetaSequence: dimension must be 2 or 3");
  if (r2_min < 1) throw std::invalid_argument("ThetaSequence: zero mode excluded");
  if (theta_sq_.empty()) throw std::invalid_argument("ThetaSequence: empty support");
  for (double v : theta_sq_)
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("ThetaSequence: invalid weight");
  auto all = lattice_shell_counts(dim, r2_max());
  counts_.assign(all.begin() + r2_min_, all.end());
  if (normalize) {
    double s = norm_squared();
    if (s <= 0.0) throw std::invalid_argument("ThetaSequence: support has no lattice points");
    for (double& v : theta_sq_) v /= s;
  }
}

ThetaSequence ThetaSequence::annulus(int N, double gamma, int dim) {
  if (N < 1) throw std::invalid_argument("theta_annulus: N must be >= 1");
  if (!(gamma > 0.0)) throw std::invalid_argument("theta_annulus: gamma must be positive");
  const int lo = N * N, hi = 4 * N * N;
  std::vector<double> w(hi - lo + 1);
  for (int r2 = lo; r2 <= hi; ++r2) w[r2 - lo] = std::pow(static_cast<double>(r2), -gamma);
  ThetaSequence t(dim, lo, w, false);
  double lam = t.norm_squared();
  for (double& v : t.theta_sq_) v /= lam;
  t.lambda_sq_ = lam;
  t.N_ = N;
  t.gamma_ = gamma;
  return t;
}

ThetaSequence ThetaSequence::from_shells(int dim, const std::map<int, double>& weights) {
  if (weights.empty()) throw std::invalid_argument("ThetaSequence: empty support");
  int lo = weights.begin()->first, hi = weights.rbegin()->first;
  std::vector<double> w(hi - lo + 1, 0.0);
  for (auto [r2, v] : weights) w[r2 - lo] = v;
  return ThetaSequence(dim, lo, w, true);
}

int ThetaSequence::radius_bound() const {
  int r = static_cast<int>(std::sqrt(static_cast<double>(r2_max())));
  while ((r + 1) * (r + 1) <= r2_max()) ++r;
  return r;
}

double ThetaSequence::value(const Wave& k) const { return std::sqrt(square(norm2(k))); }

double ThetaSequence::norm_squared() const {
  double s = 0.0;
  for (std::size_t i = 0; i < theta_sq_.size(); ++i) s += counts_[i] * theta_sq_[i];
  return s;
}

double ThetaSequence::sup() const {
  double m = 0.0;
  for (std::size_t i = 0; i < theta_sq_.size(); ++i)
    if (counts_[i]) m = std::max(m, theta_sq_[i]);
  return std::sqrt(m);
}

long long ThetaSequence::support_size() const {
  long long n = 0;
  for (std::size_t i = 0; i < theta_sq_.size(); ++i)
    if (theta_sq_[i] > 0.0) n += counts_[i];
  return n;
}

std::vector<Wave> ThetaSequence::canonical_support() const {
  std::vector<Wave> out;
  const int R = radius_bound();
  const int R2 = dim_ == 3 ? R : 0;
  for (int a = 0; a <= R; ++a)
    for (int b = -R; b <= R; ++b)
      for (int c = -R2; c <= R2; ++c) {
        Wave k{a, b, c};
        if (!is_canonical(k)) continue;
        if (square(norm2(k)) > 0.0) out.push_back(k);
      }
  return out;
}

Mat3 covariance_at_origin(const ThetaSequence& theta, const NoiseBasis& basis, double kappa) {
  if (std::abs(theta.norm_squared() - 1.0) > 1e-12)
    throw std::invalid_argument("covariance_at_origin: theta must have unit l2 norm");
  const int d = basis.dim();
  Mat3 q{};
  for (const Wave& k : theta.canonical_support()) {
    double t2 = theta.square(norm2(k));
    auto a = basis.vectors(k);
    for (int i = 0; i < d - 1; ++i)
      for (int r = 0; r < d; ++r)
        for (int s = 0; s < d; ++s) q[r][s] += t2 * a[i][r] * a[i][s];
  }
  // k and -k contribute equally
  const double f = 2.0 * noise_constant(d) * kappa * 2.0;
  for (auto& row : q)
    for (double& v : row) v *= f;
  return q;
}

cplx IncrementTable::get(const Wave& k, int i) const {
  if (!modes || is_zero(k)) return 0.0;
  Wave c = canonical(k);
  auto it = std::lower_bound(modes->begin(), modes->end(), c, lex_less);
  if (it == modes->end() || *it != c) return 0.0;
  cplx v = at(static_cast<std::size_t>(it - modes->begin()), i);
  return c == k ? v : std::conj(v);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 applied to the pair
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(master) ^ (index + 0x632be59bd9b4e019ULL));
}

BrownianDriver::BrownianDriver(int dim, std::uint64_t seed) : dim_(dim), seed_(seed), rng_(seed) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("BrownianDriver: dimension must be 2 or 3");
}

const IncrementTable& BrownianDriver::sample_increments(double dt, const ThetaSequence& theta) {
  if (!(dt > 0.0)) throw std::invalid_argument("sample_increments: dt must be positive");
  if (theta.dim() != dim_) throw std::invalid_argument("sample_increments: dimension mismatch");
  if (!table_.modes || cached_r2_min_ != theta.r2_min() || cached_shells_ != theta.shell_squares()) {
    table_.dim = dim_;
    table_.per_mode = dim_ - 1;
    table_.modes = std::make_shared<const std::vector<Wave>>(theta.canonical_support());
    table_.values.assign(table_.modes->size() * table_.per_mode, 0.0);
    cached_r2_min_ = theta.r2_min();
    cached_shells_ = theta.shell_squares();
  }
  const double s = std::sqrt(dt);
  for (auto& v : table_.values) {
    double g1 = normal_(rng_);
    double g2 = normal_(rng_);
    v = cplx(g1 * s, g2 * s);
  }
  return table_;
}

std::string BrownianDriver::save_state() const {
  std::ostringstream os;
  os << seed_ << ' ' << rng_ << ' ' << normal_;
  return os.str();
}

void BrownianDriver::load_state(const std::string& s) {
  std::istringstream is(s);
  is >> seed_ >> rng_ >> normal_;
  if (!is) throw std::runtime_error("BrownianDriver: malformed state");
}

}  // namespace tnoise
