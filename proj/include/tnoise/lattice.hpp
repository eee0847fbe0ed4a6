#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace tnoise {

// Integer wave vector; components beyond the dimension are zero.
using Wave = std::array<int, 3>;

inline int norm2(const Wave& k) { return k[0] * k[0] + k[1] * k[1] + k[2] * k[2]; }
inline Wave negate(const Wave& k) { return {-k[0], -k[1], -k[2]}; }
inline bool is_zero(const Wave& k) { return k[0] == 0 && k[1] == 0 && k[2] == 0; }
inline Wave operator+(const Wave& a, const Wave& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Wave operator-(const Wave& a, const Wave& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline int dot(const Wave& a, const Wave& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline int sup_norm(const Wave& k) {
  int m = 0;
  for (int c : k) m = std::max(m, c < 0 ? -c : c);
  return m;
}

// First nonzero component positive.
bool is_canonical(const Wave& k);
Wave canonical(const Wave& k);
std::string to_string(const Wave& k, int dim);

// Canonical half of the cube |k_j| <= M with the zero mode removed.
// Modes are ordered by (k0, k1, k2) lexicographically.
class ModeSet {
 public:
  ModeSet(int dim, int max_mode);

  // Shared instance per (dim, max_mode).
  static std::shared_ptr<const ModeSet> cube(int dim, int max_mode);

  int dim() const { return dim_; }
  int max_mode() const { return max_mode_; }
  std::size_t size() const { return modes_.size(); }
  const Wave& operator[](std::size_t i) const { return modes_[i]; }
  const std::vector<Wave>& modes() const { return modes_; }

  bool contains(const Wave& k) const;
  // Index of the canonical representative of k; sets *mirrored when k is
  // the conjugate partner. Returns -1 outside the cube or for k = 0.
  std::ptrdiff_t find(const Wave& k, bool* mirrored = nullptr) const;

 private:
  std::size_t dense_index(const Wave& k) const;

  int dim_;
  int max_mode_;
  std::vector<Wave> modes_;
  std::vector<std::int32_t> lookup_;
};

using ModeSetPtr = std::shared_ptr<const ModeSet>;

}  // namespace tnoise
