#include "tnoise/lattice.hpp"

#include <map>
#include <mutex>
#include <stdexcept>

namespace tnoise {

bool is_canonical(const Wave& k) {
  for (int c : k) {
    if (c > 0) return true;
    if (c < 0) return false;
  }
  return false;
}

Wave canonical(const Wave& k) { return is_canonical(k) ? k : negate(k); }

std::string to_string(const Wave& k, int dim) {
  std::string s = "(";
  for (int j = 0; j < dim; ++j) {
    if (j) s += ",";
    s += std::to_string(k[j]);
  }
  return s + ")";
}

ModeSet::ModeSet(int dim, int max_mode) : dim_(dim), max_mode_(max_mode) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("ModeSet: dimension must be 2 or 3");
  if (max_mode < 1) throw std::invalid_argument("ModeSet: max_mode must be >= 1");
  const int M = max_mode;
  const int w = 2 * M + 1;
  std::size_t total = static_cast<std::size_t>(w) * w * (dim == 3 ? w : 1);
  lookup_.assign(total, 0);
  const int lo2 = dim == 3 ? -M : 0;
  const int hi2 = dim == 3 ? M : 0;
  for (int a = 0; a <= M; ++a)
    for (int b = -M; b <= M; ++b)
      for (int c = lo2; c <= hi2; ++c) {
        Wave k{a, b, c};
        if (!is_canonical(k)) continue;
        modes_.push_back(k);
      }
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    auto id = static_cast<std::int32_t>(i + 1);
    lookup_[dense_index(modes_[i])] = id;
    lookup_[dense_index(negate(modes_[i]))] = -id;
  }
}

std::shared_ptr<const ModeSet> ModeSet::cube(int dim, int max_mode) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const ModeSet>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(dim, max_mode);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto p = std::make_shared<const ModeSet>(dim, max_mode);
  cache.emplace(key, p);
  return p;
}

std::size_t ModeSet::dense_index(const Wave& k) const {
  const int M = max_mode_;
  const std::size_t w = 2 * M + 1;
  std::size_t idx = static_cast<std::size_t>(k[0] + M) * w + static_cast<std::size_t>(k[1] + M);
  if (dim_ == 3) idx = idx * w + static_cast<std::size_t>(k[2] + M);
  return idx;
}

bool ModeSet::contains(const Wave& k) const {
  if (is_zero(k)) return false;
  if (dim_ == 2 && k[2] != 0) return false;
  return sup_norm(k) <= max_mode_;
}

std::ptrdiff_t ModeSet::find(const Wave& k, bool* mirrored) const {
  if (!contains(k)) return -1;
  std::int32_t id = lookup_[dense_index(k)];
  if (mirrored) *mirrored = id < 0;
  return static_cast<std::ptrdiff_t>(id < 0 ? -id : id) - 1;
}

}  // namespace tnoise
