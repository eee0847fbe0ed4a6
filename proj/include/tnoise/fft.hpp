#pragma once

#include <map>
#include <memory>
#include <vector>

#include "tnoise/spectral_field.hpp"

namespace tnoise {

// Smallest n >= min_n whose prime factors are all in {2, 3, 5, 7}.
int fft_good_size(int min_n);

// Real-to-complex transforms on an n^d periodic grid, x_j = j / n.
// Plans are created with FFTW_ESTIMATE so repeated runs are bitwise identical.
class FftGrid {
 public:
  FftGrid(int dim, int n);
  ~FftGrid();
  FftGrid(const FftGrid&) = delete;
  FftGrid& operator=(const FftGrid&) = delete;

  int dim() const { return dim_; }
  int n() const { return n_; }
  std::size_t real_size() const { return real_size_; }

  // Physical values of component c of x; deriv_axis >= 0 applies d/dx_axis first.
  void to_physical(const SpectralField& x, int c, double* out, int deriv_axis = -1);
  // Fourier coefficients of real grid data, written into component c of x.
  void to_spectral(const double* in, SpectralField& x, int c);

 private:
  struct Slot {
    std::size_t pos;
    std::uint32_t idx;
    bool conj;
  };
  struct Gather {
    std::size_t pos;
    bool conj;
  };
  struct Layout {
    std::vector<Slot> scatter;
    std::vector<Gather> gather;
  };
  const Layout& layout(const SpectralField& x);
  std::size_t position(const Wave& k) const;

  int dim_;
  int n_;
  std::size_t real_size_;
  std::size_t complex_size_;
  void* forward_ = nullptr;
  void* backward_ = nullptr;
  void* cbuf_ = nullptr;
  std::map<const ModeSet*, std::pair<ModeSetPtr, Layout>> layouts_;
};

}  // namespace tnoise
