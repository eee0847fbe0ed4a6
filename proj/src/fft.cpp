#include "tnoise/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace tnoise {

namespace {
std::mutex planner_mutex;
}  // namespace

int fft_good_size(int min_n) {
  for (int n = std::max(min_n, 1);; ++n) {
    int m = n;
    for (int p : {2, 3, 5, 7})
      while (m % p == 0) m /= p;
    if (m == 1) return n;
  }
}

FftGrid::FftGrid(int dim, int n) : dim_(dim), n_(n) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("FftGrid: dimension must be 2 or 3");
  if (n < 2) throw std::invalid_argument("FftGrid: grid too small");
  std::size_t half = static_cast<std::size_t>(n / 2 + 1);
  real_size_ = static_cast<std::size_t>(n) * n * (dim == 3 ? n : 1);
  complex_size_ = static_cast<std::size_t>(n) * (dim == 3 ? n : 1) * half;
  std::lock_guard<std::mutex> lock(planner_mutex);
  cbuf_ = fftw_malloc(sizeof(fftw_complex) * complex_size_);
  double* rtmp = fftw_alloc_real(real_size_);
  int dims[3] = {n, n, n};
  unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  forward_ = fftw_plan_dft_r2c(dim, dims, rtmp, static_cast<fftw_complex*>(cbuf_), flags);
  backward_ = fftw_plan_dft_c2r(dim, dims, static_cast<fftw_complex*>(cbuf_), rtmp, flags);
  fftw_free(rtmp);
  if (!forward_ || !backward_) throw std::runtime_error("FftGrid: plan creation failed");
}

FftGrid::~FftGrid() {
  std::lock_guard<std::mutex> lock(planner_mutex);
  if (forward_) fftw_destroy_plan(static_cast<fftw_plan>(forward_));
  if (backward_) fftw_destroy_plan(static_cast<fftw_plan>(backward_));
  if (cbuf_) fftw_free(cbuf_);
}

std::size_t FftGrid::position(const Wave& k) const {
  auto wrap = [this](int c) { return static_cast<std::size_t>(c < 0 ? c + n_ : c); };
  std::size_t half = static_cast<std::size_t>(n_ / 2 + 1);
  if (dim_ == 2) return wrap(k[0]) * half + static_cast<std::size_t>(k[1]);
  return (wrap(k[0]) * n_ + wrap(k[1])) * half + static_cast<std::size_t>(k[2]);
}

const FftGrid::Layout& FftGrid::layout(const SpectralField& x) {
  if (x.dim() != dim_) throw std::invalid_argument("FftGrid: dimension mismatch");
  if (2 * x.max_mode() >= n_) throw std::invalid_argument("FftGrid: grid too coarse for the field");
  auto it = layouts_.find(x.modes_ptr().get());
  if (it != layouts_.end()) return it->second.second;
  Layout lay;
  const int last = dim_ - 1;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Wave& k = x.wave(i);
    if (k[last] >= 0) {
      lay.scatter.push_back({position(k), static_cast<std::uint32_t>(i), false});
      lay.gather.push_back({position(k), false});
    } else {
      lay.gather.push_back({position(negate(k)), true});
    }
    Wave m = negate(k);
    if (m[last] >= 0) lay.scatter.push_back({position(m), static_cast<std::uint32_t>(i), true});
  }
  auto res = layouts_.emplace(x.modes_ptr().get(), std::make_pair(x.modes_ptr(), std::move(lay)));
  return res.first->second.second;
}

void FftGrid::to_physical(const SpectralField& x, int c, double* out, int deriv_axis) {
  const Layout& lay = layout(x);
  auto* buf = static_cast<cplx*>(cbuf_);
  std::memset(cbuf_, 0, sizeof(fftw_complex) * complex_size_);
  const double tp = 2.0 * std::numbers::pi;
  for (const Slot& s : lay.scatter) {
    cplx v = x.at(s.idx, c);
    if (deriv_axis >= 0) v *= cplx(0.0, tp * x.wave(s.idx)[deriv_axis]);
    buf[s.pos] = s.conj ? std::conj(v) : v;
  }
  fftw_execute_dft_c2r(static_cast<fftw_plan>(backward_), static_cast<fftw_complex*>(cbuf_), out);
}

void FftGrid::to_spectral(const double* in, SpectralField& x, int c) {
  const Layout& lay = layout(x);
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_), const_cast<double*>(in),
                       static_cast<fftw_complex*>(cbuf_));
  const auto* buf = static_cast<const cplx*>(cbuf_);
  const double scale = 1.0 / static_cast<double>(real_size_);
  for (std::size_t i = 0; i < lay.gather.size(); ++i) {
    cplx v = buf[lay.gather[i].pos] * scale;
    x.at(i, c) = lay.gather[i].conj ? std::conj(v) : v;
  }
}

}  // namespace tnoise
