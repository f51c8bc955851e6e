#include "tpqi/fft.hpp"

#include <fftw3.h>

#include <mutex>

namespace tpqi {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
} // namespace

FftBuffer::FftBuffer(std::size_t size)
    : data_(reinterpret_cast<std::complex<double>*>(fftw_alloc_complex(size))), size_(size) {
  if (!data_) throw std::bad_alloc();
  for (std::size_t i = 0; i < size; ++i) data_[i] = 0;
}

void FftBuffer::Free::operator()(std::complex<double>* p) const { fftw_free(p); }

Fft2d::Fft2d(Index rows, Index cols) : rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1) throw ConfigError("fft: empty geometry");
  FftBuffer a(size()), b(size());
  auto* in = reinterpret_cast<fftw_complex*>(a.data());
  auto* out = reinterpret_cast<fftw_complex*>(b.data());
  std::lock_guard lock(planner_mutex());
  forward_plan_ = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), in, out,
                                   FFTW_FORWARD, FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), in, out,
                                   FFTW_BACKWARD, FFTW_ESTIMATE);
  if (!forward_plan_ || !inverse_plan_) throw NumericalError("fft: planning failed");
}

Fft2d::~Fft2d() {
  std::lock_guard lock(planner_mutex());
  if (forward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  if (inverse_plan_) fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

void Fft2d::forward(const FftBuffer& in, FftBuffer& out) const {
  fftw_execute_dft(static_cast<fftw_plan>(forward_plan_),
                   reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

void Fft2d::inverse(const FftBuffer& in, FftBuffer& out) const {
  fftw_execute_dft(static_cast<fftw_plan>(inverse_plan_),
                   reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

Index fft_friendly_size(Index n) {
  for (Index m = std::max<Index>(n, 1);; ++m) {
    Index r = m;
    for (Index p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

} // namespace tpqi
