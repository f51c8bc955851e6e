#pragma once

#include "tpqi/core.hpp"

#include <complex>
#include <memory>

namespace tpqi {

/// Owning, SIMD-aligned complex buffer for FFT work.
class FftBuffer {
public:
  FftBuffer() = default;
  explicit FftBuffer(std::size_t size);

  std::complex<double>* data() { return data_.get(); }
  const std::complex<double>* data() const { return data_.get(); }
  std::size_t size() const { return size_; }
  std::complex<double>& operator[](std::size_t i) { return data_[i]; }
  const std::complex<double>& operator[](std::size_t i) const { return data_[i]; }

private:
  struct Free {
    void operator()(std::complex<double>* p) const;
  };
  std::unique_ptr<std::complex<double>[], Free> data_;
  std::size_t size_ = 0;
};

/// Unnormalized 2-D complex DFT of a fixed row-major geometry. Plans are
/// created once (planner access is serialized); execute() is thread-safe
/// for distinct buffers.
class Fft2d {
public:
  Fft2d(Index rows, Index cols);
  ~Fft2d();
  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  std::size_t size() const { return static_cast<std::size_t>(rows_ * cols_); }

  void forward(const FftBuffer& in, FftBuffer& out) const;
  void inverse(const FftBuffer& in, FftBuffer& out) const;

private:
  Index rows_, cols_;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

/// Smallest n' >= n whose only prime factors are 2, 3, 5 and 7.
Index fft_friendly_size(Index n);

} // namespace tpqi
