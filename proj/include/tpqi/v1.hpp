#pragma once

// V1-domain representation: complex-cell energy of a bank of complex Gabor
// filters,
//
//   g(x, y) = f^2 / (pi gamma eta) * exp(-(x'^2 + gamma^2 y'^2) / (2 sigma^2))
//                                  * exp(j (2 pi f x' + phi))
//   x' =  x cos(theta) + y sin(theta)
//   y' = -x sin(theta) + y cos(theta)
//
// sampled on a size x size grid with x along columns and y along rows,
// both centered at zero.

#include "tpqi/core.hpp"
#include "tpqi/fft.hpp"

#include <vector>

namespace tpqi {

struct GaborParams {
  double frequency = 0.25; // cycles / pixel
  double orientation = 0;  // radians
  double phase = 0;        // radians
  double sigma = 2.24;     // envelope std, pixels
  double gamma = 0.5;      // spatial aspect ratio
  double eta = 0.5;
  int size = 39;

  void validate() const;
};

struct GaborBankOptions {
  int scales = 6;
  int orientations = 8;
  double max_frequency = 0.25;
  /// Ratio between successive scale frequencies (half-octave by default).
  double frequency_step = 1.4142135623730951;
  /// sigma = sigma_frequency_product / f.
  double sigma_frequency_product = 0.56;
  double gamma = 0.5;
  /// Negative means "same as gamma".
  double eta = -1;
  double phase = 0;
  int size = 39;
  int pool = 4;
};

/// Filters are stored scale-major: index = scale * orientations + orientation.
struct GaborBank {
  std::vector<GaborParams> filters;
  int scales = 0;
  int orientations = 0;
  int pool = 1;

  std::size_t size() const { return filters.size(); }
  int max_kernel_size() const;
};

GaborBank make_bank(const GaborBankOptions& options);
/// 6 scales x 8 orientations, 39x39 kernels, pooling 4.
GaborBank default_bank();

Eigen::MatrixXcd make_gabor_kernel(const GaborParams& params);

/// Complex response by direct spatial convolution with mirror boundaries.
/// Slow; kept as the reference route for the FFT implementation.
Eigen::ArrayXXcd gabor_response_direct(const Plane& frame, const Eigen::MatrixXcd& kernel);

/// Average-pools a map over p x p blocks; edge blocks average what is present.
Plane average_pool(const Plane& map, int pool);

/// Precomputed FFT-domain bank for one frame geometry.
class V1Transform {
public:
  V1Transform(GaborBank bank, Index width, Index height);

  const GaborBank& bank() const { return bank_; }
  Index width() const { return width_; }
  Index height() const { return height_; }
  Index feature_dim() const;

  /// Complex response of one filter (same geometry as the frame).
  Eigen::ArrayXXcd response(const Plane& frame, std::size_t filter) const;
  /// Unpooled |response|^2 for every filter.
  std::vector<Plane> energy_maps(const Plane& frame) const;
  /// Spatial mean energy per filter.
  Eigen::VectorXd mean_energies(const Plane& frame) const;
  /// Pooled energy maps, flattened row-major and concatenated in filter order.
  Eigen::VectorXd features(const Plane& frame) const;

private:
  template <typename Visit>
  void for_each_response(const Plane& frame, Visit&& visit) const;
  void check_frame(const Plane& frame) const;

  GaborBank bank_;
  Index width_, height_, half_;
  Fft2d fft_;
  std::vector<FftBuffer> spectra_;
};

/// Convenience: builds a V1Transform for the frame geometry.
Eigen::VectorXd v1_energy(const Plane& frame, const GaborBank& bank);

} // namespace tpqi
