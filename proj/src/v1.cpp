#include "tpqi/v1.hpp"
#include "tpqi/filter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tpqi {

void GaborParams::validate() const {
  if (!(frequency > 0)) throw ConfigError("gabor: frequency must be > 0");
  if (!(sigma > 0)) throw ConfigError("gabor: sigma must be > 0");
  if (!(gamma > 0)) throw ConfigError("gabor: gamma must be > 0");
  if (!(eta > 0)) throw ConfigError("gabor: eta must be > 0");
  if (size < 1 || size % 2 == 0) throw ConfigError("gabor: kernel size must be odd");
}

int GaborBank::max_kernel_size() const {
  int s = 1;
  for (const auto& f : filters) s = std::max(s, f.size);
  return s;
}

GaborBank make_bank(const GaborBankOptions& options) {
  if (options.scales < 1 || options.orientations < 1)
    throw ConfigError("gabor: bank needs at least one scale and orientation");
  if (options.pool < 1) throw ConfigError("gabor: pooling factor must be >= 1");
  GaborBank bank;
  bank.scales = options.scales;
  bank.orientations = options.orientations;
  bank.pool = options.pool;
  for (int s = 0; s < options.scales; ++s) {
    const double f = options.max_frequency / std::pow(options.frequency_step, s);
    for (int o = 0; o < options.orientations; ++o) {
      GaborParams p;
      p.frequency = f;
      p.orientation = o * std::numbers::pi / options.orientations;
      p.phase = options.phase;
      p.sigma = options.sigma_frequency_product / f;
      p.gamma = options.gamma;
      p.eta = options.eta > 0 ? options.eta : options.gamma;
      p.size = options.size;
      p.validate();
      bank.filters.push_back(p);
    }
  }
  return bank;
}

GaborBank default_bank() { return make_bank(GaborBankOptions{}); }

Eigen::MatrixXcd make_gabor_kernel(const GaborParams& p) {
  p.validate();
  const int half = p.size / 2;
  const double amplitude = p.frequency * p.frequency / (std::numbers::pi * p.gamma * p.eta);
  const double c = std::cos(p.orientation), s = std::sin(p.orientation);
  Eigen::MatrixXcd k(p.size, p.size);
  for (int i = 0; i < p.size; ++i) {
    const double y = i - half;
    for (int j = 0; j < p.size; ++j) {
      const double x = j - half;
      const double xr = x * c + y * s;
      const double yr = -x * s + y * c;
      const double envelope =
          std::exp(-(xr * xr + p.gamma * p.gamma * yr * yr) / (2 * p.sigma * p.sigma));
      k(i, j) = amplitude * envelope *
                std::polar(1.0, 2 * std::numbers::pi * p.frequency * xr + p.phase);
    }
  }
  return k;
}

Eigen::ArrayXXcd gabor_response_direct(const Plane& frame, const Eigen::MatrixXcd& kernel) {
  const Index hr = kernel.rows() / 2, hc = kernel.cols() / 2;
  const Plane padded = pad_mirror(frame, hr, hr, hc, hc);
  Eigen::ArrayXXcd out = Eigen::ArrayXXcd::Zero(frame.rows(), frame.cols());
  // Convolution: out(r, c) = sum K(i, j) * frame(r - (i - hr), c - (j - hc)).
  for (Index i = 0; i < kernel.rows(); ++i)
    for (Index j = 0; j < kernel.cols(); ++j)
      out += kernel(i, j) *
             padded.block(2 * hr - i, 2 * hc - j, frame.rows(), frame.cols()).cast<std::complex<double>>();
  return out;
}

Plane average_pool(const Plane& map, int pool) {
  if (pool <= 1) return map;
  const Index rows = (map.rows() + pool - 1) / pool, cols = (map.cols() + pool - 1) / pool;
  Plane out(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const Index r0 = r * pool, nr = std::min<Index>(pool, map.rows() - r0);
    for (Index c = 0; c < cols; ++c) {
      const Index c0 = c * pool, nc = std::min<Index>(pool, map.cols() - c0);
      out(r, c) = map.block(r0, c0, nr, nc).mean();
    }
  }
  return out;
}

V1Transform::V1Transform(GaborBank bank, Index width, Index height)
    : bank_(std::move(bank)),
      width_(width),
      height_(height),
      half_(bank_.max_kernel_size() / 2),
      fft_(fft_friendly_size(height + 2 * half_), fft_friendly_size(width + 2 * half_)) {
  if (bank_.filters.empty()) throw ConfigError("v1: empty Gabor bank");
  if (width < bank_.max_kernel_size() || height < bank_.max_kernel_size())
    throw ConfigError("v1: frame " + std::to_string(width) + "x" + std::to_string(height) +
                      " smaller than the " + std::to_string(bank_.max_kernel_size()) +
                      "-pixel Gabor support");
  const Index fr = fft_.rows(), fc = fft_.cols();
  FftBuffer placed(fft_.size());
  spectra_.reserve(bank_.size());
  for (const auto& params : bank_.filters) {
    const Eigen::MatrixXcd k = make_gabor_kernel(params);
    const Index h = k.rows() / 2;
    std::fill(placed.data(), placed.data() + placed.size(), std::complex<double>(0));
    for (Index i = 0; i < k.rows(); ++i)
      for (Index j = 0; j < k.cols(); ++j) {
        const Index r = (i - h + fr) % fr, c = (j - h + fc) % fc;
        placed[static_cast<std::size_t>(r * fc + c)] = k(i, j);
      }
    FftBuffer spectrum(fft_.size());
    fft_.forward(placed, spectrum);
    // Fold the inverse-transform normalization into the kernel spectrum.
    const double scale = 1.0 / static_cast<double>(fft_.size());
    for (std::size_t n = 0; n < spectrum.size(); ++n) spectrum[n] *= scale;
    spectra_.push_back(std::move(spectrum));
  }
}

Index V1Transform::feature_dim() const {
  const Index p = bank_.pool;
  return static_cast<Index>(bank_.size()) * ((width_ + p - 1) / p) * ((height_ + p - 1) / p);
}

void V1Transform::check_frame(const Plane& frame) const {
  if (frame.cols() != width_ || frame.rows() != height_)
    throw DimensionError("v1: frame geometry " + std::to_string(frame.cols()) + "x" +
                         std::to_string(frame.rows()) + " does not match transform " +
                         std::to_string(width_) + "x" + std::to_string(height_));
}

template <typename Visit>
void V1Transform::for_each_response(const Plane& frame, Visit&& visit) const {
  check_frame(frame);
  const Index fc = fft_.cols();
  const Plane padded = pad_mirror(frame, half_, half_, half_, half_);
  FftBuffer image(fft_.size()), spectrum(fft_.size()), product(fft_.size()), response(fft_.size());
  for (Index r = 0; r < padded.rows(); ++r)
    for (Index c = 0; c < padded.cols(); ++c) image[static_cast<std::size_t>(r * fc + c)] = padded(r, c);
  fft_.forward(image, spectrum);
  for (std::size_t f = 0; f < spectra_.size(); ++f) {
    const auto* k = spectra_[f].data();
    const auto* s = spectrum.data();
    auto* out = product.data();
    for (std::size_t n = 0; n < product.size(); ++n) out[n] = s[n] * k[n];
    fft_.inverse(product, response);
    // Frame pixel (r, c) sits at (r + half, c + half) of the padded grid.
    Eigen::Map<const Eigen::Array<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>,
               0, Eigen::OuterStride<>>
        view(response.data() + half_ * fc + half_, height_, width_, Eigen::OuterStride<>(fc));
    visit(f, view);
  }
}

Eigen::ArrayXXcd V1Transform::response(const Plane& frame, std::size_t filter) const {
  Eigen::ArrayXXcd out;
  for_each_response(frame, [&](std::size_t f, const auto& view) {
    if (f == filter) out = view;
  });
  return out;
}

std::vector<Plane> V1Transform::energy_maps(const Plane& frame) const {
  std::vector<Plane> maps(bank_.size());
  for_each_response(frame, [&](std::size_t f, const auto& view) { maps[f] = view.abs2(); });
  return maps;
}

Eigen::VectorXd V1Transform::mean_energies(const Plane& frame) const {
  Eigen::VectorXd means(bank_.size());
  for_each_response(frame, [&](std::size_t f, const auto& view) { means[f] = view.abs2().mean(); });
  return means;
}

Eigen::VectorXd V1Transform::features(const Plane& frame) const {
  Eigen::VectorXd out(feature_dim());
  Index offset = 0;
  for_each_response(frame, [&](std::size_t, const auto& view) {
    const Plane pooled = average_pool(view.abs2(), bank_.pool);
    out.segment(offset, pooled.size()) = Eigen::Map<const Eigen::VectorXd>(pooled.data(), pooled.size());
    offset += pooled.size();
  });
  return out;
}

Eigen::VectorXd v1_energy(const Plane& frame, const GaborBank& bank) {
  return V1Transform(bank, frame.cols(), frame.rows()).features(frame);
}

} // namespace tpqi
