#include "tpqi/lgn.hpp"
#include "tpqi/filter.hpp"

#include <cmath>
#include <numeric>

namespace tpqi {

Eigen::MatrixXd LgnConfig::default_norm_kernel() {
  Eigen::Vector<double, 5> b;
  b << 1, 4, 6, 4, 1;
  b /= 16.0;
  return b * b.transpose();
}

void LgnConfig::set_norm_constant(double c) {
  norm_constant_per_level.assign(levels > 1 ? levels - 1 : 0, c);
}

void LgnConfig::validate() const {
  if (levels < 1) throw ConfigError("lgn: levels must be >= 1");
  if (lowpass_kernel.empty() || lowpass_kernel.size() % 2 == 0)
    throw ConfigError("lgn: lowpass kernel must have odd length");
  const double sum = std::accumulate(lowpass_kernel.begin(), lowpass_kernel.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("lgn: lowpass kernel must sum to 1");
  if (norm_kernel.rows() % 2 == 0 || norm_kernel.cols() % 2 == 0)
    throw ConfigError("lgn: normalization kernel must have odd size");
  if (norm_constant_per_level.size() != static_cast<std::size_t>(levels - 1))
    throw ConfigError("lgn: need one normalization constant per bandpass level");
  for (double c : norm_constant_per_level)
    if (!(c > 0)) throw ConfigError("lgn: normalization constants must be > 0");
}

Plane pyramid_reduce(const Plane& src, const std::vector<double>& kernel) {
  const Plane blurred = filter_separable(src, kernel, kernel);
  const Index rows = (src.rows() + 1) / 2, cols = (src.cols() + 1) / 2;
  Plane out(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) out(r, c) = blurred(2 * r, 2 * c);
  return out;
}

namespace {

// Polyphase form of "insert zeros, filter with 2*kernel": only taps landing
// on source samples contribute, and source indices are mirrored on the
// coarse grid. Constants are therefore reproduced exactly at the borders.
Plane expand_rows(const Plane& src, Index cols, const std::vector<double>& kernel) {
  const Index half = static_cast<Index>(kernel.size()) / 2;
  Plane out = Plane::Zero(src.rows(), cols);
  for (Index x = 0; x < cols; ++x) {
    for (std::size_t t = 0; t < kernel.size(); ++t) {
      const Index k = x - (static_cast<Index>(t) - half);
      if (k % 2 != 0) continue;
      out.col(x) += 2.0 * kernel[t] * src.col(mirror_index(k / 2, src.cols()));
    }
  }
  return out;
}

Plane expand_cols(const Plane& src, Index rows, const std::vector<double>& kernel) {
  const Index half = static_cast<Index>(kernel.size()) / 2;
  Plane out = Plane::Zero(rows, src.cols());
  for (Index y = 0; y < rows; ++y) {
    for (std::size_t t = 0; t < kernel.size(); ++t) {
      const Index k = y - (static_cast<Index>(t) - half);
      if (k % 2 != 0) continue;
      out.row(y) += 2.0 * kernel[t] * src.row(mirror_index(k / 2, src.rows()));
    }
  }
  return out;
}

} // namespace

Plane pyramid_expand(const Plane& src, Index rows, Index cols, const std::vector<double>& kernel) {
  return expand_cols(expand_rows(src, cols, kernel), rows, kernel);
}

std::vector<Plane> laplacian_pyramid(const Plane& frame, const LgnConfig& cfg) {
  cfg.validate();
  const Index min_side = Index(1) << (cfg.levels - 1);
  if (frame.rows() < min_side || frame.cols() < min_side)
    throw ConfigError("lgn: frame " + std::to_string(frame.cols()) + "x" +
                      std::to_string(frame.rows()) + " too small for " +
                      std::to_string(cfg.levels) + " pyramid levels");
  std::vector<Plane> bands;
  bands.reserve(cfg.levels);
  Plane current = frame;
  for (int k = 0; k + 1 < cfg.levels; ++k) {
    Plane coarser = pyramid_reduce(current, cfg.lowpass_kernel);
    bands.push_back(current - pyramid_expand(coarser, current.rows(), current.cols(),
                                             cfg.lowpass_kernel));
    current = std::move(coarser);
  }
  bands.push_back(std::move(current));
  return bands;
}

Plane collapse_pyramid(const std::vector<Plane>& bands, const LgnConfig& cfg) {
  if (bands.empty()) throw ConfigError("lgn: empty pyramid");
  Plane current = bands.back();
  for (auto it = bands.rbegin() + 1; it != bands.rend(); ++it)
    current = *it + pyramid_expand(current, it->rows(), it->cols(), cfg.lowpass_kernel);
  return current;
}

Plane divisive_normalize(const Plane& band, const LgnConfig& cfg, int level) {
  const double c = cfg.norm_constant_per_level.at(level);
  const Plane amplitude = filter2d(Plane(band.abs()), cfg.norm_kernel);
  return band / (c + amplitude);
}

Index lgn_feature_dim(Index width, Index height, const LgnConfig& cfg) {
  Index dim = 0;
  for (int k = 0; k + 1 < cfg.levels; ++k) {
    dim += width * height;
    width = (width + 1) / 2;
    height = (height + 1) / 2;
  }
  return dim;
}

Eigen::VectorXd lgn_features(const Plane& frame, const LgnConfig& cfg) {
  const auto bands = laplacian_pyramid(frame, cfg);
  Eigen::VectorXd out(lgn_feature_dim(frame.cols(), frame.rows(), cfg));
  Index offset = 0;
  for (int k = 0; k + 1 < cfg.levels; ++k) {
    const Plane normalized = divisive_normalize(bands[k], cfg, k);
    out.segment(offset, normalized.size()) =
        Eigen::Map<const Eigen::VectorXd>(normalized.data(), normalized.size());
    offset += normalized.size();
  }
  return out;
}

} // namespace tpqi
