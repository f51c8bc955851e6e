#pragma once

// LGN-domain representation: a Laplacian pyramid of bandpass images, each
// divided by a local estimate of its own amplitude (contrast gain control).

#include "tpqi/core.hpp"

#include <vector>

namespace tpqi {

struct LgnConfig {
  int levels = 5;
  /// Separable 1-D lowpass used for REDUCE/EXPAND; must sum to 1.
  std::vector<double> lowpass_kernel{1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  /// Local-amplitude blur of |band|; defaults to the 5x5 binomial.
  Eigen::MatrixXd norm_kernel = default_norm_kernel();
  /// One semi-saturation constant per bandpass level (levels - 1 entries).
  std::vector<double> norm_constant_per_level = std::vector<double>(4, 0.17);

  static Eigen::MatrixXd default_norm_kernel();
  /// Resizes norm_constant_per_level to levels - 1 copies of `c`.
  void set_norm_constant(double c);
  void validate() const;
};

/// Bandpass images at levels 0..L-2 followed by the lowpass residual.
std::vector<Plane> laplacian_pyramid(const Plane& frame, const LgnConfig& cfg);
Plane collapse_pyramid(const std::vector<Plane>& bands, const LgnConfig& cfg);

Plane pyramid_reduce(const Plane& src, const std::vector<double>& kernel);
/// Interpolates `src` up to rows x cols (each at most 2x the source).
Plane pyramid_expand(const Plane& src, Index rows, Index cols, const std::vector<double>& kernel);

/// y = z / (c_level + norm_kernel * |z|).
Plane divisive_normalize(const Plane& band, const LgnConfig& cfg, int level);

/// Normalized bandpass levels (residual excluded), flattened row-major and
/// concatenated from finest to coarsest.
Eigen::VectorXd lgn_features(const Plane& frame, const LgnConfig& cfg);
Index lgn_feature_dim(Index width, Index height, const LgnConfig& cfg);

} // namespace tpqi
