#pragma once

// Natural Image Quality Evaluator. Per patch, 18 natural-scene-statistics
// features at two scales (36 total):
//   - GGD shape and variance of the MSCN coefficients
//   - AGGD shape, mean, left and right variance of the products of
//     neighbouring MSCN coefficients along H, V, D1 and D2
// A multivariate Gaussian over patch features is compared with a model
// fitted on pristine images. Higher scores mean worse quality.

#include "tpqi/core.hpp"
#include "tpqi/videoio.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace tpqi {

inline constexpr int kNiqeFeatureDim = 36;

struct NiqeOptions {
  int patch_size = 96;
  double sharpness_fraction = 0.75;
  int window_size = 7;
  double window_sigma = 7.0 / 6.0;
};

struct NiqeModel {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  int patch_size = 96;
  double sharpness_fraction = 0.75;
};

struct Mscn {
  Plane coeffs;
  Plane local_std; // on the [0, 255] scale
};

/// MSCN of a [0,1] frame, computed on the [0,255] scale:
/// (I - mu) / (sigma + 1) with Gaussian-weighted local mean and deviation.
Mscn mscn(const Plane& frame, const NiqeOptions& options = {});

struct GgdFit {
  double shape = 0;
  double variance = 0;
};

struct AggdFit {
  double shape = 0;
  double mean = 0;
  double left_var = 0;
  double right_var = 0;
  bool one_sided = false; // one tail was empty and its deviation clamped
};

/// Moment-matching fits over the shape grid [0.2, 10] with step 0.001.
GgdFit fit_ggd(std::span<const double> samples);
AggdFit fit_aggd(std::span<const double> samples);

/// Halves each dimension with an antialiased bicubic kernel.
Plane downsample_half(const Plane& frame);

/// One 36-feature row per non-overlapping patch (frame cropped to a whole
/// number of patches).
Eigen::MatrixXd patch_features(const Plane& frame, const NiqeOptions& options = {});
/// Mean patch feature vector of a frame.
Eigen::VectorXd niqe_features(const Plane& frame, const NiqeOptions& options = {});

/// Fits the pristine MVG on sharpness-selected patches of every image.
NiqeModel train_model(std::span<const Plane> corpus, const NiqeOptions& options = {});

/// sqrt((mu1-mu2)^T pinv((S1+S2)/2) (mu1-mu2)).
double mvg_distance(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& sigma1,
                    const Eigen::VectorXd& mu2, const Eigen::MatrixXd& sigma2);

double niqe_score(const Plane& frame, const NiqeModel& model);
/// Mean of per-frame scores, frames taken at whatever resolution they have.
double video_spatial_score(const LumaSequence& seq, const NiqeModel& model);
std::vector<double> frame_scores(const LumaSequence& seq, const NiqeModel& model,
                                 unsigned threads = 1);

// "TPQINIQ1", u32 LE dim, mu (dim f64 LE), sigma (dim*dim f64 LE row-major),
// u32 LE patch_size, f64 LE sharpness_fraction.
void save_model(const std::filesystem::path& path, const NiqeModel& model);
NiqeModel load_model(const std::filesystem::path& path);

} // namespace tpqi
