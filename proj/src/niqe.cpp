#include "tpqi/niqe.hpp"
#include "tpqi/filter.hpp"
#include "tpqi/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>

namespace tpqi {

namespace {

// r(g) = Gamma(1/g) Gamma(3/g) / Gamma(2/g)^2, decreasing in g.
struct ShapeTable {
  static constexpr double kMin = 0.2, kMax = 10.0, kStep = 0.001;
  std::vector<double> shape, ratio;

  ShapeTable() {
    const int n = static_cast<int>(std::lround((kMax - kMin) / kStep)) + 1;
    shape.resize(n);
    ratio.resize(n);
    for (int i = 0; i < n; ++i) {
      const double g = kMin + i * kStep;
      shape[i] = g;
      ratio[i] = std::exp(std::lgamma(1 / g) + std::lgamma(3 / g) - 2 * std::lgamma(2 / g));
    }
  }

  /// Shape whose ratio is nearest to `r`.
  double invert(double r) const {
    // ratio is decreasing; search on the reversed order.
    auto it = std::lower_bound(ratio.rbegin(), ratio.rend(), r);
    if (it == ratio.rbegin()) return shape.back();
    if (it == ratio.rend()) return shape.front();
    const auto hi = static_cast<std::size_t>(ratio.rend() - it) - 1; // ratio[hi] >= r
    const auto lo = hi + 1;                                          // ratio[lo] < r
    return std::abs(ratio[hi] - r) <= std::abs(ratio[lo] - r) ? shape[hi] : shape[lo];
  }
};

const ShapeTable& shape_table() {
  static const ShapeTable table;
  return table;
}

double cubic(double x) {
  const double a = std::abs(x), a2 = a * a, a3 = a2 * a;
  if (a <= 1) return 1.5 * a3 - 2.5 * a2 + 1;
  if (a <= 2) return -0.5 * a3 + 2.5 * a2 - 4 * a + 2;
  return 0;
}

// One dimension of a 2:1 antialiased bicubic reduction (kernel stretched by
// 2), with mirrored source indices. Applied along rows of `src`.
Plane decimate_rows(const Plane& src) {
  const Index out_cols = (src.cols() + 1) / 2;
  Plane out = Plane::Zero(src.rows(), out_cols);
  for (Index o = 0; o < out_cols; ++o) {
    const double center = 2.0 * o + 0.5;
    double weights[8], total = 0;
    Index taps[8];
    for (int t = 0; t < 8; ++t) {
      const Index j = 2 * o - 3 + t;
      weights[t] = cubic((j - center) / 2.0) / 2.0;
      taps[t] = mirror_index(j, src.cols());
      total += weights[t];
    }
    for (int t = 0; t < 8; ++t) out.col(o) += (weights[t] / total) * src.col(taps[t]);
  }
  return out;
}

Eigen::VectorXd patch_feature_row(const Plane& coeffs) {
  Eigen::VectorXd f(18);
  const std::span<const double> all(coeffs.data(), static_cast<std::size_t>(coeffs.size()));
  const GgdFit g = fit_ggd(all);
  f(0) = g.shape;
  f(1) = g.variance;
  // Neighbour products with circular wrap inside the patch.
  static constexpr int shifts[4][2] = {{0, 1}, {1, 0}, {1, 1}, {1, -1}};
  const Index rows = coeffs.rows(), cols = coeffs.cols();
  std::vector<double> products(static_cast<std::size_t>(coeffs.size()));
  for (int s = 0; s < 4; ++s) {
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) {
        const Index rr = (r + shifts[s][0] + rows) % rows, cc = (c + shifts[s][1] + cols) % cols;
        products[static_cast<std::size_t>(r * cols + c)] = coeffs(r, c) * coeffs(rr, cc);
      }
    const AggdFit a = fit_aggd(products);
    f.segment<4>(2 + 4 * s) << a.shape, a.mean, a.left_var, a.right_var;
  }
  return f;
}

} // namespace

Mscn mscn(const Plane& frame, const NiqeOptions& options) {
  if (frame.rows() < options.window_size || frame.cols() < options.window_size)
    throw ConfigError("niqe: frame smaller than the MSCN window");
  const auto w = gaussian_kernel(options.window_size, options.window_sigma);
  const Plane image = frame * 255.0;
  const Plane mu = filter_separable(image, w, w);
  const Plane second = filter_separable(Plane(image.square()), w, w);
  Mscn out;
  out.local_std = (second - mu.square()).abs().sqrt();
  out.coeffs = (image - mu) / (out.local_std + 1.0);
  return out;
}

GgdFit fit_ggd(std::span<const double> samples) {
  if (samples.size() < 100)
    throw ConfigError("fit_ggd: need at least 100 samples, got " + std::to_string(samples.size()));
  double sq = 0, ab = 0;
  for (double x : samples) {
    sq += x * x;
    ab += std::abs(x);
  }
  const double n = static_cast<double>(samples.size());
  sq /= n;
  ab /= n;
  if (!(ab > 0)) throw NumericalError("fit_ggd: degenerate distribution (all samples zero)");
  return {shape_table().invert(sq / (ab * ab)), sq};
}

AggdFit fit_aggd(std::span<const double> samples) {
  if (samples.size() < 100)
    throw ConfigError("fit_aggd: need at least 100 samples, got " + std::to_string(samples.size()));
  double left_sq = 0, right_sq = 0, ab = 0, sq = 0;
  std::size_t left_n = 0, right_n = 0;
  for (double x : samples) {
    if (x < 0) {
      left_sq += x * x;
      ++left_n;
    } else if (x > 0) {
      right_sq += x * x;
      ++right_n;
    }
    ab += std::abs(x);
    sq += x * x;
  }
  const double n = static_cast<double>(samples.size());
  if (!(sq > 0)) throw NumericalError("fit_aggd: degenerate distribution (all samples zero)");
  constexpr double eps = 1e-12;
  AggdFit out;
  out.one_sided = left_n == 0 || right_n == 0;
  const double left_std = left_n ? std::sqrt(left_sq / left_n) : eps;
  const double right_std = right_n ? std::sqrt(right_sq / right_n) : eps;

  const double gamma_hat = left_std / right_std;
  const double r_hat = (ab / n) * (ab / n) / (sq / n);
  const double r_norm = r_hat * (gamma_hat * gamma_hat * gamma_hat + 1) * (gamma_hat + 1) /
                        ((gamma_hat * gamma_hat + 1) * (gamma_hat * gamma_hat + 1));
  // The AGGD table is the reciprocal of the GGD ratio.
  out.shape = shape_table().invert(1.0 / r_norm);
  const double a = out.shape;
  const double scale = std::sqrt(std::exp(std::lgamma(1 / a) - std::lgamma(3 / a)));
  out.mean = (right_std - left_std) * std::exp(std::lgamma(2 / a) - std::lgamma(1 / a)) * scale;
  out.left_var = left_std * left_std;
  out.right_var = right_std * right_std;
  return out;
}

Plane downsample_half(const Plane& frame) {
  const Plane rows_done = decimate_rows(frame);
  const Plane transposed = rows_done.transpose();
  return decimate_rows(transposed).transpose();
}

namespace {

struct PatchSet {
  Eigen::MatrixXd features; // patches x 36
  Eigen::VectorXd sharpness;
};

PatchSet compute_patches(const Plane& frame, const NiqeOptions& options) {
  const int p = options.patch_size;
  if (p < 2 || p % 2 != 0) throw ConfigError("niqe: patch size must be even and >= 2");
  const Index prow = frame.rows() / p, pcol = frame.cols() / p;
  if (prow < 1 || pcol < 1)
    throw ConfigError("niqe: frame " + std::to_string(frame.cols()) + "x" +
                      std::to_string(frame.rows()) + " smaller than one " + std::to_string(p) +
                      "-pixel patch");
  PatchSet out;
  out.features.resize(prow * pcol, kNiqeFeatureDim);
  out.sharpness.resize(prow * pcol);

  Plane image = frame.topLeftCorner(prow * p, pcol * p);
  for (int scale = 0; scale < 2; ++scale) {
    const int size = p >> scale;
    const Mscn m = mscn(image, options);
    for (Index r = 0; r < prow; ++r)
      for (Index c = 0; c < pcol; ++c) {
        const Index idx = r * pcol + c;
        const Plane block = m.coeffs.block(r * size, c * size, size, size);
        out.features.row(idx).segment(18 * scale, 18) = patch_feature_row(block).transpose();
        if (scale == 0) out.sharpness(idx) = m.local_std.block(r * size, c * size, size, size).mean();
      }
    if (scale == 0) image = downsample_half(image);
  }
  return out;
}

Eigen::MatrixXd covariance(const Eigen::MatrixXd& rows) {
  if (rows.rows() < 2) return Eigen::MatrixXd::Zero(rows.cols(), rows.cols());
  const Eigen::MatrixXd centered = rows.rowwise() - rows.colwise().mean();
  return centered.transpose() * centered / static_cast<double>(rows.rows() - 1);
}

} // namespace

Eigen::MatrixXd patch_features(const Plane& frame, const NiqeOptions& options) {
  return compute_patches(frame, options).features;
}

Eigen::VectorXd niqe_features(const Plane& frame, const NiqeOptions& options) {
  return patch_features(frame, options).colwise().mean().transpose();
}

NiqeModel train_model(std::span<const Plane> corpus, const NiqeOptions& options) {
  if (corpus.size() < 10)
    throw ConfigError("train_model: need at least 10 pristine images, got " +
                      std::to_string(corpus.size()));
  if (!(options.sharpness_fraction > 0 && options.sharpness_fraction <= 1))
    throw ConfigError("train_model: sharpness fraction must be in (0, 1]");
  std::vector<Eigen::VectorXd> kept;
  for (const auto& image : corpus) {
    const PatchSet set = compute_patches(image, options);
    const double threshold = options.sharpness_fraction * set.sharpness.maxCoeff();
    for (Index i = 0; i < set.features.rows(); ++i)
      if (set.sharpness(i) >= threshold && set.features.row(i).allFinite())
        kept.push_back(set.features.row(i).transpose());
  }
  if (kept.size() < 2)
    throw NumericalError("train_model: only " + std::to_string(kept.size()) +
                         " patches survived sharpness selection");
  Eigen::MatrixXd all(kept.size(), kNiqeFeatureDim);
  for (std::size_t i = 0; i < kept.size(); ++i) all.row(i) = kept[i].transpose();

  NiqeModel model;
  model.mu = all.colwise().mean().transpose();
  model.sigma = covariance(all);
  model.sigma = (model.sigma + model.sigma.transpose()) / 2;
  model.patch_size = options.patch_size;
  model.sharpness_fraction = options.sharpness_fraction;
  return model;
}

double mvg_distance(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& sigma1,
                    const Eigen::VectorXd& mu2, const Eigen::MatrixXd& sigma2) {
  const Eigen::MatrixXd pooled = (sigma1 + sigma2) / 2;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(pooled);
  if (eig.info() != Eigen::Success) throw NumericalError("niqe: covariance eigensolver failed");
  const double largest = eig.eigenvalues().cwiseAbs().maxCoeff();
  const double tol = 1e-10 * largest;
  const Eigen::VectorXd proj = eig.eigenvectors().transpose() * (mu1 - mu2);
  double q = 0;
  for (Index k = 0; k < proj.size(); ++k)
    if (eig.eigenvalues()(k) > tol) q += proj(k) * proj(k) / eig.eigenvalues()(k);
  return std::sqrt(std::max(q, 0.0));
}

double niqe_score(const Plane& frame, const NiqeModel& model) {
  if (model.mu.size() != kNiqeFeatureDim || model.sigma.rows() != kNiqeFeatureDim ||
      model.sigma.cols() != kNiqeFeatureDim)
    throw ConfigError("niqe: model must be 36-dimensional");
  NiqeOptions options;
  options.patch_size = model.patch_size;
  const Eigen::MatrixXd feats = patch_features(frame, options);
  if (!feats.allFinite()) throw NumericalError("niqe: non-finite patch features");
  return mvg_distance(model.mu, model.sigma, feats.colwise().mean().transpose(), covariance(feats));
}

std::vector<double> frame_scores(const LumaSequence& seq, const NiqeModel& model, unsigned threads) {
  std::vector<double> scores(seq.size());
  parallel_for(seq.size(), threads, [&](std::size_t i) { scores[i] = niqe_score(seq.frames[i], model); });
  return scores;
}

double video_spatial_score(const LumaSequence& seq, const NiqeModel& model) {
  if (seq.empty()) throw ConfigError("niqe: empty sequence");
  const auto scores = frame_scores(seq, model);
  return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
}

namespace {

template <typename T>
void put(std::ostream& out, T v) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  const U bits = std::bit_cast<U>(v);
  for (std::size_t i = 0; i < sizeof(U); ++i) out.put(static_cast<char>(bits >> (8 * i)));
}

template <typename T>
T get(const unsigned char*& p) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= U(p[i]) << (8 * i);
  p += sizeof(U);
  return std::bit_cast<T>(bits);
}

} // namespace

void save_model(const std::filesystem::path& path, const NiqeModel& model) {
  const auto dim = static_cast<std::uint32_t>(model.mu.size());
  if (model.sigma.rows() != model.mu.size() || model.sigma.cols() != model.mu.size())
    throw DimensionError("niqe: model mean and covariance disagree");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write("TPQINIQ1", 8);
  put<std::uint32_t>(out, dim);
  for (Index i = 0; i < model.mu.size(); ++i) put<double>(out, model.mu(i));
  for (Index r = 0; r < model.sigma.rows(); ++r)
    for (Index c = 0; c < model.sigma.cols(); ++c) put<double>(out, model.sigma(r, c));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.patch_size));
  put<double>(out, model.sharpness_fraction);
  if (!out) throw IoError("write failed: " + path.string());
}

NiqeModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in),
                                         std::istreambuf_iterator<char>()};
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "TPQINIQ1", 8) != 0)
    throw ParseError(path.string() + ": missing TPQINIQ1 magic at byte 0");
  const unsigned char* p = bytes.data() + 8;
  const auto dim = get<std::uint32_t>(p);
  const std::size_t need = 12 + 8 * (std::size_t(dim) + std::size_t(dim) * dim) + 4 + 8;
  if (bytes.size() != need)
    throw ParseError(path.string() + ": expected " + std::to_string(need) + " bytes, found " +
                     std::to_string(bytes.size()));
  NiqeModel model;
  model.mu.resize(dim);
  model.sigma.resize(dim, dim);
  for (std::uint32_t i = 0; i < dim; ++i) model.mu(i) = get<double>(p);
  for (std::uint32_t r = 0; r < dim; ++r)
    for (std::uint32_t c = 0; c < dim; ++c) model.sigma(r, c) = get<double>(p);
  model.patch_size = static_cast<int>(get<std::uint32_t>(p));
  model.sharpness_fraction = get<double>(p);
  return model;
}

} // namespace tpqi
