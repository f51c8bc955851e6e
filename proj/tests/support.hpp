#pragma once

#include "tpqi/core.hpp"
#include "tpqi/trajectory.hpp"
#include "tpqi/videoio.hpp"

#include <algorithm>
#include <vector>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <unistd.h>
#include <string>

namespace tpqi::test {

inline Plane random_plane(Index rows, Index cols, std::uint64_t seed, double lo = 0, double hi = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Plane p(rows, cols);
  for (Index i = 0; i < p.size(); ++i) p.data()[i] = u(rng);
  return p;
}

inline Eigen::MatrixXd random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

/// Haar-distributed orthogonal matrix via QR with sign fix.
inline Eigen::MatrixXd random_orthogonal(Index n, std::mt19937_64& rng) {
  const Eigen::MatrixXd a = random_matrix(n, n, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index k = 0; k < n; ++k)
    if (r(k, k) < 0) q.col(k) *= -1;
  return q;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("tpqi-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

inline std::filesystem::path data_dir() { return TPQI_TEST_DATA; }

/// Bundled pristine images, sorted by name.
inline std::vector<Plane> niqe_corpus() {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(data_dir() / "niqe_corpus")) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<Plane> out;
  for (const auto& f : files) out.push_back(read_image(f));
  return out;
}

/// Additive Gaussian noise with sigma given on the [0, 255] scale, clamped to [0, 1].
inline Plane add_noise(const Plane& p, double sigma255, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma255 / 255.0);
  Plane out = p;
  for (Index i = 0; i < out.size(); ++i) out.data()[i] = std::clamp(out.data()[i] + n(rng), 0.0, 1.0);
  return out;
}

/// Cosine grating 0.5 + 0.4 cos(2 pi f (x cos theta + y sin theta) + phase).
inline Plane grating(Index size, double f, double theta, double phase) {
  Plane g(size, size);
  for (Index r = 0; r < size; ++r)
    for (Index c = 0; c < size; ++c)
      g(r, c) = 0.5 + 0.4 * std::cos(2 * std::numbers::pi * f * (c * std::cos(theta) + r * std::sin(theta)) + phase);
  return g;
}

/// PCA through the thin SVD of the centered matrix: points = U S, variances
/// s^2 / (N-1), each axis signed so its largest-magnitude loading (column of V)
/// is positive. Singular values below 1e-10 of the largest count as zero.
inline Trajectory svd_oracle(const Eigen::MatrixXd& m, Index d) {
  const Eigen::MatrixXd centered = m.rowwise() - m.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Trajectory t;
  t.points = Eigen::MatrixXd::Zero(m.rows(), d);
  t.explained_variance = Eigen::VectorXd::Zero(d);
  const double tol = 1e-10 * svd.singularValues()(0);
  for (Index k = 0; k < d && k < svd.singularValues().size(); ++k) {
    const double s = svd.singularValues()(k);
    if (s <= tol) continue;
    Index arg = 0;
    svd.matrixV().col(k).cwiseAbs().maxCoeff(&arg);
    const double sign = svd.matrixV()(arg, k) < 0 ? -1 : 1;
    t.points.col(k) = sign * s * svd.matrixU().col(k);
    t.explained_variance(k) = s * s / static_cast<double>(m.rows() - 1);
  }
  return t;
}

inline double max_diff(const Trajectory& a, const Trajectory& b) {
  return std::max((a.points - b.points).cwiseAbs().maxCoeff(),
                  (a.explained_variance - b.explained_variance).cwiseAbs().maxCoeff());
}

inline Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& p) {
  Eigen::MatrixXd d(p.rows(), p.rows());
  for (Index i = 0; i < p.rows(); ++i)
    for (Index j = 0; j < p.rows(); ++j) d(i, j) = (p.row(i) - p.row(j)).norm();
  return d;
}

} // namespace tpqi::test
