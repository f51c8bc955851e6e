#pragma once

// Per-video PCA of frame features into a low-dimensional trajectory.
//
// Rows of the feature matrix are frames. Two numerical routes give the same
// projections: eigendecomposition of the D x D covariance, and the N x N
// Gram (snapshot) matrix of the centered rows, which is the practical one
// when D >> N. Principal axes are sign-normalized so that each axis's
// largest-magnitude loading is positive.

#include "tpqi/core.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace tpqi {

enum class Domain { lgn, v1, external };

std::string to_string(Domain d);

template <typename Scalar>
struct TrajectoryT {
  MatrixT<Scalar> points;                // N x d, row i is x_i
  VectorT<Scalar> explained_variance;    // d, descending, sample variance
  Domain domain = Domain::external;

  Index frames() const { return points.rows(); }
  Index dim() const { return points.cols(); }
};
using Trajectory = TrajectoryT<double>;

namespace detail {

inline void check_pca_shape(Index rows, Index cols, Index d) {
  if (rows < 3) throw ConfigError("pca: need at least 3 frames, got " + std::to_string(rows));
  if (d < 1 || d > std::min(rows, cols))
    throw ConfigError("pca: dimension " + std::to_string(d) + " exceeds min(N, D) = " +
                      std::to_string(std::min(rows, cols)));
}

/// Eigenvalues at or below this fraction of the largest are treated as zero.
template <typename Scalar>
Scalar rank_tolerance() {
  return Scalar(64) * Eigen::NumTraits<Scalar>::epsilon();
}

/// Flips `axis` so its largest-magnitude entry is positive (first on ties).
template <typename Derived>
typename Derived::Scalar sign_of_largest(const Eigen::MatrixBase<Derived>& axis) {
  Index arg = 0;
  axis.cwiseAbs().maxCoeff(&arg);
  return axis(arg) < 0 ? -1 : 1;
}

} // namespace detail

template <typename Derived>
MatrixT<typename Derived::Scalar> center_rows(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const VectorT<Scalar> mean = m.colwise().mean().transpose();
  return m.rowwise() - mean.transpose();
}

/// PCA through the D x D covariance matrix.
template <typename Derived>
TrajectoryT<typename Derived::Scalar> covariance_pca(const Eigen::MatrixBase<Derived>& m, Index d) {
  using Scalar = typename Derived::Scalar;
  detail::check_pca_shape(m.rows(), m.cols(), d);
  const MatrixT<Scalar> centered = center_rows(m);
  const MatrixT<Scalar> cov =
      (centered.transpose() * centered) / static_cast<Scalar>(m.rows() - 1);
  Eigen::SelfAdjointEigenSolver<MatrixT<Scalar>> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericalError("pca: covariance eigensolver failed");

  const Index dim = m.cols();
  const Scalar largest = std::max(eig.eigenvalues()(dim - 1), Scalar(0));
  TrajectoryT<Scalar> out;
  out.points = MatrixT<Scalar>::Zero(m.rows(), d);
  out.explained_variance = VectorT<Scalar>::Zero(d);
  for (Index k = 0; k < d; ++k) {
    const Index col = dim - 1 - k; // eigenvalues ascend
    const Scalar lambda = eig.eigenvalues()(col);
    if (!(lambda > detail::rank_tolerance<Scalar>() * largest)) continue;
    VectorT<Scalar> axis = eig.eigenvectors().col(col);
    axis *= detail::sign_of_largest(axis);
    out.points.col(k) = centered * axis;
    out.explained_variance(k) = lambda;
  }
  return out;
}

/// Eigen-decomposition of a centered Gram matrix into trajectory points.
/// `loadings_of(U)` must return X_c^T U for an N x d block of eigenvectors
/// U; the principal axes are its columns up to positive scale, which is all
/// the sign convention needs.
template <typename Scalar, typename LoadingsFn>
TrajectoryT<Scalar> trajectory_from_gram(const MatrixT<Scalar>& gram, Index d,
                                         LoadingsFn&& loadings_of) {
  const Index n = gram.rows();
  Eigen::SelfAdjointEigenSolver<MatrixT<Scalar>> eig(gram);
  if (eig.info() != Eigen::Success) throw NumericalError("pca: Gram eigensolver failed");
  const Scalar largest = std::max(eig.eigenvalues()(n - 1), Scalar(0));

  // Top-d eigenvectors in descending order.
  MatrixT<Scalar> top = eig.eigenvectors().rightCols(d).rowwise().reverse();
  VectorT<Scalar> lambdas = eig.eigenvalues().tail(d).reverse();
  const MatrixT<Scalar> loadings = loadings_of(top);

  TrajectoryT<Scalar> out;
  out.points = MatrixT<Scalar>::Zero(n, d);
  out.explained_variance = VectorT<Scalar>::Zero(d);
  for (Index k = 0; k < d; ++k) {
    const Scalar lambda = lambdas(k);
    if (!(lambda > detail::rank_tolerance<Scalar>() * largest)) continue;
    const Scalar sign = detail::sign_of_largest(loadings.col(k));
    out.points.col(k) = sign * std::sqrt(lambda) * top.col(k);
    out.explained_variance(k) = lambda / static_cast<Scalar>(n - 1);
  }
  return out;
}

/// PCA through the N x N Gram matrix of centered rows (snapshot method).
template <typename Derived>
TrajectoryT<typename Derived::Scalar> gram_pca(const Eigen::MatrixBase<Derived>& m, Index d) {
  using Scalar = typename Derived::Scalar;
  detail::check_pca_shape(m.rows(), m.cols(), d);
  const MatrixT<Scalar> centered = center_rows(m);
  const MatrixT<Scalar> gram = centered * centered.transpose();
  return trajectory_from_gram<Scalar>(gram, d, [&](const MatrixT<Scalar>& u) -> MatrixT<Scalar> {
    return centered.transpose() * u;
  });
}

/// Dispatches to the cheaper route: Gram when D > N, covariance otherwise.
template <typename Derived>
TrajectoryT<typename Derived::Scalar> pca_reduce(const Eigen::MatrixBase<Derived>& m, Index d) {
  return m.cols() > m.rows() ? gram_pca(m, d) : covariance_pca(m, d);
}

/// Sum of per-column sample variances of `m`.
template <typename Derived>
typename Derived::Scalar total_variance(const Eigen::MatrixBase<Derived>& m) {
  return center_rows(m).squaredNorm() / static_cast<typename Derived::Scalar>(m.rows() - 1);
}

} // namespace tpqi
