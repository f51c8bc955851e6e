#pragma once

// Spatial filtering helpers shared by the LGN, V1 and NIQE stages. All
// boundaries use half-sample symmetric mirroring: ... c b a | a b c ...

#include "tpqi/core.hpp"

#include <cmath>
#include <vector>

namespace tpqi {

/// Maps any integer index into [0, n) by symmetric reflection.
inline Index mirror_index(Index i, Index n) {
  if (n == 1) return 0;
  const Index period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

template <typename Scalar>
PlaneT<Scalar> pad_mirror(const PlaneT<Scalar>& src, Index top, Index bottom,
                          Index left, Index right) {
  const Index rows = src.rows(), cols = src.cols();
  PlaneT<Scalar> out(rows + top + bottom, cols + left + right);
  for (Index r = 0; r < out.rows(); ++r) {
    const Index sr = mirror_index(r - top, rows);
    for (Index c = 0; c < out.cols(); ++c)
      out(r, c) = src(sr, mirror_index(c - left, cols));
  }
  return out;
}

/// Correlates every row with `kernel` (odd length, centered).
template <typename Scalar>
PlaneT<Scalar> filter_rows(const PlaneT<Scalar>& src, const std::vector<Scalar>& kernel) {
  const Index half = static_cast<Index>(kernel.size()) / 2;
  const Index rows = src.rows(), cols = src.cols();
  PlaneT<Scalar> out(rows, cols);
  std::vector<Scalar> line(cols + 2 * half);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols + 2 * half; ++c)
      line[c] = src(r, mirror_index(c - half, cols));
    for (Index c = 0; c < cols; ++c) {
      Scalar acc(0);
      for (std::size_t t = 0; t < kernel.size(); ++t) acc += kernel[t] * line[c + t];
      out(r, c) = acc;
    }
  }
  return out;
}

template <typename Scalar>
PlaneT<Scalar> filter_cols(const PlaneT<Scalar>& src, const std::vector<Scalar>& kernel) {
  const Index half = static_cast<Index>(kernel.size()) / 2;
  const Index rows = src.rows(), cols = src.cols();
  PlaneT<Scalar> out = PlaneT<Scalar>::Zero(rows, cols);
  for (std::size_t t = 0; t < kernel.size(); ++t) {
    const Index offset = static_cast<Index>(t) - half;
    for (Index r = 0; r < rows; ++r)
      out.row(r) += kernel[t] * src.row(mirror_index(r + offset, rows));
  }
  return out;
}

template <typename Scalar>
PlaneT<Scalar> filter_separable(const PlaneT<Scalar>& src, const std::vector<Scalar>& kx,
                                const std::vector<Scalar>& ky) {
  return filter_cols(filter_rows(src, kx), ky);
}

/// Direct 2-D correlation with an odd-sized kernel and mirror boundaries.
template <typename Scalar, typename Derived>
PlaneT<Scalar> filter2d(const PlaneT<Scalar>& src, const Eigen::DenseBase<Derived>& kernel) {
  const Index kh = kernel.rows() / 2, kw = kernel.cols() / 2;
  const PlaneT<Scalar> padded = pad_mirror(src, kh, kh, kw, kw);
  PlaneT<Scalar> out = PlaneT<Scalar>::Zero(src.rows(), src.cols());
  for (Index i = 0; i < kernel.rows(); ++i)
    for (Index j = 0; j < kernel.cols(); ++j)
      out += Scalar(kernel(i, j)) * padded.block(i, j, src.rows(), src.cols());
  return out;
}

/// Normalized, sampled Gaussian of the given size (odd) and std.
inline std::vector<double> gaussian_kernel(int size, double sigma) {
  std::vector<double> k(size);
  const int half = size / 2;
  double sum = 0;
  for (int i = 0; i < size; ++i) {
    const double x = i - half;
    k[i] = std::exp(-x * x / (2 * sigma * sigma));
    sum += k[i];
  }
  for (auto& v : k) v /= sum;
  return k;
}

} // namespace tpqi
