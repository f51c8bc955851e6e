#include "doctest.h"
#include "support.hpp"

#include "tpqi/filter.hpp"

using namespace tpqi;

namespace {

// Direct evaluation of sum_ij k(i,j) src(mirror(r+i-h), mirror(c+j-w)).
Plane brute_correlate(const Plane& src, const Eigen::MatrixXd& k) {
  const Index h = k.rows() / 2, w = k.cols() / 2;
  Plane out(src.rows(), src.cols());
  for (Index r = 0; r < src.rows(); ++r)
    for (Index c = 0; c < src.cols(); ++c) {
      double acc = 0;
      for (Index i = 0; i < k.rows(); ++i)
        for (Index j = 0; j < k.cols(); ++j)
          acc += k(i, j) * src(mirror_index(r + i - h, src.rows()), mirror_index(c + j - w, src.cols()));
      out(r, c) = acc;
    }
  return out;
}

} // namespace

TEST_CASE("mirror_index reflects half-sample symmetrically") {
  const Index n = 4;
  const Index expected[] = {1, 0, 0, 1, 2, 3, 3, 2, 1, 0, 0};
  for (Index i = -2; i <= 8; ++i) CHECK(mirror_index(i, n) == expected[i + 2]);
  CHECK(mirror_index(-7, 1) == 0);
  CHECK(mirror_index(-9, 3) == mirror_index(-9 + 6, 3));
}

TEST_CASE("pad_mirror") {
  Plane p(2, 3);
  p << 1, 2, 3, 4, 5, 6;
  const Plane padded = pad_mirror(p, 1, 1, 2, 2);
  CHECK(padded.rows() == 4);
  CHECK(padded.cols() == 7);
  CHECK(padded(0, 0) == 2);  // row mirror(-1)=0, col mirror(-2)=1
  CHECK(padded(3, 6) == 5);  // row mirror(2)=1, col mirror(4)=1
  CHECK(padded(1, 2) == 1);
}

TEST_CASE("filter2d matches brute-force correlation with an asymmetric kernel") {
  const Plane src = test::random_plane(9, 12, 3);
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd k = test::random_matrix(5, 3, rng);
  CHECK((filter2d(src, k) - brute_correlate(src, k)).abs().maxCoeff() < 1e-12);
}

TEST_CASE("filter_separable equals filter2d with the outer-product kernel") {
  const Plane src = test::random_plane(17, 11, 4);
  const std::vector<double> kx{0.1, -0.3, 0.7, 0.2, 0.05};
  const std::vector<double> ky{0.25, 0.5, 0.25};
  Eigen::MatrixXd k(3, 5);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 5; ++j) k(i, j) = ky[i] * kx[j];
  CHECK((filter_separable(src, kx, ky) - brute_correlate(src, k)).abs().maxCoeff() < 1e-12);
}

TEST_CASE("kernels shorter than the image still mirror correctly near borders") {
  const Plane src = test::random_plane(3, 4, 9);
  const std::vector<double> k(7, 1.0 / 7);
  Eigen::MatrixXd k2 = Eigen::MatrixXd::Zero(1, 7);
  k2.row(0).setConstant(1.0 / 7);
  CHECK((filter_rows(src, k) - brute_correlate(src, k2)).abs().maxCoeff() < 1e-12);
}

TEST_CASE("gaussian_kernel") {
  const auto k = gaussian_kernel(7, 7.0 / 6.0);
  double sum = 0;
  for (double v : k) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(k[3] > k[2]);
  CHECK(k[0] == doctest::Approx(k[6]));
  CHECK(k[1] / k[3] == doctest::Approx(std::exp(-4.0 / (2 * 49.0 / 36.0))));
}
