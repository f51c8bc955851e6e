#include "doctest.h"
#include "support.hpp"

#include "tpqi/filter.hpp"
#include "tpqi/lgn.hpp"

using namespace tpqi;

namespace {

// Zero-insertion upsampling on a mirrored coarse grid followed by a 2-D
// filter with gain 4, evaluated directly.
Plane expand_oracle(const Plane& coarse, Index rows, Index cols, const std::vector<double>& k) {
  const Index h = static_cast<Index>(k.size()) / 2, p = 2;
  const Plane padded = pad_mirror(coarse, p, p, p, p);
  Plane up = Plane::Zero(2 * padded.rows(), 2 * padded.cols());
  for (Index i = 0; i < padded.rows(); ++i)
    for (Index j = 0; j < padded.cols(); ++j) up(2 * i, 2 * j) = padded(i, j);
  Plane out = Plane::Zero(rows, cols);
  for (Index y = 0; y < rows; ++y)
    for (Index x = 0; x < cols; ++x)
      for (Index t = 0; t < static_cast<Index>(k.size()); ++t)
        for (Index u = 0; u < static_cast<Index>(k.size()); ++u)
          out(y, x) += 4 * k[t] * k[u] * up(y + 2 * p - (t - h), x + 2 * p - (u - h));
  return out;
}

} // namespace

TEST_CASE("default configuration") {
  const LgnConfig cfg;
  CHECK(cfg.levels == 5);
  CHECK(cfg.norm_constant_per_level == std::vector<double>(4, 0.17));
  CHECK(cfg.norm_kernel.sum() == doctest::Approx(1.0));
  CHECK(cfg.norm_kernel(2, 2) == doctest::Approx(36.0 / 256));
  CHECK_NOTHROW(cfg.validate());

  LgnConfig bad = cfg;
  bad.lowpass_kernel = {0.5, 0.6, 0.1};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.norm_constant_per_level[1] = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.levels = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("reduce and expand match direct oracles") {
  const LgnConfig cfg;
  for (auto [rows, cols] : {std::pair<Index, Index>{16, 16}, {13, 9}, {7, 22}}) {
    const Plane src = test::random_plane(rows, cols, static_cast<std::uint64_t>(rows * cols));
    const Plane reduced = pyramid_reduce(src, cfg.lowpass_kernel);
    const Plane blurred = filter2d(src, Eigen::Map<const Eigen::VectorXd>(cfg.lowpass_kernel.data(), 5) *
                                            Eigen::Map<const Eigen::RowVectorXd>(cfg.lowpass_kernel.data(), 5));
    REQUIRE(reduced.rows() == (rows + 1) / 2);
    REQUIRE(reduced.cols() == (cols + 1) / 2);
    for (Index r = 0; r < reduced.rows(); ++r)
      for (Index c = 0; c < reduced.cols(); ++c)
        CHECK(reduced(r, c) == doctest::Approx(blurred(2 * r, 2 * c)).epsilon(1e-12));

    const Plane expanded = pyramid_expand(reduced, rows, cols, cfg.lowpass_kernel);
    CHECK((expanded - expand_oracle(reduced, rows, cols, cfg.lowpass_kernel)).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("laplacian pyramid") {
  const LgnConfig cfg;
  SUBCASE("constant frame has zero bands and a constant residual") {
    const auto bands = laplacian_pyramid(Plane::Constant(64, 48, 0.42), cfg);
    REQUIRE(bands.size() == 5);
    for (int k = 0; k < 4; ++k) CHECK(bands[k].abs().maxCoeff() < 1e-14);
    CHECK((bands[4] - 0.42).abs().maxCoeff() < 1e-14);
    CHECK(bands[4].rows() == 4);
    CHECK(bands[4].cols() == 3);
  }
  SUBCASE("impulse reconstructs") {
    Plane impulse = Plane::Zero(33, 40);
    impulse(16, 20) = 1.0;
    const Plane back = collapse_pyramid(laplacian_pyramid(impulse, cfg), cfg);
    CHECK((back - impulse).abs().maxCoeff() < 1e-5);
  }
  SUBCASE("random 64x64 reconstructs") {
    const Plane f = test::random_plane(64, 64, 11);
    CHECK((collapse_pyramid(laplacian_pyramid(f, cfg), cfg) - f).abs().maxCoeff() < 1e-5);
  }
  SUBCASE("too small for the level count") {
    CHECK_THROWS_AS(laplacian_pyramid(Plane::Zero(15, 64), cfg), ConfigError);
    CHECK_NOTHROW(laplacian_pyramid(Plane::Zero(16, 16), cfg));
  }
}

TEST_CASE("divisive normalization") {
  const LgnConfig cfg;
  const double c = 0.17;
  CHECK((divisive_normalize(Plane::Zero(9, 9), cfg, 0) == 0).all());

  const Plane constant = Plane::Constant(12, 12, -0.3);
  CHECK((divisive_normalize(constant, cfg, 1) - (-0.3 / (c + 0.3))).abs().maxCoeff() < 1e-12);

  Plane impulse = Plane::Zero(11, 11);
  impulse(5, 5) = 1.0;
  const double w0 = cfg.norm_kernel(2, 2);
  CHECK(divisive_normalize(impulse, cfg, 2)(5, 5) == doctest::Approx(1.0 / (c + w0)).epsilon(1e-12));

  const Plane band = test::random_plane(20, 20, 3, -1, 1);
  const Plane y = divisive_normalize(band, cfg, 0);
  CHECK(((y.abs() < band.abs() / c) || band == 0).all());
}

TEST_CASE("lgn features") {
  const LgnConfig cfg;
  CHECK(lgn_feature_dim(64, 64, cfg) == 64 * 64 + 32 * 32 + 16 * 16 + 8 * 8);
  CHECK(lgn_feature_dim(480, 270, cfg) == 480 * 270 + 240 * 135 + 120 * 68 + 60 * 34);

  CHECK(lgn_features(Plane::Constant(64, 64, 0.7), cfg).cwiseAbs().maxCoeff() < 1e-12);

  const Plane f = test::random_plane(48, 64, 21);
  const Eigen::VectorXd a = lgn_features(f, cfg);
  CHECK(a.size() == lgn_feature_dim(64, 48, cfg));
  CHECK(a == lgn_features(f, cfg));

  SUBCASE("global luminance shift") {
    const Eigen::VectorXd b = lgn_features(Plane(f + 0.25), cfg);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-6);
  }
  SUBCASE("contrast scaling is compressive") {
    for (double s : {1.5, 2.0, 10.0}) {
      const Eigen::VectorXd b = lgn_features(Plane(f * s), cfg);
      Index violations = 0;
      for (Index i = 0; i < a.size(); ++i) {
        if (a(i) == 0) continue;
        violations += !(std::abs(b(i)) < s * std::abs(a(i)) && std::abs(b(i)) > std::abs(a(i)));
      }
      CHECK(violations == 0);
    }
  }
}
