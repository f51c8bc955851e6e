#include "doctest.h"
#include "support.hpp"

#include "tpqi/v1.hpp"

#include <numbers>

using namespace tpqi;
using std::numbers::pi;

using test::grating;

TEST_CASE("default bank") {
  const GaborBank bank = default_bank();
  REQUIRE(bank.size() == 48);
  CHECK(bank.scales == 6);
  CHECK(bank.orientations == 8);
  CHECK(bank.pool == 4);
  CHECK(bank.max_kernel_size() == 39);
  for (int s = 0; s < 6; ++s) {
    const double f = 0.25 / std::pow(std::sqrt(2.0), s);
    for (int o = 0; o < 8; ++o) {
      const auto& p = bank.filters[s * 8 + o];
      CHECK(p.frequency == doctest::Approx(f).epsilon(1e-14));
      CHECK(p.orientation == doctest::Approx(o * pi / 8).epsilon(1e-14));
      CHECK(p.sigma * p.frequency == doctest::Approx(0.56));
      CHECK(p.gamma == 0.5);
      CHECK(p.eta == 0.5);
      CHECK(p.phase == 0);
      CHECK(p.size == 39);
    }
  }
}

TEST_CASE("gabor kernel") {
  GaborParams p;
  p.frequency = 0.2;
  p.sigma = 3;
  p.phase = 0.7;
  p.size = 15;
  const int h = 7;

  SUBCASE("center sample") {
    const auto k = make_gabor_kernel(p);
    const std::complex<double> expected = p.frequency * p.frequency / (pi * p.gamma * p.eta) *
                                          std::polar(1.0, p.phase);
    CHECK(std::abs(k(h, h) - expected) < 1e-15);
  }
  SUBCASE("orientation 0 is symmetric in y") {
    p.phase = 0;
    const auto k = make_gabor_kernel(p);
    for (int i = 0; i < 15; ++i)
      for (int j = 0; j < 15; ++j) CHECK(std::abs(k(i, j) - k(2 * h - i, j)) < 1e-15);
  }
  SUBCASE("quarter turn is a transpose with flip") {
    const auto k0 = make_gabor_kernel(p);
    p.orientation = pi / 2;
    const auto k90 = make_gabor_kernel(p);
    for (int i = 0; i < 15; ++i)
      for (int j = 0; j < 15; ++j) CHECK(std::abs(k90(i, j) - k0(2 * h - j, i)) < 1e-12);
  }
  SUBCASE("pointwise formula") {
    p.orientation = 0.4;
    const auto k = make_gabor_kernel(p);
    const double x = 3, y = -2; // column h+3, row h-2
    const double xr = x * std::cos(0.4) + y * std::sin(0.4), yr = -x * std::sin(0.4) + y * std::cos(0.4);
    const std::complex<double> expected =
        p.frequency * p.frequency / (pi * p.gamma * p.eta) *
        std::exp(-(xr * xr + p.gamma * p.gamma * yr * yr) / (2 * p.sigma * p.sigma)) *
        std::polar(1.0, 2 * pi * p.frequency * xr + p.phase);
    CHECK(std::abs(k(h - 2, h + 3) - expected) < 1e-15);
  }
  SUBCASE("invalid parameters") {
    p.size = 14;
    CHECK_THROWS_AS(make_gabor_kernel(p), ConfigError);
    p.size = 15;
    p.frequency = 0;
    CHECK_THROWS_AS(make_gabor_kernel(p), ConfigError);
  }
}

TEST_CASE("FFT responses match direct convolution") {
  const GaborBank bank = default_bank();
  const Plane frame = test::random_plane(64, 64, 17);
  const V1Transform v1(bank, 64, 64);
  double worst = 0;
  for (std::size_t f = 0; f < bank.size(); ++f) {
    const auto direct = gabor_response_direct(frame, make_gabor_kernel(bank.filters[f]));
    worst = std::max(worst, (v1.response(frame, f) - direct).abs().maxCoeff());
  }
  CHECK(worst < 1e-5);

  const Plane wide = test::random_plane(41, 57, 18);
  const V1Transform v1w(bank, 57, 41);
  const auto direct = gabor_response_direct(wide, make_gabor_kernel(bank.filters[13]));
  CHECK((v1w.response(wide, 13) - direct).abs().maxCoeff() < 1e-5);
}

TEST_CASE("energy features") {
  const GaborBank bank = default_bank();
  const V1Transform v1(bank, 50, 45);
  CHECK(v1.feature_dim() == 48 * 13 * 12);
  CHECK(v1.features(Plane::Zero(45, 50)).cwiseAbs().maxCoeff() == 0);

  const Plane frame = test::random_plane(45, 50, 2);
  const Eigen::VectorXd feats = v1.features(frame);
  CHECK(feats.size() == v1.feature_dim());
  CHECK(feats.minCoeff() >= 0);
  CHECK(feats == v1_energy(frame, bank));

  const auto maps = v1.energy_maps(frame);
  const Plane pooled = average_pool(maps[5], 4);
  CHECK((feats.segment(5 * 13 * 12, 13 * 12) -
         Eigen::Map<const Eigen::VectorXd>(pooled.data(), pooled.size()))
            .cwiseAbs()
            .maxCoeff() < 1e-15);

  SUBCASE("constant frame gives |sum K|^2 v^2") {
    const double v = 0.6;
    const auto m = v1.energy_maps(Plane::Constant(45, 50, v));
    for (std::size_t f = 0; f < bank.size(); ++f) {
      const double expected = std::norm(make_gabor_kernel(bank.filters[f]).sum()) * v * v;
      CHECK(m[f](22, 25) == doctest::Approx(expected).epsilon(1e-6).scale(1e-12));
    }
  }
  SUBCASE("frames smaller than the kernel are rejected") {
    CHECK_THROWS_AS(V1Transform(bank, 38, 64), ConfigError);
    CHECK_THROWS_AS(v1.features(Plane::Zero(46, 50)), DimensionError);
  }
}

TEST_CASE("average_pool") {
  Plane m(3, 5);
  m << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15;
  const Plane p = average_pool(m, 2);
  REQUIRE(p.rows() == 2);
  REQUIRE(p.cols() == 3);
  CHECK(p(0, 0) == doctest::Approx(4));
  CHECK(p(0, 2) == doctest::Approx(7.5));
  CHECK(p(1, 1) == doctest::Approx(13.5));
  CHECK(p(1, 2) == doctest::Approx(15));
}

TEST_CASE("grating selectivity") {
  const GaborBank bank = default_bank();
  const Index size = 128;
  const V1Transform v1(bank, size, size);
  for (int s = 0; s < 6; ++s) {
    for (int o = 0; o < 8; ++o) {
      CAPTURE(s);
      CAPTURE(o);
      const auto& p = bank.filters[s * 8 + o];
      const Eigen::VectorXd e = v1.mean_energies(grating(size, p.frequency, p.orientation, 0));
      Index best = 0;
      e.segment(s * 8, 8).maxCoeff(&best);
      CHECK(best == o);
    }
  }
}

// Mean energy away from the 19-pixel band where mirrored borders enter the
// kernel support.
TEST_CASE("energy is phase invariant") {
  const GaborBank bank = default_bank();
  const Index size = 128, margin = 19, inner = size - 2 * margin;
  const V1Transform v1(bank, size, size);
  for (int s = 0; s < 6; ++s) {
    for (int o = 0; o < 8; ++o) {
      CAPTURE(s);
      CAPTURE(o);
      const std::size_t f = static_cast<std::size_t>(s * 8 + o);
      const auto& p = bank.filters[f];
      const double e0 = v1.energy_maps(grating(size, p.frequency, p.orientation, 0))[f]
                            .block(margin, margin, inner, inner).mean();
      for (double phase : {0.5, 1.3, 2.0, 3.0}) {
        const double e1 = v1.energy_maps(grating(size, p.frequency, p.orientation, phase))[f]
                              .block(margin, margin, inner, inner).mean();
        CHECK(std::abs(e1 / e0 - 1) < 0.01);
      }
    }
  }
}

TEST_CASE("quarter-turn rotation permutes orientations") {
  const GaborBank bank = default_bank();
  const Plane frame = test::random_plane(64, 64, 8);
  Plane rotated(64, 64);
  for (Index r = 0; r < 64; ++r)
    for (Index c = 0; c < 64; ++c) rotated(r, c) = frame(c, 63 - r);
  const V1Transform v1(bank, 64, 64);
  const Eigen::VectorXd a = v1.mean_energies(frame), b = v1.mean_energies(rotated);
  for (int s = 0; s < 6; ++s)
    for (int o = 0; o < 8; ++o)
      CHECK(std::abs(b(s * 8 + (o + 4) % 8) / a(s * 8 + o) - 1) < 0.02);
}
