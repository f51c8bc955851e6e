// Acceptance report: one PASS/FAIL line per primary criterion.
#include "support.hpp"

#include "tpqi/descriptor.hpp"
#include "tpqi/evaluate.hpp"
#include "tpqi/lgn.hpp"
#include "tpqi/niqe.hpp"
#include "tpqi/pipeline.hpp"
#include "tpqi/synthgen.hpp"
#include "tpqi/trajectory.hpp"
#include "tpqi/v1.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <functional>
#include <numbers>
#include <sstream>
#include <thread>

using namespace tpqi;
using std::numbers::pi;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

double cpu_seconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

Eigen::MatrixXd pts(std::initializer_list<std::pair<double, double>> list) {
  Eigen::MatrixXd m(static_cast<Index>(list.size()), 2);
  Index i = 0;
  for (auto [x, y] : list) m.row(i++) << x, y;
  return m;
}

void descriptor_analytics(Outcome& o) {
  const double q_right = pi / 2 * std::pow(2.0, 0.25);
  const auto p2 = [](double x, double y) { return Eigen::Vector2d(x, y); };
  o.require(*curvature(p2(0, 0), p2(1, 0), p2(2, 0)) == 0, "straight theta");
  o.require(std::abs(*curvature(p2(0, 0), p2(1, 0), p2(1, 1)) - pi / 2) < 1e-9, "right-angle theta");
  o.require(std::abs(*curvature(p2(0, 0), p2(1, 0), p2(0, 0)) - pi) < 1e-9, "reversal theta");
  o.require(std::abs(*distance(p2(0, 0), p2(1, 0), p2(1, 1), DistanceOption::norm_of_sum) - std::sqrt(2.0)) < 1e-9,
            "right-angle S");
  o.require(*distance(p2(0, 0), p2(1, 0), p2(0, 0), DistanceOption::norm_of_sum) == 0, "reversal S");
  o.require(std::abs(*distance(p2(0, 0), p2(1, 0), p2(1, 1), DistanceOption::point_to_line) - 1) < 1e-9,
            "point-to-line S");
  o.require(vpt_instant(0.0, 2.0) == 0 && vpt_instant(pi, 0.0) == 0, "zero Q");
  o.require(std::abs(vpt_instant(pi / 2, std::sqrt(2.0)) - q_right) < 1e-9, "right-angle Q");
  o.require(std::abs(linear_error_instant(p2(0, 0), p2(1, 0), p2(1, 1)) - std::sqrt(2.0)) < 1e-9, "linear error");
  const DomainScore four = domain_score(pts({{0, 0}, {1, 0}, {1, 1}, {2, 1}}));
  o.require(std::abs(four.value - std::log(q_right)) < 1e-9, "4-point score");
  const DomainScore line = domain_score(pts({{0, 0}, {0.3, 0.1}, {1.2, 0.4}, {1.5, 0.5}}));
  o.require(line.degenerate && line.value == std::log(kScoreFloor), "straight line floors");
  o.detail << "4-point score " << four.value << " (closed form " << std::log(q_right) << ")";
}

void rigid_motion(Outcome& o) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<Index> nd(3, 64), dd(1, 16);
  std::uniform_real_distribution<double> scale(0.01, 100);
  std::normal_distribution<double> n;
  double worst = 0, worst_scale = 0;
  int checked = 0;
  for (int t = 0; t < 1000; ++t) {
    const Index N = nd(rng), d = dd(rng);
    const Eigen::MatrixXd m = test::random_matrix(N, d, rng);
    Eigen::MatrixXd q = test::random_orthogonal(d, rng);
    if (t % 2) q.col(0) *= -1; // reflection
    Eigen::RowVectorXd shift(d);
    for (Index k = 0; k < d; ++k) shift(k) = 10 * n(rng);
    const DescriptorSeries a = describe(m, {}), b = describe(Eigen::MatrixXd((m * q).rowwise() + shift), {});
    o.require(a.q.size() == b.q.size(), "instant count");
    for (std::size_t i = 0; i < a.q.size() && i < b.q.size(); ++i)
      worst = std::max({worst, rel(a.theta[i], b.theta[i]), rel(a.s[i], b.s[i]), rel(a.q[i], b.q[i])});
    // The covariance holds above the log floor; straight 1-D units floor out.
    const double s = scale(rng);
    const DomainScore base = domain_score(m), scaled = domain_score(Eigen::MatrixXd(s * m));
    if (base.degenerate || scaled.degenerate) continue;
    ++checked;
    worst_scale = std::max(worst_scale, std::abs(scaled.value - base.value - 0.5 * std::log(s)));
  }
  o.require(worst < 1e-9, "rigid motion");
  o.require(worst_scale < 1e-9, "scale covariance");
  o.require(checked > 900, "enough non-degenerate trajectories");
  o.detail << "max rel change " << worst << ", max scale-shift error " << worst_scale << " over " << checked
           << " non-degenerate trajectories";
}

void pca_oracle(Outcome& o) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<Index> nd(3, 32), dd(1, 256);
  double worst = 0, worst_geo = 0;
  for (int t = 0; t < 200; ++t) {
    const Index N = nd(rng), D = dd(rng);
    const Index d = std::uniform_int_distribution<Index>(1, std::min<Index>({N, D, 10}))(rng);
    const Eigen::MatrixXd m = test::random_matrix(N, D, rng);
    const Trajectory oracle = test::svd_oracle(m, d);
    worst = std::max({worst, test::max_diff(gram_pca(m, d), oracle), test::max_diff(pca_reduce(m, d), oracle),
                      test::max_diff(covariance_pca(m, d), oracle)});

    const Eigen::MatrixXd q = test::random_orthogonal(D, rng);
    const Trajectory a = pca_reduce(m, d), b = pca_reduce(Eigen::MatrixXd(m * q), d);
    worst_geo = std::max(worst_geo, (test::pairwise_distances(a.points) - test::pairwise_distances(b.points))
                                        .cwiseAbs().maxCoeff());
    worst_geo = std::max(worst_geo, (a.explained_variance - b.explained_variance).cwiseAbs().maxCoeff());
    if (N >= 3) {
      const DescriptorSeries sa = describe(a.points, {}), sb = describe(b.points, {});
      for (std::size_t i = 0; i < sa.theta.size() && i < sb.theta.size(); ++i)
        worst_geo = std::max(worst_geo, std::abs(sa.theta[i] - sb.theta[i]));
    }
  }
  o.require(worst < 1e-8, "oracle agreement");
  o.require(worst_geo < 1e-8, "orthogonal invariance");
  o.detail << "max |diff| vs SVD oracle " << worst << ", orthogonal-input drift " << worst_geo;
}

void gabor_bank(Outcome& o) {
  const GaborBank bank = default_bank();
  o.require(bank.size() == 48 && bank.scales == 6 && bank.orientations == 8, "48 filters");
  for (const auto& f : bank.filters) o.require(f.size == 39, "kernel size 39");

  const Index size = 128, margin = 19, inner = size - 2 * margin;
  const V1Transform v1(bank, size, size);
  int selective = 0;
  double drift = 0;
  for (std::size_t f = 0; f < bank.size(); ++f) {
    const auto& p = bank.filters[f];
    const int s = static_cast<int>(f) / 8;
    const Eigen::VectorXd e = v1.mean_energies(test::grating(size, p.frequency, p.orientation, 0));
    Index best = 0;
    e.segment(s * 8, 8).maxCoeff(&best);
    selective += best == static_cast<Index>(f % 8);
    const double e0 =
        v1.energy_maps(test::grating(size, p.frequency, p.orientation, 0))[f].block(margin, margin, inner, inner).mean();
    for (double phase : {0.5, 1.3, 2.0, 3.0}) {
      const double e1 = v1.energy_maps(test::grating(size, p.frequency, p.orientation, phase))[f]
                            .block(margin, margin, inner, inner).mean();
      drift = std::max(drift, std::abs(e1 / e0 - 1));
    }
  }
  o.require(selective == 48, "grating selectivity");
  o.require(drift < 0.01, "phase invariance");

  // Quadrature: energy is |complex response|^2, and a quarter-period phase
  // shift of the kernel turns its real part into minus the imaginary part.
  const Plane frame = test::random_plane(size, size, 5);
  double quad = 0;
  for (std::size_t f : {0u, 13u, 47u}) {
    const Eigen::ArrayXXcd r = v1.response(frame, f);
    const Plane energy = v1.energy_maps(frame)[f];
    quad = std::max(quad, (energy - r.abs2()).abs().maxCoeff() / energy.maxCoeff());
    GaborParams shifted = bank.filters[f];
    shifted.phase += pi / 2;
    const Eigen::MatrixXcd k0 = make_gabor_kernel(bank.filters[f]), k1 = make_gabor_kernel(shifted);
    quad = std::max(quad, (k1.real() + k0.imag()).cwiseAbs().maxCoeff() / k0.cwiseAbs().maxCoeff());
  }
  o.require(quad < 1e-12, "quadrature");

  Plane rotated(64, 64);
  const Plane square = test::random_plane(64, 64, 8);
  for (Index r = 0; r < 64; ++r)
    for (Index c = 0; c < 64; ++c) rotated(r, c) = square(c, 63 - r);
  const V1Transform small(bank, 64, 64);
  const Eigen::VectorXd a = small.mean_energies(square), b = small.mean_energies(rotated);
  double perm = 0;
  for (int s = 0; s < 6; ++s)
    for (int k = 0; k < 8; ++k) perm = std::max(perm, std::abs(b(s * 8 + (k + 4) % 8) / a(s * 8 + k) - 1));
  o.require(perm < 0.02, "rotation permutation");
  o.detail << selective << "/48 selective, interior phase drift " << 100 * drift << "%, quadrature " << quad
           << ", rotation-permutation error " << 100 * perm << "%";
}

void lgn(Outcome& o) {
  const LgnConfig cfg;
  double recon = 0, dc = 0;
  Index violations = 0;
  for (int t = 0; t < 100; ++t) {
    const Plane f = test::random_plane(64, 64, 1000 + t);
    recon = std::max(recon, (collapse_pyramid(laplacian_pyramid(f, cfg), cfg) - f).abs().maxCoeff());
    const Eigen::VectorXd a = lgn_features(f, cfg);
    if (t < 20) {
      dc = std::max(dc, (lgn_features(Plane(f + 0.3), cfg) - a).cwiseAbs().maxCoeff());
      for (double s : {1.5, 4.0}) {
        const Eigen::VectorXd b = lgn_features(Plane(f * s), cfg);
        for (Index i = 0; i < a.size(); ++i)
          if (a(i) != 0) violations += !(std::abs(b(i)) < s * std::abs(a(i)));
      }
    }
  }
  o.require(recon < 1e-5, "reconstruction");
  o.require(dc < 1e-6, "DC shift");
  o.require(violations == 0, "compressive scaling");
  o.detail << "max reconstruction error " << recon << ", DC-shift change " << dc << ", compressive violations "
           << violations;
}

void niqe(Outcome& o) {
  const auto draw = [](auto dist, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<double> v(100000);
    for (auto& x : v) x = dist(rng);
    return v;
  };
  const double g = fit_ggd(draw(std::normal_distribution<double>(0, 1), 1)).shape;
  std::exponential_distribution<double> e(1.0);
  const double l = fit_ggd(draw([&](auto& rng) { return e(rng) - e(rng); }, 2)).shape;
  const double ag = fit_aggd(draw(std::normal_distribution<double>(0, 1), 3)).shape;
  o.require(std::abs(g - 2) < 0.1, "gaussian GGD shape");
  o.require(std::abs(l - 1) < 0.1, "laplacian GGD shape");
  o.require(std::abs(ag - 2) < 0.15, "gaussian AGGD shape");

  const auto corpus = test::niqe_corpus();
  const NiqeModel model = train_model(corpus);
  const double self = mvg_distance(model.mu, model.sigma, model.mu, model.sigma);
  o.require(self == 0, "self distance");

  const Plane img = read_image(test::data_dir() / "camera.png");
  std::vector<double> scores{niqe_score(img, model)};
  for (double sigma : {5.0, 10.0, 20.0}) scores.push_back(niqe_score(test::add_noise(img, sigma, 11), model));
  for (std::size_t i = 1; i < scores.size(); ++i) o.require(scores[i] > scores[i - 1], "noise monotonicity");
  o.detail << "shapes " << g << "/" << l << "/" << ag << ", self-distance " << self << ", camera sigma 0/5/10/20: "
           << scores[0] << " " << scores[1] << " " << scores[2] << " " << scores[3];
}

void evaluation(Outcome& o) {
  const std::vector<double> a{1, 2, 3, 4, 5};
  o.require(std::abs(srcc(a, a) - 1) < 1e-12, "srcc 1");
  o.require(std::abs(srcc(a, std::vector<double>{5, 4, 3, 2, 1}) + 1) < 1e-12, "srcc -1");
  o.require(std::abs(srcc(a, std::vector<double>{1, 3, 2, 5, 4}) - 0.8) < 1e-12, "srcc 0.8");

  const LogisticParams truth{5, 1, 0, 2};
  std::vector<double> pred(41), mos(41);
  for (int i = 0; i < 41; ++i) {
    pred[i] = -6 + 12.0 * i / 40;
    mos[i] = truth(pred[i]);
  }
  const Eigen::VectorXd fitted = fit_logistic(pred, mos).params.apply(pred);
  double sse = 0;
  for (int i = 0; i < 41; ++i) sse += (fitted(i) - mos[i]) * (fitted(i) - mos[i]);
  const double r = std::sqrt(sse / 41);
  o.require(r < 1e-3, "logistic recovery");

  std::mt19937_64 rng(9);
  std::normal_distribution<double> n;
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> x(30), y(30), fx(30), gy(30);
    for (int i = 0; i < 30; ++i) {
      x[i] = n(rng);
      y[i] = x[i] + 2 * n(rng);
      fx[i] = std::exp(x[i]);
      gy[i] = -std::atan(y[i]);
    }
    worst = std::max(worst, std::abs(srcc(fx, gy) + srcc(x, y)));
  }
  o.require(worst < 1e-12, "monotone invariance");
  o.detail << "logistic recovery RMSE " << r << ", monotone-invariance drift " << worst;
}

void end_to_end(Outcome& o) {
  PipelineConfig cfg;
  cfg.width = 192;
  cfg.height = 108;
  cfg.fusion.reset();
  Pipeline tpqi_only(cfg);

  const std::vector<double> strengths{0, 0.25, 0.5, 0.75, 1.0};
  std::ostringstream rows;
  double min_srcc = 1;
  for (auto kind : {DistortionKind::frame_shuffle, DistortionKind::temporal_jitter}) {
    rows << to_string(kind) << " SRCC per seed:";
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const LumaSequence base = smooth_clip(60, 192, 108, seed);
      std::vector<double> q;
      for (double s : strengths) q.push_back(*tpqi_only.score(distort(base, {kind, s, seed})).q_tpqi);
      const double r = srcc(q, strengths);
      min_srcc = std::min(min_srcc, r);
      rows << " " << r;
      o.require(r >= 0.8, to_string(kind) + " seed " + std::to_string(seed));
    }
    rows << "; ";
  }

  // Noise control: relative change of NIQE versus relative change of the
  // TPQI descriptor mean exp(Q_TPQI).
  test::TempDir dir("accept");
  const auto corpus = test::niqe_corpus();
  save_model(dir / "m.niqe", train_model(corpus));
  cfg.fusion = Fusion::product;
  cfg.niqe_model = dir / "m.niqe";
  Pipeline fused(cfg);
  int wins = 0;
  rows << "noise control (rel NIQE vs rel TPQI):";
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const LumaSequence base = smooth_clip(60, 192, 108, seed);
    const QualityReport clean = fused.score(base);
    const QualityReport noisy = fused.score(distort(base, {DistortionKind::additive_noise, 1.0, seed}));
    const double dn = std::abs(*noisy.q_niqe / *clean.q_niqe - 1);
    const double dt = std::abs(std::exp(*noisy.q_tpqi - *clean.q_tpqi) - 1);
    wins += dn > dt;
    rows << " " << dn << "/" << dt;
  }
  o.require(wins == 5, "noise control");
  o.detail << rows.str();
}

void performance(Outcome& o) {
  const GaborBank bank = default_bank();
  const V1Transform v1(bank, 480, 270);
  const LumaSequence clip = resize(smooth_clip(12, 192, 108, 3), 480, 270);
  const double start = cpu_seconds();
  Eigen::MatrixXd features(static_cast<Index>(clip.size()), v1.feature_dim());
  for (std::size_t i = 0; i < clip.size(); ++i) features.row(static_cast<Index>(i)) = v1.features(clip.frames[i]).transpose();
  const Trajectory t = gram_pca(features, 10);
  const double score = domain_score(t.points).value;
  const double per_frame = (cpu_seconds() - start) / static_cast<double>(clip.size());
  o.require(std::isfinite(score), "finite score");
  o.require(per_frame <= 1.0, "time budget");
  o.detail << per_frame << " s/frame CPU (bound 1.0)";
}

struct Criterion {
  std::string name;
  std::function<void(Outcome&)> run;
  double cpu_budget; // seconds; <= 0 means no explicit bound
};

} // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"Descriptor analytics", descriptor_analytics, 1.0},
      {"Rigid-motion invariance and scale covariance", rigid_motion, 0},
      {"PCA oracle", pca_oracle, 0},
      {"Gabor bank", gabor_bank, 120.0},
      {"LGN", lgn, 0},
      {"NIQE", niqe, 0},
      {"Evaluation math", evaluation, 0},
      {"End-to-end monotonicity", end_to_end, 600.0},
      {"Performance envelope", performance, 0},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const double start = cpu_seconds();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double elapsed = cpu_seconds() - start;
    if (c.cpu_budget > 0) o.require(elapsed < c.cpu_budget, "CPU budget");
    failures += !o.pass;
    std::printf("%s  %s: %s [%.2f s CPU]\n", o.pass ? "PASS" : "FAIL", c.name.c_str(), o.detail.str().c_str(),
                elapsed);
    std::fflush(stdout);
  }

  if (const char* manifest = std::getenv("TPQI_KONVID_MANIFEST")) {
    Outcome o;
    try {
      PipelineConfig cfg;
      cfg.niqe_model = TPQI_DEFAULT_NIQE_MODEL;
      cfg.threads = std::max(1u, std::thread::hardware_concurrency());
      Pipeline pipe(cfg, StageCache(StageCache::default_root()));
      const DatasetManifest m = read_manifest(manifest);
      std::map<std::string, QualityReport> reports;
      for (const auto& e : m.entries) reports[e.id] = pipe.score(e.path);
      const double v1 = evaluate_manifest(m, reports, ScoreField::tpqi_v1).srcc;
      const double overall = evaluate_manifest(m, reports, ScoreField::overall_product).srcc;
      // Quality scores fall as MOS rises, so the reported magnitudes are compared.
      o.require(std::abs(std::abs(v1) - 0.531) <= 0.05, "TPQI (V1) SRCC");
      o.require(std::abs(std::abs(overall) - 0.693) <= 0.05, "Overall (Product) SRCC");
      o.detail << "|SRCC| TPQI (V1) " << std::abs(v1) << " (0.531), Overall (Product) " << std::abs(overall)
               << " (0.693)";
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    failures += !o.pass;
    std::printf("%s  KoNViD-1k integration: %s\n", o.pass ? "PASS" : "FAIL", o.detail.str().c_str());
  } else {
    std::printf("SKIPPED  KoNViD-1k integration: set TPQI_KONVID_MANIFEST to a path,mos manifest to run\n");
  }
  return failures == 0 ? 0 : 1;
}
