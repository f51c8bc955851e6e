#include "tpqi/synthgen.hpp"

#include "tpqi/filter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace tpqi {

DistortionKind parse_distortion_kind(const std::string& s) {
  for (auto k : {DistortionKind::frame_shuffle, DistortionKind::temporal_jitter,
                 DistortionKind::frame_drop_repeat, DistortionKind::additive_noise})
    if (s == to_string(k)) return k;
  throw ConfigError("unknown distortion kind '" + s + "'");
}

std::string to_string(DistortionKind k) {
  switch (k) {
  case DistortionKind::frame_shuffle: return "frame_shuffle";
  case DistortionKind::temporal_jitter: return "temporal_jitter";
  case DistortionKind::frame_drop_repeat: return "frame_drop_repeat";
  case DistortionKind::additive_noise: return "additive_noise";
  }
  return "";
}

namespace {

double sample_bilinear(const Plane& img, double x, double y) {
  const Index x0 = std::clamp<Index>(static_cast<Index>(std::floor(x)), 0, img.cols() - 2);
  const Index y0 = std::clamp<Index>(static_cast<Index>(std::floor(y)), 0, img.rows() - 2);
  const double fx = std::clamp(x - static_cast<double>(x0), 0.0, 1.0);
  const double fy = std::clamp(y - static_cast<double>(y0), 0.0, 1.0);
  const double top = (1 - fx) * img(y0, x0) + fx * img(y0, x0 + 1);
  const double bottom = (1 - fx) * img(y0 + 1, x0) + fx * img(y0 + 1, x0 + 1);
  return (1 - fy) * top + fy * bottom;
}

std::vector<std::size_t> pick(std::vector<std::size_t> candidates, double strength,
                              std::mt19937_64& rng) {
  const auto count = static_cast<std::size_t>(
      std::lround(std::clamp(strength, 0.0, 1.0) * static_cast<double>(candidates.size())));
  std::shuffle(candidates.begin(), candidates.end(), rng);
  candidates.resize(count);
  return candidates;
}

} // namespace

LumaSequence smooth_clip(std::size_t frames, Index width, Index height, std::uint64_t seed,
                         Velocity velocity) {
  if (frames < 3) throw ConfigError("smooth_clip: need at least 3 frames");
  if (width < 2 || height < 2) throw ConfigError("smooth_clip: frame must be at least 2x2");
  const double travel_x = std::abs(velocity.x) * static_cast<double>(frames - 1);
  const double travel_y = std::abs(velocity.y) * static_cast<double>(frames - 1);
  const Index margin = 4;
  const Index cw = width + static_cast<Index>(std::ceil(travel_x)) + 2 * margin;
  const Index ch = height + static_cast<Index>(std::ceil(travel_y)) + 2 * margin;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Plane canvas(ch, cw);
  for (Index i = 0; i < canvas.size(); ++i) canvas.data()[i] = uniform(rng);
  const auto blur = gaussian_kernel(13, 2.0);
  canvas = filter_separable(canvas, blur, blur);
  const double lo = canvas.minCoeff(), hi = canvas.maxCoeff();
  canvas = 0.1 + 0.8 * (canvas - lo) / std::max(hi - lo, 1e-12);

  // Start on the side the motion moves away from.
  const double x0 = margin + (velocity.x < 0 ? travel_x : 0.0);
  const double y0 = margin + (velocity.y < 0 ? travel_y : 0.0);
  LumaSequence out;
  out.frame_rate = 30.0;
  out.source_id = "smooth_clip:" + std::to_string(seed);
  out.frames.reserve(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    const double ox = x0 + velocity.x * static_cast<double>(t);
    const double oy = y0 + velocity.y * static_cast<double>(t);
    Plane f(height, width);
    for (Index r = 0; r < height; ++r)
      for (Index c = 0; c < width; ++c)
        f(r, c) = sample_bilinear(canvas, ox + static_cast<double>(c), oy + static_cast<double>(r));
    out.frames.push_back(std::move(f));
  }
  return out;
}

LumaSequence distort(const LumaSequence& seq, const DistortionSpec& spec) {
  if (!(spec.strength >= 0 && spec.strength <= 1))
    throw ConfigError("distort: strength must lie in [0, 1]");
  LumaSequence out = seq;
  if (spec.strength == 0) return out;
  std::mt19937_64 rng(spec.seed);
  const std::size_t n = seq.size();

  switch (spec.kind) {
  case DistortionKind::frame_shuffle: {
    std::vector<std::size_t> pairs(n / 2);
    std::iota(pairs.begin(), pairs.end(), 0);
    for (std::size_t p : pick(pairs, spec.strength, rng))
      std::swap(out.frames[2 * p], out.frames[2 * p + 1]);
    break;
  }
  case DistortionKind::temporal_jitter: {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto last = static_cast<long>(n) - 1;
    for (std::size_t i = 0; i < n; ++i) {
      const long offset = std::lround(3.0 * spec.strength * u(rng));
      out.frames[i] = seq.frames[static_cast<std::size_t>(
          std::clamp(static_cast<long>(i) + offset, 0L, last))];
    }
    break;
  }
  case DistortionKind::frame_drop_repeat: {
    std::vector<std::size_t> evens;
    for (std::size_t i = 2; i < n; i += 2) evens.push_back(i);
    auto chosen = pick(evens, spec.strength, rng);
    std::sort(chosen.begin(), chosen.end());
    for (std::size_t i : chosen) out.frames[i] = out.frames[i - 1];
    break;
  }
  case DistortionKind::additive_noise: {
    std::normal_distribution<double> noise(0.0, 0.1 * spec.strength);
    for (auto& f : out.frames)
      for (Index i = 0; i < f.size(); ++i)
        f.data()[i] = std::clamp(f.data()[i] + noise(rng), 0.0, 1.0);
    break;
  }
  }
  return out;
}

} // namespace tpqi
