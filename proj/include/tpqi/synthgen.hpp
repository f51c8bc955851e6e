#pragma once

#include "tpqi/videoio.hpp"

#include <cstdint>
#include <string>

namespace tpqi {

enum class DistortionKind { frame_shuffle, temporal_jitter, frame_drop_repeat, additive_noise };

DistortionKind parse_distortion_kind(const std::string& s);
std::string to_string(DistortionKind k);

struct DistortionSpec {
  DistortionKind kind = DistortionKind::frame_shuffle;
  double strength = 0; // in [0, 1]
  std::uint64_t seed = 0;
};

struct Velocity {
  double x = 1.5; // pixels per frame
  double y = 0.5;
};

/// Band-limited random texture translating at constant velocity, sampled
/// with bilinear interpolation. Values stay inside [0.1, 0.9].
LumaSequence smooth_clip(std::size_t frames, Index width, Index height, std::uint64_t seed,
                         Velocity velocity = {});

/// Applies a seeded temporal (or noise) distortion. Frame count is kept and
/// strength 0 returns the input unchanged.
///  - frame_shuffle: swaps round(strength * pairs) of the disjoint pairs (2k, 2k+1)
///  - temporal_jitter: frame i shows frame clamp(i + round(3 * strength * u_i)), u_i ~ U[-1, 1]
///  - frame_drop_repeat: a strength fraction of the even frames (index >= 2) repeat their predecessor
///  - additive_noise: Gaussian noise with std 0.1 * strength, clamped to [0, 1]
LumaSequence distort(const LumaSequence& seq, const DistortionSpec& spec);

} // namespace tpqi
