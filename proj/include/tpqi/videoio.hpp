#pragma once

#include "tpqi/core.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace tpqi {

/// Ordered grayscale frames sharing one geometry, samples in [0,1].
struct LumaSequence {
  std::vector<Plane> frames;
  double frame_rate = 0.0;
  std::string source_id;

  std::size_t size() const { return frames.size(); }
  bool empty() const { return frames.empty(); }
  Index width() const { return frames.empty() ? 0 : frames.front().cols(); }
  Index height() const { return frames.empty() ? 0 : frames.front().rows(); }
};

/// Throws DimensionError if frames disagree in size, ConfigError if fewer
/// than `min_frames`.
void validate_sequence(const LumaSequence& seq, std::size_t min_frames = 3);

// YUV4MPEG2, 8-bit 4:2:0 / 4:2:2 / 4:4:4 / mono. Only luma is kept.
LumaSequence read_y4m(const std::filesystem::path& path);
/// Writes 4:2:0 8-bit with neutral chroma. Samples are rounded to 1/255.
void write_y4m(const std::filesystem::path& path, const LumaSequence& seq);

// "TPQIRAW1" raw-luma format: 8-byte magic, u32 LE width, u32 LE height,
// then f32 LE row-major frames back to back.
LumaSequence read_raw_luma(const std::filesystem::path& path);
void write_raw_luma(const std::filesystem::path& path, const LumaSequence& seq);

/// PNG (8/16-bit, gray or color) and binary PNM (P5/P6). Color is reduced to
/// BT.601 luma.
Plane read_image(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Plane& luma);

/// Reads every file in `dir` whose name matches the shell glob `pattern`,
/// in lexicographic order.
LumaSequence read_image_sequence(const std::filesystem::path& dir,
                                 const std::string& pattern = "*");

/// Dispatches on the path: directory -> image sequence, *.y4m, else raw luma.
LumaSequence read_video(const std::filesystem::path& path);

Plane resize_bilinear(const Plane& src, Index width, Index height);
LumaSequence resize(const LumaSequence& seq, Index width, Index height);

} // namespace tpqi
