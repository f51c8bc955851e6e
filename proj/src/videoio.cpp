#include "tpqi/videoio.hpp"

#include <png.h>

#include <fnmatch.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <regex>
#include <iterator>
#include <memory>
#include <sstream>

namespace tpqi {
namespace fs = std::filesystem;

namespace {

constexpr double kLumaR = 0.299, kLumaG = 0.587, kLumaB = 0.114;

std::vector<unsigned char> slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}

float get_f32(const unsigned char* p) { return std::bit_cast<float>(get_u32(p)); }

struct ChromaLayout {
  // Bytes of chroma per frame for a given luma geometry.
  std::size_t bytes(std::size_t w, std::size_t h) const {
    return planes * ((w + sub_x - 1) / sub_x) * ((h + sub_y - 1) / sub_y);
  }
  std::size_t sub_x = 2, sub_y = 2;
  std::size_t planes = 2;
};

ChromaLayout chroma_for(const std::string& tag, std::size_t offset) {
  static const std::regex high_depth("(420|422|444)p[0-9]+|mono[0-9]+");
  if (std::regex_match(tag, high_depth))
    throw ParseError("unsupported high bit depth colorspace C" + tag + " at byte " +
                     std::to_string(offset));
  if (tag == "420" || tag == "420jpeg" || tag == "420mpeg2" || tag == "420paldv") return {2, 2, 2};
  if (tag == "422") return {2, 1, 2};
  if (tag == "444") return {1, 1, 2};
  if (tag == "mono") return {1, 1, 0};
  throw ParseError("unsupported colorspace C" + tag + " at byte " + std::to_string(offset));
}

} // namespace

void validate_sequence(const LumaSequence& seq, std::size_t min_frames) {
  if (seq.size() < min_frames)
    throw ConfigError("sequence '" + seq.source_id + "' has " + std::to_string(seq.size()) +
                      " frames, need at least " + std::to_string(min_frames));
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (seq.frames[i].rows() != seq.height() || seq.frames[i].cols() != seq.width())
      throw DimensionError("frame " + std::to_string(i) + " of '" + seq.source_id +
                           "' differs in size from frame 0");
  }
}

LumaSequence read_y4m(const fs::path& path) {
  const auto bytes = slurp(path);
  const std::string magic = "YUV4MPEG2";
  if (bytes.size() < magic.size() || std::memcmp(bytes.data(), magic.data(), magic.size()) != 0)
    throw ParseError(path.string() + ": missing YUV4MPEG2 signature at byte 0");

  const auto eol = std::find(bytes.begin(), bytes.end(), '\n');
  if (eol == bytes.end()) throw ParseError(path.string() + ": unterminated header at byte 0");
  const std::size_t header_end = static_cast<std::size_t>(eol - bytes.begin());

  std::size_t width = 0, height = 0;
  double rate = 0;
  ChromaLayout chroma;
  std::size_t pos = magic.size();
  while (pos < header_end) {
    if (bytes[pos] == ' ') {
      ++pos;
      continue;
    }
    std::size_t end = pos;
    while (end < header_end && bytes[end] != ' ') ++end;
    const std::string token(bytes.begin() + pos, bytes.begin() + end);
    const std::string value = token.substr(1);
    try {
      switch (token[0]) {
      case 'W': width = std::stoul(value); break;
      case 'H': height = std::stoul(value); break;
      case 'F': {
        const auto colon = value.find(':');
        if (colon == std::string::npos) throw std::invalid_argument("rate");
        const double den = std::stod(value.substr(colon + 1));
        rate = den != 0 ? std::stod(value.substr(0, colon)) / den : 0.0;
        break;
      }
      case 'C': chroma = chroma_for(value, pos); break;
      default: break; // I, A, X: informational
      }
    } catch (const std::logic_error&) {
      throw ParseError(path.string() + ": malformed header token '" + token + "' at byte " +
                       std::to_string(pos));
    }
    pos = end;
  }
  if (width == 0 || height == 0)
    throw ParseError(path.string() + ": header lacks W/H at byte " + std::to_string(header_end));

  LumaSequence seq;
  seq.frame_rate = rate;
  seq.source_id = path.filename().string();
  const std::size_t luma = width * height;
  const std::size_t payload = luma + chroma.bytes(width, height);

  pos = header_end + 1;
  while (pos < bytes.size()) {
    const std::size_t index = seq.frames.size();
    const auto frame_eol = std::find(bytes.begin() + pos, bytes.end(), '\n');
    if (bytes.size() - pos < 5 || std::memcmp(bytes.data() + pos, "FRAME", 5) != 0)
      throw ParseError(path.string() + ": expected FRAME marker for frame " +
                       std::to_string(index) + " at byte " + std::to_string(pos));
    if (frame_eol == bytes.end())
      throw ParseError(path.string() + ": truncated frame " + std::to_string(index) +
                       " (unterminated FRAME header)");
    pos = static_cast<std::size_t>(frame_eol - bytes.begin()) + 1;
    if (bytes.size() - pos < payload)
      throw ParseError(path.string() + ": truncated frame " + std::to_string(index) +
                       ": expected " + std::to_string(payload) + " bytes, found " +
                       std::to_string(bytes.size() - pos));
    Plane plane(height, width);
    const unsigned char* y = bytes.data() + pos;
    for (std::size_t i = 0; i < luma; ++i) plane.data()[i] = y[i] / 255.0;
    seq.frames.push_back(std::move(plane));
    pos += payload;
  }
  if (seq.frames.empty()) throw ParseError(path.string() + ": no frames");
  return seq;
}

void write_y4m(const fs::path& path, const LumaSequence& seq) {
  validate_sequence(seq, 1);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const auto w = static_cast<std::size_t>(seq.width()), h = static_cast<std::size_t>(seq.height());
  // Frame rate is stored as a rational with millisecond-ish precision.
  const long num = seq.frame_rate > 0 ? std::lround(seq.frame_rate * 1000) : 25000;
  out << "YUV4MPEG2 W" << w << " H" << h << " F" << num << ":1000 Ip A1:1 C420jpeg\n";
  const std::vector<char> chroma(2 * ((w + 1) / 2) * ((h + 1) / 2), static_cast<char>(128));
  std::vector<unsigned char> luma(w * h);
  for (const auto& frame : seq.frames) {
    for (std::size_t i = 0; i < luma.size(); ++i)
      luma[i] = static_cast<unsigned char>(std::lround(std::clamp(frame.data()[i], 0.0, 1.0) * 255));
    out << "FRAME\n";
    out.write(reinterpret_cast<const char*>(luma.data()), static_cast<std::streamsize>(luma.size()));
    out.write(chroma.data(), static_cast<std::streamsize>(chroma.size()));
  }
  if (!out) throw IoError("write failed: " + path.string());
}

LumaSequence read_raw_luma(const fs::path& path) {
  const auto bytes = slurp(path);
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "TPQIRAW1", 8) != 0)
    throw ParseError(path.string() + ": missing TPQIRAW1 magic at byte 0");
  const std::size_t w = get_u32(bytes.data() + 8), h = get_u32(bytes.data() + 12);
  if (w == 0 || h == 0) throw ParseError(path.string() + ": zero geometry at byte 8");
  const std::size_t frame_bytes = w * h * 4;
  const std::size_t body = bytes.size() - 16;
  if (body % frame_bytes != 0)
    throw ParseError(path.string() + ": truncated frame " + std::to_string(body / frame_bytes));
  LumaSequence seq;
  seq.source_id = path.filename().string();
  for (std::size_t f = 0; f < body / frame_bytes; ++f) {
    Plane plane(h, w);
    const unsigned char* p = bytes.data() + 16 + f * frame_bytes;
    for (std::size_t i = 0; i < w * h; ++i) plane.data()[i] = get_f32(p + 4 * i);
    seq.frames.push_back(std::move(plane));
  }
  if (seq.frames.empty()) throw ParseError(path.string() + ": no frames");
  return seq;
}

void write_raw_luma(const fs::path& path, const LumaSequence& seq) {
  validate_sequence(seq, 1);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write("TPQIRAW1", 8);
  put_u32(out, static_cast<std::uint32_t>(seq.width()));
  put_u32(out, static_cast<std::uint32_t>(seq.height()));
  for (const auto& frame : seq.frames)
    for (Index i = 0; i < frame.size(); ++i)
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(frame.data()[i])));
  if (!out) throw IoError("write failed: " + path.string());
}

namespace {

Plane read_pnm(const fs::path& path, const std::vector<unsigned char>& bytes) {
  std::size_t pos = 2;
  auto next_int = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) ++pos;
    if (start == pos)
      throw ParseError(path.string() + ": malformed PNM header at byte " + std::to_string(start));
    return std::stoul(std::string(bytes.begin() + start, bytes.begin() + pos));
  };
  const bool color = bytes[1] == '6';
  const std::size_t w = next_int(), h = next_int(), maxval = next_int();
  ++pos; // single whitespace before raster
  const std::size_t channels = color ? 3 : 1, sample = maxval > 255 ? 2 : 1;
  if (bytes.size() < pos + w * h * channels * sample)
    throw ParseError(path.string() + ": truncated PNM raster");
  Plane out(h, w);
  auto at = [&](std::size_t i) {
    const unsigned char* p = bytes.data() + pos + i * sample;
    return (sample == 2 ? (p[0] << 8 | p[1]) : p[0]) / static_cast<double>(maxval);
  };
  for (std::size_t i = 0; i < w * h; ++i) {
    out.data()[i] = color ? kLumaR * at(3 * i) + kLumaG * at(3 * i + 1) + kLumaB * at(3 * i + 2)
                          : at(i);
  }
  return out;
}

Plane read_png(const fs::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw ParseError(path.string() + ": " + image.message);
  // Gray inputs expand to R=G=B, so the BT.601 weights reproduce them.
  image.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw ParseError(path.string() + ": " + image.message);
  }
  Plane out(image.height, image.width);
  for (Index i = 0; i < out.size(); ++i) {
    out.data()[i] =
        (kLumaR * buffer[3 * i] + kLumaG * buffer[3 * i + 1] + kLumaB * buffer[3 * i + 2]) / 255.0;
  }
  return out;
}

} // namespace

Plane read_image(const fs::path& path) {
  const auto bytes = slurp(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6'))
    return read_pnm(path, bytes);
  if (bytes.size() >= 8 && bytes[0] == 0x89 && bytes[1] == 'P' && bytes[2] == 'N' && bytes[3] == 'G')
    return read_png(path);
  throw ParseError(path.string() + ": unrecognised image format at byte 0");
}

void write_png(const fs::path& path, const Plane& luma) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(luma.cols());
  image.height = static_cast<png_uint_32>(luma.rows());
  image.format = PNG_FORMAT_GRAY;
  std::vector<unsigned char> buffer(luma.size());
  for (Index i = 0; i < luma.size(); ++i)
    buffer[i] = static_cast<unsigned char>(std::lround(std::clamp(luma.data()[i], 0.0, 1.0) * 255));
  if (!png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr))
    throw IoError(path.string() + ": " + image.message);
}

LumaSequence read_image_sequence(const fs::path& dir, const std::string& pattern) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (fnmatch(pattern.c_str(), entry.path().filename().c_str(), 0) == 0)
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.size() < 3)
    throw ConfigError(dir.string() + ": found " + std::to_string(files.size()) +
                      " images matching '" + pattern + "', need at least 3");
  LumaSequence seq;
  seq.source_id = dir.filename().string();
  for (const auto& f : files) {
    seq.frames.push_back(read_image(f));
    if (seq.frames.back().rows() != seq.frames.front().rows() ||
        seq.frames.back().cols() != seq.frames.front().cols())
      throw DimensionError(f.string() + ": dimension mismatch with " + files.front().string());
  }
  return seq;
}

LumaSequence read_video(const fs::path& path) {
  if (fs::is_directory(path)) return read_image_sequence(path);
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  if (ext == ".y4m") return read_y4m(path);
  return read_raw_luma(path);
}

Plane resize_bilinear(const Plane& src, Index width, Index height) {
  if (width < 1 || height < 1) throw ConfigError("resize target must be at least 1x1");
  if (width == src.cols() && height == src.rows()) return src;
  const double sx = static_cast<double>(src.cols()) / width;
  const double sy = static_cast<double>(src.rows()) / height;
  const Index max_c = src.cols() - 1, max_r = src.rows() - 1;

  std::vector<Index> c0(width), c1(width);
  std::vector<double> wx(width);
  for (Index x = 0; x < width; ++x) {
    const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(max_c));
    c0[x] = static_cast<Index>(fx);
    c1[x] = std::min(c0[x] + 1, max_c);
    wx[x] = fx - c0[x];
  }
  Plane out(height, width);
  for (Index y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(max_r));
    const Index r0 = static_cast<Index>(fy), r1 = std::min(r0 + 1, max_r);
    const double wy = fy - r0;
    for (Index x = 0; x < width; ++x) {
      const double top = src(r0, c0[x]) + wx[x] * (src(r0, c1[x]) - src(r0, c0[x]));
      const double bottom = src(r1, c0[x]) + wx[x] * (src(r1, c1[x]) - src(r1, c0[x]));
      out(y, x) = top + wy * (bottom - top);
    }
  }
  return out;
}

LumaSequence resize(const LumaSequence& seq, Index width, Index height) {
  LumaSequence out;
  out.frame_rate = seq.frame_rate;
  out.source_id = seq.source_id;
  out.frames.reserve(seq.size());
  for (const auto& f : seq.frames) out.frames.push_back(resize_bilinear(f, width, height));
  return out;
}

} // namespace tpqi
