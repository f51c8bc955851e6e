#include "tpqi/matrix_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>
#include <vector>

namespace tpqi {

namespace {

template <typename UInt>
void put_le(std::ostream& out, UInt v) {
  unsigned char b[sizeof(UInt)];
  for (std::size_t i = 0; i < sizeof(UInt); ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), sizeof(UInt));
}

template <typename UInt>
UInt get_le(const unsigned char* p) {
  UInt v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) v |= UInt(p[i]) << (8 * i);
  return v;
}

} // namespace

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m, MatrixFormat format) {
  if (format == MatrixFormat::csv) {
    // 9 significant digits round-trip any f32 exactly.
    out << std::setprecision(9);
    for (Index r = 0; r < m.rows(); ++r) {
      for (Index c = 0; c < m.cols(); ++c) {
        if (c) out << ',';
        out << static_cast<float>(m(r, c));
      }
      out << '\n';
    }
    return;
  }
  out.write("TPQIMAT1", 8);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  put_le<std::uint64_t>(out, 0);
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c)
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(m(r, c))));
}

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m, MatrixFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_matrix(out, m, format);
  if (!out) throw IoError("write failed: " + path.string());
}

Eigen::MatrixXd read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in),
                                         std::istreambuf_iterator<char>()};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), "TPQIMAT1", 8) == 0) {
    if (bytes.size() < 24) throw ParseError(path.string() + ": truncated TPQIMAT1 header");
    const auto rows = get_le<std::uint32_t>(bytes.data() + 8);
    const auto cols = get_le<std::uint32_t>(bytes.data() + 12);
    const std::size_t need = 24 + std::size_t(rows) * cols * 4;
    if (bytes.size() != need)
      throw ParseError(path.string() + ": expected " + std::to_string(need) + " bytes, found " +
                       std::to_string(bytes.size()));
    Eigen::MatrixXd m(rows, cols);
    const unsigned char* p = bytes.data() + 24;
    for (std::uint32_t r = 0; r < rows; ++r)
      for (std::uint32_t c = 0; c < cols; ++c, p += 4)
        m(r, c) = std::bit_cast<float>(get_le<std::uint32_t>(p));
    return m;
  }

  std::vector<std::vector<double>> rows;
  std::istringstream text(std::string(bytes.begin(), bytes.end()));
  std::string line;
  while (std::getline(text, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream fields(line);
    std::string cell;
    while (std::getline(fields, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::logic_error&) {
        throw ParseError(path.string() + ": bad CSV value '" + cell + "' in row " +
                         std::to_string(rows.size()));
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(path.string() + ": ragged CSV row " + std::to_string(rows.size()));
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  return m;
}

} // namespace tpqi
