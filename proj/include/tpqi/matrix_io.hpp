#pragma once

#include "tpqi/core.hpp"

#include <filesystem>
#include <iosfwd>

namespace tpqi {

enum class MatrixFormat { binary, csv };

// "TPQIMAT1": 8-byte magic, u32 LE rows, u32 LE cols, u64 LE reserved (0),
// then rows*cols f32 LE values, row-major.
void write_matrix(std::ostream& out, const Eigen::MatrixXd& m, MatrixFormat format);
void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m, MatrixFormat format);

/// Reads either format; CSV is detected by the absence of the magic.
Eigen::MatrixXd read_matrix(const std::filesystem::path& path);

} // namespace tpqi
