#pragma once

#include "tpqi/trajectory.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <vector>

namespace tpqi {

/// Append-only N x D matrix of per-frame feature rows. Rows live in memory
/// until their size would exceed `budget_bytes`, after which everything is
/// moved to a temporary file and further rows are streamed there.
class FeatureStore {
public:
  static constexpr std::size_t kDefaultBudget = std::size_t(2) << 30;

  explicit FeatureStore(Index cols, std::size_t budget_bytes = kDefaultBudget,
                        std::filesystem::path spill_dir = std::filesystem::temp_directory_path());
  ~FeatureStore();
  FeatureStore(const FeatureStore&) = delete;
  FeatureStore& operator=(const FeatureStore&) = delete;
  FeatureStore(FeatureStore&&) noexcept = default;

  void append(const Eigen::Ref<const Eigen::VectorXd>& row);
  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  bool spilled() const { return spill_ != nullptr; }

  /// Rows [begin, begin + count) as a count x D matrix.
  Eigen::MatrixXd block(Index begin, Index count) const;
  Eigen::MatrixXd to_matrix() const { return block(0, rows_); }

  /// Rows per block such that two blocks fit comfortably in the budget.
  Index block_rows() const;

private:
  void spill();

  Index cols_;
  Index rows_ = 0;
  std::size_t budget_;
  std::filesystem::path spill_dir_;
  std::vector<double> memory_;
  std::filesystem::path spill_path_;
  std::unique_ptr<std::fstream> spill_;
};

/// Gram-route PCA over a store, two passes (mean, then blockwise centered
/// Gram) plus one pass for the sign convention. Matches gram_pca on the
/// equivalent in-memory matrix.
Trajectory gram_pca(const FeatureStore& store, Index d);

} // namespace tpqi
