#include "tpqi/feature_store.hpp"

#include <atomic>
#include <unistd.h>

namespace tpqi {
namespace fs = std::filesystem;

std::string to_string(Domain d) {
  switch (d) {
  case Domain::lgn: return "lgn";
  case Domain::v1: return "v1";
  case Domain::external: return "external";
  }
  return "external";
}

FeatureStore::FeatureStore(Index cols, std::size_t budget_bytes, fs::path spill_dir)
    : cols_(cols), budget_(budget_bytes), spill_dir_(std::move(spill_dir)) {
  if (cols < 1) throw ConfigError("feature store: need at least one column");
}

FeatureStore::~FeatureStore() {
  if (spill_) {
    spill_.reset();
    std::error_code ec;
    fs::remove(spill_path_, ec);
  }
}

void FeatureStore::spill() {
  static std::atomic<unsigned> counter{0};
  spill_path_ = spill_dir_ / ("tpqi-features-" + std::to_string(::getpid()) + "-" +
                              std::to_string(counter++) + ".bin");
  spill_ = std::make_unique<std::fstream>(
      spill_path_, std::ios::binary | std::ios::in | std::ios::out | std::ios::trunc);
  if (!*spill_) throw IoError("cannot create feature spill file " + spill_path_.string());
  spill_->write(reinterpret_cast<const char*>(memory_.data()),
                static_cast<std::streamsize>(memory_.size() * sizeof(double)));
  std::vector<double>().swap(memory_);
}

void FeatureStore::append(const Eigen::Ref<const Eigen::VectorXd>& row) {
  if (row.size() != cols_)
    throw DimensionError("feature store: row has " + std::to_string(row.size()) +
                         " values, expected " + std::to_string(cols_));
  if (!row.allFinite())
    throw NumericalError("feature store: non-finite feature in frame " + std::to_string(rows_));
  const std::size_t bytes = static_cast<std::size_t>(rows_ + 1) * cols_ * sizeof(double);
  if (!spill_ && bytes > budget_) spill();
  if (spill_) {
    spill_->seekp(0, std::ios::end);
    spill_->write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(cols_ * sizeof(double)));
    if (!*spill_) throw IoError("feature spill write failed");
  } else {
    memory_.insert(memory_.end(), row.data(), row.data() + cols_);
  }
  ++rows_;
}

Eigen::MatrixXd FeatureStore::block(Index begin, Index count) const {
  if (begin < 0 || count < 0 || begin + count > rows_)
    throw DimensionError("feature store: block out of range");
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMajor out(count, cols_);
  if (spill_) {
    spill_->seekg(static_cast<std::streamoff>(begin * cols_ * sizeof(double)));
    spill_->read(reinterpret_cast<char*>(out.data()),
                 static_cast<std::streamsize>(count * cols_ * sizeof(double)));
    if (!*spill_) throw IoError("feature spill read failed");
  } else {
    out = Eigen::Map<const RowMajor>(memory_.data() + begin * cols_, count, cols_);
  }
  return out;
}

Index FeatureStore::block_rows() const {
  const std::size_t row_bytes = static_cast<std::size_t>(cols_) * sizeof(double);
  const auto fit = static_cast<Index>(budget_ / (4 * row_bytes));
  return std::clamp<Index>(fit, 1, std::max<Index>(rows_, 1));
}

Trajectory gram_pca(const FeatureStore& store, Index d) {
  const Index n = store.rows(), dim = store.cols();
  detail::check_pca_shape(n, dim, d);
  const Index step = store.block_rows();

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (Index b = 0; b < n; b += step)
    mean += store.block(b, std::min(step, n - b)).colwise().sum().transpose();
  mean /= static_cast<double>(n);

  auto centered_block = [&](Index begin) {
    Eigen::MatrixXd blk = store.block(begin, std::min(step, n - begin));
    blk.rowwise() -= mean.transpose();
    return blk;
  };

  Eigen::MatrixXd gram(n, n);
  for (Index bi = 0; bi < n; bi += step) {
    const Eigen::MatrixXd xi = centered_block(bi);
    gram.block(bi, bi, xi.rows(), xi.rows()) = xi * xi.transpose();
    for (Index bj = bi + step; bj < n; bj += step) {
      const Eigen::MatrixXd xj = centered_block(bj);
      const Eigen::MatrixXd g = xi * xj.transpose();
      gram.block(bi, bj, g.rows(), g.cols()) = g;
      gram.block(bj, bi, g.cols(), g.rows()) = g.transpose();
    }
  }

  return trajectory_from_gram<double>(gram, d, [&](const Eigen::MatrixXd& u) {
    Eigen::MatrixXd loadings = Eigen::MatrixXd::Zero(dim, u.cols());
    for (Index b = 0; b < n; b += step) {
      const Eigen::MatrixXd xb = centered_block(b);
      loadings += xb.transpose() * u.middleRows(b, xb.rows());
    }
    return loadings;
  });
}

} // namespace tpqi
