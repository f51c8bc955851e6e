#pragma once

#include "tpqi/descriptor.hpp"
#include "tpqi/evaluate.hpp"
#include "tpqi/feature_store.hpp"
#include "tpqi/lgn.hpp"
#include "tpqi/niqe.hpp"
#include "tpqi/trajectory.hpp"
#include "tpqi/v1.hpp"
#include "tpqi/videoio.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace tpqi {

struct PipelineConfig {
  Index width = 480;
  Index height = 270;
  Index pca_dim = 10;
  GaborBankOptions gabor;
  LgnConfig lgn;
  std::optional<Fusion> fusion = Fusion::product; // nullopt: TPQI only
  std::filesystem::path niqe_model;
  DescriptorKind descriptor;
  std::size_t cache_budget = FeatureStore::kDefaultBudget;
  unsigned threads = 1;

  void validate() const;
};

/// Applies one `key = value` setting. Keys:
///   resolution (WxH), width, height, pca_dim, pool, fusion (sum|product|none),
///   niqe_model, descriptor, distance_option, cache_budget, threads,
///   gabor.{scales,orientations,max_frequency,frequency_step,
///          sigma_frequency_product,gamma,eta,phase,size},
///   lgn.{levels,norm_constant}
void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value);

/// Reads a key=value file. Blank lines and '#' comments are ignored,
/// `[section]` prefixes following keys with "section.", values may be quoted.
void load_config(const std::filesystem::path& path, PipelineConfig& cfg);

/// Canonical `key=value` lines of every setting that can change a score.
std::string canonical_config(const PipelineConfig& cfg);
/// hex64 of the canonical config, with the NIQE model's content hash when
/// fusion is enabled.
std::string config_fingerprint(const PipelineConfig& cfg);

/// FNV-1a over a file, or over (name, bytes) of every regular file below a
/// directory in sorted order.
std::uint64_t content_hash(const std::filesystem::path& path);

/// Content-addressed store of f64 matrices with atomic write-then-rename.
class StageCache {
public:
  /// Empty root disables caching.
  explicit StageCache(std::filesystem::path root = {});

  bool enabled() const { return !root_.empty(); }
  const std::filesystem::path& root() const { return root_; }

  std::optional<Eigen::MatrixXd> load(const std::string& key) const;
  void store(const std::string& key, const Eigen::MatrixXd& m) const;
  std::optional<std::string> load_text(const std::string& key) const;
  void store_text(const std::string& key, const std::string& text) const;

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

  /// TPQI_CACHE_DIR, else $XDG_CACHE_HOME/tpqi, else $HOME/.cache/tpqi.
  static std::filesystem::path default_root();

private:
  std::filesystem::path path_for(const std::string& key, const char* ext) const;
  void write_atomic(const std::filesystem::path& target, const std::string& bytes) const;

  std::filesystem::path root_;
  mutable std::size_t hits_ = 0, misses_ = 0;
};

/// Cache key of one stage: hash of stage name, stage fingerprint and input hash.
std::string stage_key(const std::string& stage, const std::string& fingerprint,
                      std::uint64_t input_hash);

/// Frame-by-frame features of one domain at the configured resolution.
FeatureStore domain_features(const LumaSequence& resized, Domain domain, const PipelineConfig& cfg);

/// Domain features reduced to min(pca_dim, frames, dim) principal components.
Trajectory domain_trajectory(const LumaSequence& resized, Domain domain, const PipelineConfig& cfg);

class Pipeline {
public:
  explicit Pipeline(PipelineConfig cfg, StageCache cache = StageCache());

  const PipelineConfig& config() const { return cfg_; }
  const std::string& fingerprint() const { return fingerprint_; }
  const StageCache& cache() const { return cache_; }

  /// Full scoring of one input (file or image directory).
  QualityReport score(const std::filesystem::path& input);
  /// Scores an in-memory sequence, bypassing the cache.
  QualityReport score(const LumaSequence& seq);

  /// Cached trajectory of one domain for an input.
  Trajectory trajectory(const std::filesystem::path& input, Domain domain);

private:
  const NiqeModel& niqe_model();
  double niqe_of(const LumaSequence& seq);
  QualityReport assemble(const std::string& source_id, const Trajectory& lgn, const Trajectory& v1,
                         std::optional<double> q_niqe) const;

  PipelineConfig cfg_;
  StageCache cache_;
  std::string fingerprint_;
  std::optional<NiqeModel> model_;
};

} // namespace tpqi
