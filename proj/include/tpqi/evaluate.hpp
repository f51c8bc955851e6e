#pragma once

#include "tpqi/core.hpp"

#include "json.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tpqi {

enum class Fusion { sum, product };

Fusion parse_fusion(const std::string& s);
std::string to_string(Fusion f);

double fuse(double q_niqe, double q_tpqi, Fusion strategy);

/// Q_fit = b2 + (b1 - b2) / (1 + exp(-(Q - b3) / |b4|))
struct LogisticParams {
  double beta1 = 1, beta2 = 0, beta3 = 0, beta4 = 1;

  double operator()(double q) const;
  Eigen::VectorXd apply(std::span<const double> q) const;
};

struct LogisticFit {
  LogisticParams params;
  double sse = 0;
  int iterations = 0;
  bool restarted = false;
};

/// Least-squares fit of the 4-parameter logistic by Nelder-Mead simplex.
LogisticFit fit_logistic(std::span<const double> pred, std::span<const double> mos);

/// Ranks with ties sharing their average rank (1-based).
Eigen::VectorXd average_ranks(std::span<const double> values);
double pearson(std::span<const double> a, std::span<const double> b);
double srcc(std::span<const double> a, std::span<const double> b);

struct PlccRmse {
  double plcc = 0;
  double rmse = 0;
};
PlccRmse plcc_rmse(std::span<const double> fitted, std::span<const double> mos);

struct ManifestEntry {
  std::filesystem::path path; // resolved against the manifest directory
  std::string id;             // path as written in the manifest
  double mos = 0;
};

struct DatasetManifest {
  std::string name;
  std::vector<ManifestEntry> entries;
};

/// CSV with header `path,mos`; '#' starts a comment line.
DatasetManifest read_manifest(const std::filesystem::path& path);

struct QualityReport {
  std::string source_id;
  std::optional<double> q_tpqi, q_tpqi_lgn, q_tpqi_v1;
  std::optional<double> q_niqe;
  std::optional<double> q_overall_sum, q_overall_product;
  std::vector<std::string> degenerate_flags;
  std::vector<std::string> warnings;
  std::string config_fingerprint;
  std::size_t frames = 0;

  /// Fills the fused fields from q_niqe and q_tpqi when both are present.
  void fuse_scores();
};

nlohmann::json to_json(const QualityReport& r);
QualityReport report_from_json(const nlohmann::json& j);

enum class ScoreField { tpqi, tpqi_lgn, tpqi_v1, niqe, overall_sum, overall_product };
ScoreField parse_score_field(const std::string& s);
std::string to_string(ScoreField f);
std::optional<double> select(const QualityReport& r, ScoreField f);

struct EvaluationResult {
  std::string dataset;
  std::string method;
  std::size_t count = 0;
  double srcc = 0, plcc = 0, rmse = 0;
  LogisticParams params;
};

nlohmann::json to_json(const EvaluationResult& r);
/// Aligned text table with SRCC / PLCC / RMSE columns.
std::string format_table(std::span<const EvaluationResult> rows);

/// Pairs reports with manifest entries by id; throws ConfigError listing
/// every entry without a report (or without the selected score).
EvaluationResult evaluate_manifest(const DatasetManifest& manifest,
                                   const std::map<std::string, QualityReport>& reports,
                                   ScoreField field);

/// Core of evaluate_manifest on plain vectors.
EvaluationResult evaluate_scores(std::span<const double> scores, std::span<const double> mos);

} // namespace tpqi
