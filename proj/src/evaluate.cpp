#include "tpqi/evaluate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace tpqi {

Fusion parse_fusion(const std::string& s) {
  if (s == "sum") return Fusion::sum;
  if (s == "product") return Fusion::product;
  throw ConfigError("unknown fusion strategy '" + s + "' (expected sum or product)");
}

std::string to_string(Fusion f) { return f == Fusion::sum ? "sum" : "product"; }

double fuse(double q_niqe, double q_tpqi, Fusion strategy) {
  if (!std::isfinite(q_niqe) || !std::isfinite(q_tpqi))
    throw NumericalError("fuse: non-finite score");
  return strategy == Fusion::sum ? q_niqe + q_tpqi : q_niqe * q_tpqi;
}

namespace {

constexpr double kMinSlope = 1e-6;

double check_same_length(std::span<const double> a, std::span<const double> b, std::size_t min,
                         const char* what) {
  if (a.size() != b.size())
    throw DimensionError(std::string(what) + ": length mismatch (" + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()) + ")");
  if (a.size() < min)
    throw ConfigError(std::string(what) + ": need at least " + std::to_string(min) + " values");
  return static_cast<double>(a.size());
}

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(std::span<const double> v) {
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

double median(std::span<const double> v) {
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  return n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

using Vec4 = std::array<double, 4>;

LogisticParams to_params(const Vec4& x) { return {x[0], x[1], x[2], x[3]}; }

double sse_of(const Vec4& x, std::span<const double> pred, std::span<const double> mos) {
  const LogisticParams p = to_params(x);
  double s = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = p(pred[i]) - mos[i];
    s += r * r;
  }
  return std::isfinite(s) ? s : std::numeric_limits<double>::infinity();
}

struct SimplexResult {
  Vec4 x;
  double f;
  int iterations;
};

SimplexResult nelder_mead(Vec4 start, const Vec4& step, std::span<const double> pred,
                          std::span<const double> mos, int max_iterations) {
  constexpr double kTol = 1e-10;
  std::array<Vec4, 5> v;
  std::array<double, 5> f;
  v[0] = start;
  for (int i = 0; i < 4; ++i) {
    v[i + 1] = start;
    v[i + 1][i] += step[i];
  }
  for (int i = 0; i < 5; ++i) f[i] = sse_of(v[i], pred, mos);

  int it = 0;
  for (; it < max_iterations; ++it) {
    std::array<int, 5> order{0, 1, 2, 3, 4};
    std::sort(order.begin(), order.end(), [&](int a, int b) { return f[a] < f[b]; });
    std::array<Vec4, 5> vs;
    std::array<double, 5> fs;
    for (int i = 0; i < 5; ++i) {
      vs[i] = v[order[i]];
      fs[i] = f[order[i]];
    }
    v = vs;
    f = fs;
    if (f[4] - f[0] <= kTol * std::abs(f[0]) || f[4] == f[0]) break;

    Vec4 centroid{};
    for (int i = 0; i < 4; ++i)
      for (int k = 0; k < 4; ++k) centroid[k] += v[i][k] / 4;
    auto along = [&](double t) {
      Vec4 x;
      for (int k = 0; k < 4; ++k) x[k] = centroid[k] + t * (v[4][k] - centroid[k]);
      return x;
    };

    const Vec4 reflected = along(-1);
    const double fr = sse_of(reflected, pred, mos);
    if (fr < f[0]) {
      const Vec4 expanded = along(-2);
      const double fe = sse_of(expanded, pred, mos);
      if (fe < fr) {
        v[4] = expanded;
        f[4] = fe;
      } else {
        v[4] = reflected;
        f[4] = fr;
      }
      continue;
    }
    if (fr < f[3]) {
      v[4] = reflected;
      f[4] = fr;
      continue;
    }
    const bool outside = fr < f[4];
    const Vec4 contracted = along(outside ? -0.5 : 0.5);
    const double fc = sse_of(contracted, pred, mos);
    if (fc < (outside ? fr : f[4])) {
      v[4] = contracted;
      f[4] = fc;
      continue;
    }
    for (int i = 1; i < 5; ++i) {
      for (int k = 0; k < 4; ++k) v[i][k] = v[0][k] + 0.5 * (v[i][k] - v[0][k]);
      f[i] = sse_of(v[i], pred, mos);
    }
  }
  const auto best = std::min_element(f.begin(), f.end()) - f.begin();
  return {v[best], f[best], it};
}

Vec4 default_step(const Vec4& x, double mos_range, double pred_std) {
  const double level = mos_range > 0 ? 0.1 * mos_range : 0.1;
  return {level, level, 0.1 * pred_std, 0.1 * std::max(std::abs(x[3]), kMinSlope)};
}

} // namespace

double LogisticParams::operator()(double q) const {
  const double slope = std::max(std::abs(beta4), kMinSlope);
  return beta2 + (beta1 - beta2) / (1 + std::exp(-(q - beta3) / slope));
}

Eigen::VectorXd LogisticParams::apply(std::span<const double> q) const {
  Eigen::VectorXd out(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) out(static_cast<Index>(i)) = (*this)(q[i]);
  return out;
}

LogisticFit fit_logistic(std::span<const double> pred, std::span<const double> mos) {
  check_same_length(pred, mos, 4, "fit_logistic");
  const auto [pmin, pmax] = std::minmax_element(pred.begin(), pred.end());
  if (*pmin == *pmax) throw NumericalError("fit_logistic: degenerate predictor (all values equal)");
  const auto [mmin, mmax] = std::minmax_element(mos.begin(), mos.end());
  const double pred_std = stddev(pred);
  constexpr int kMaxIterations = 2000;

  const Vec4 init{*mmax, *mmin, median(pred), pred_std};
  SimplexResult best = nelder_mead(init, default_step(init, *mmax - *mmin, pred_std), pred, mos,
                                   kMaxIterations);
  LogisticFit fit;
  fit.iterations = best.iterations;

  // Least-squares line as the baseline a logistic should be able to match.
  const double pm = mean(pred), mm = mean(mos);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    sxy += (pred[i] - pm) * (mos[i] - mm);
    sxx += (pred[i] - pm) * (pred[i] - pm);
  }
  const double slope = sxy / sxx;
  double linear_sse = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = mm + slope * (pred[i] - pm) - mos[i];
    linear_sse += r * r;
  }
  if (best.f > linear_sse) {
    // Start in the logistic's near-linear regime, matched to the line.
    const double width = 2 * (*pmax - *pmin);
    const double span = 4 * width * slope;
    const Vec4 restart{mm + span / 2, mm - span / 2, pm, width};
    const SimplexResult second = nelder_mead(
        restart, default_step(restart, std::abs(span), pred_std), pred, mos, kMaxIterations);
    fit.restarted = true;
    fit.iterations += second.iterations;
    if (second.f < best.f) best = second;
  }

  // A flat curve at the MOS mean is in the family; never do worse than it.
  double constant_sse = 0;
  for (double m : mos) constant_sse += (m - mm) * (m - mm);
  if (constant_sse < best.f) best = {{mm, mm, pm, std::max(pred_std, kMinSlope)}, constant_sse, 0};

  fit.params = to_params(best.x);
  fit.params.beta4 = std::max(std::abs(fit.params.beta4), kMinSlope);
  fit.sse = sse_of(best.x, pred, mos);
  return fit;
}

Eigen::VectorXd average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  Eigen::VectorXd ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks(static_cast<Index>(order[k])) = rank;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  check_same_length(a, b, 2, "pearson");
  const double ma = mean(a), mb = mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0) || !(sbb > 0)) throw NumericalError("correlation undefined for a constant list");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double srcc(std::span<const double> a, std::span<const double> b) {
  check_same_length(a, b, 2, "srcc");
  const Eigen::VectorXd ra = average_ranks(a), rb = average_ranks(b);
  return pearson({ra.data(), a.size()}, {rb.data(), b.size()});
}

PlccRmse plcc_rmse(std::span<const double> fitted, std::span<const double> mos) {
  check_same_length(fitted, mos, 2, "plcc_rmse");
  PlccRmse out;
  out.plcc = pearson(fitted, mos);
  double s = 0;
  for (std::size_t i = 0; i < fitted.size(); ++i) s += (fitted[i] - mos[i]) * (fitted[i] - mos[i]);
  out.rmse = std::sqrt(s / static_cast<double>(fitted.size()));
  return out;
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  DatasetManifest m;
  m.name = path.stem().string();
  std::string line;
  bool header = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    if (!header) {
      if (line.substr(first) != "path,mos")
        throw ParseError(path.string() + ":" + std::to_string(line_no) +
                         ": expected header 'path,mos'");
      header = true;
      continue;
    }
    const auto comma = line.rfind(',');
    if (comma == std::string::npos)
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected 'path,mos'");
    ManifestEntry e;
    e.id = line.substr(first, comma - first);
    try {
      std::size_t used = 0;
      const std::string value = line.substr(comma + 1);
      e.mos = std::stod(value, &used);
      if (value.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("");
    } catch (const std::logic_error&) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad MOS value");
    }
    if (!std::isfinite(e.mos))
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": MOS must be finite");
    const std::filesystem::path p(e.id);
    e.path = p.is_absolute() ? p : path.parent_path() / p;
    m.entries.push_back(std::move(e));
  }
  if (!header) throw ParseError(path.string() + ": missing 'path,mos' header");
  return m;
}

void QualityReport::fuse_scores() {
  if (q_niqe && q_tpqi) {
    q_overall_sum = fuse(*q_niqe, *q_tpqi, Fusion::sum);
    q_overall_product = fuse(*q_niqe, *q_tpqi, Fusion::product);
  }
}

namespace {
void put_opt(nlohmann::json& j, const char* key, const std::optional<double>& v) {
  if (v) j[key] = *v;
}
std::optional<double> get_opt(const nlohmann::json& j, const char* key) {
  if (j.contains(key) && j[key].is_number()) return j[key].get<double>();
  return std::nullopt;
}
} // namespace

nlohmann::json to_json(const QualityReport& r) {
  nlohmann::json j;
  j["source_id"] = r.source_id;
  j["frames"] = r.frames;
  put_opt(j, "q_tpqi", r.q_tpqi);
  put_opt(j, "q_tpqi_lgn", r.q_tpqi_lgn);
  put_opt(j, "q_tpqi_v1", r.q_tpqi_v1);
  put_opt(j, "q_niqe", r.q_niqe);
  put_opt(j, "q_overall_sum", r.q_overall_sum);
  put_opt(j, "q_overall_product", r.q_overall_product);
  j["degenerate_flags"] = r.degenerate_flags;
  j["warnings"] = r.warnings;
  j["config_fingerprint"] = r.config_fingerprint;
  return j;
}

QualityReport report_from_json(const nlohmann::json& j) {
  QualityReport r;
  r.source_id = j.value("source_id", "");
  r.frames = j.value("frames", std::size_t{0});
  r.q_tpqi = get_opt(j, "q_tpqi");
  r.q_tpqi_lgn = get_opt(j, "q_tpqi_lgn");
  r.q_tpqi_v1 = get_opt(j, "q_tpqi_v1");
  r.q_niqe = get_opt(j, "q_niqe");
  r.q_overall_sum = get_opt(j, "q_overall_sum");
  r.q_overall_product = get_opt(j, "q_overall_product");
  r.degenerate_flags = j.value("degenerate_flags", std::vector<std::string>{});
  r.warnings = j.value("warnings", std::vector<std::string>{});
  r.config_fingerprint = j.value("config_fingerprint", "");
  return r;
}

ScoreField parse_score_field(const std::string& s) {
  if (s == "tpqi") return ScoreField::tpqi;
  if (s == "tpqi_lgn") return ScoreField::tpqi_lgn;
  if (s == "tpqi_v1") return ScoreField::tpqi_v1;
  if (s == "niqe") return ScoreField::niqe;
  if (s == "overall_sum") return ScoreField::overall_sum;
  if (s == "overall_product") return ScoreField::overall_product;
  throw ConfigError("unknown score field '" + s + "'");
}

std::string to_string(ScoreField f) {
  switch (f) {
  case ScoreField::tpqi: return "TPQI (LGN+V1)";
  case ScoreField::tpqi_lgn: return "TPQI (LGN)";
  case ScoreField::tpqi_v1: return "TPQI (V1)";
  case ScoreField::niqe: return "NIQE";
  case ScoreField::overall_sum: return "Overall (Sum)";
  case ScoreField::overall_product: return "Overall (Product)";
  }
  return "";
}

std::optional<double> select(const QualityReport& r, ScoreField f) {
  switch (f) {
  case ScoreField::tpqi: return r.q_tpqi;
  case ScoreField::tpqi_lgn: return r.q_tpqi_lgn;
  case ScoreField::tpqi_v1: return r.q_tpqi_v1;
  case ScoreField::niqe: return r.q_niqe;
  case ScoreField::overall_sum: return r.q_overall_sum;
  case ScoreField::overall_product: return r.q_overall_product;
  }
  return std::nullopt;
}

nlohmann::json to_json(const EvaluationResult& r) {
  return {{"dataset", r.dataset}, {"method", r.method}, {"count", r.count},
          {"SRCC", r.srcc},       {"PLCC", r.plcc},     {"RMSE", r.rmse},
          {"logistic", {r.params.beta1, r.params.beta2, r.params.beta3, r.params.beta4}}};
}

std::string format_table(std::span<const EvaluationResult> rows) {
  std::size_t dw = 7, mw = 6;
  for (const auto& r : rows) {
    dw = std::max(dw, r.dataset.size());
    mw = std::max(mw, r.method.size());
  }
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(dw)) << "Dataset" << "  "
      << std::setw(static_cast<int>(mw)) << "Method" << std::right << std::setw(7) << "N"
      << std::setw(9) << "SRCC" << std::setw(9) << "PLCC" << std::setw(11) << "RMSE" << '\n';
  out << std::fixed;
  for (const auto& r : rows) {
    out << std::left << std::setw(static_cast<int>(dw)) << r.dataset << "  "
        << std::setw(static_cast<int>(mw)) << r.method << std::right << std::setw(7) << r.count
        << std::setprecision(3) << std::setw(9) << r.srcc << std::setw(9) << r.plcc
        << std::setw(11) << r.rmse << '\n';
  }
  return out.str();
}

EvaluationResult evaluate_scores(std::span<const double> scores, std::span<const double> mos) {
  check_same_length(scores, mos, 4, "evaluate");
  EvaluationResult out;
  out.count = scores.size();
  out.srcc = srcc(scores, mos);
  const LogisticFit fit = fit_logistic(scores, mos);
  out.params = fit.params;
  const Eigen::VectorXd fitted = fit.params.apply(scores);
  const PlccRmse pr = plcc_rmse({fitted.data(), scores.size()}, mos);
  out.plcc = pr.plcc;
  out.rmse = pr.rmse;
  return out;
}

EvaluationResult evaluate_manifest(const DatasetManifest& manifest,
                                   const std::map<std::string, QualityReport>& reports,
                                   ScoreField field) {
  std::vector<double> scores, mos;
  std::vector<std::string> missing;
  for (const auto& e : manifest.entries) {
    const auto it = reports.find(e.id);
    const std::optional<double> value = it == reports.end() ? std::nullopt : select(it->second, field);
    if (!value) {
      missing.push_back(e.id);
      continue;
    }
    scores.push_back(*value);
    mos.push_back(e.mos);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
    throw ConfigError("no " + to_string(field) + " score for: " + list);
  }
  EvaluationResult out = evaluate_scores(scores, mos);
  out.dataset = manifest.name;
  out.method = to_string(field);
  return out;
}

} // namespace tpqi
