#include "tpqi/matrix_io.hpp"
#include "tpqi/pipeline.hpp"
#include "tpqi/synthgen.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <iostream>

namespace fs = std::filesystem;
using namespace tpqi;

namespace {

constexpr int kExitError = 1;
constexpr int kExitManifest = 2;
constexpr int kExitNumerical = 3;

class ManifestFailure : public Error {
public:
  using Error::Error;
};

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> settings;
  std::string resolution, fusion, niqe_model, descriptor, distance_option, cache_dir;
  int pca_dim = 0, pool = 0;
  unsigned threads = 0;
  bool no_cache = false;
  bool json = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_file, "key=value config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", o.settings, "override one setting (key=value), repeatable")
      ->allow_extra_args(false)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  cmd->add_option("--resolution", o.resolution, "TPQI working resolution WxH (default 480x270)");
  cmd->add_option("--pca-dim", o.pca_dim, "trajectory dimension (default 10)");
  cmd->add_option("--pool", o.pool, "V1 energy pooling factor (default 4)");
  cmd->add_option("--fusion", o.fusion, "sum | product | none");
  cmd->add_option("--niqe-model", o.niqe_model, "TPQINIQ1 model file");
  cmd->add_option("--descriptor", o.descriptor, "vpt | curvature | distance | linear");
  cmd->add_option("--distance-option", o.distance_option,
                  "norm_first | norm_second | sum_of_norms | norm_of_sum | point_to_line");
  cmd->add_option("--threads", o.threads, "worker threads");
  cmd->add_option("--cache-dir", o.cache_dir, "stage cache directory (default $TPQI_CACHE_DIR)");
  cmd->add_flag("--no-cache", o.no_cache, "disable the stage cache");
  cmd->add_flag("--json", o.json, "machine-readable output");
}

PipelineConfig build_config(const CommonOptions& o) {
  PipelineConfig cfg;
#ifdef TPQI_DEFAULT_NIQE_MODEL
  if (fs::exists(TPQI_DEFAULT_NIQE_MODEL)) cfg.niqe_model = TPQI_DEFAULT_NIQE_MODEL;
#endif
  if (!o.config_file.empty()) load_config(o.config_file, cfg);
  if (!o.resolution.empty()) apply_setting(cfg, "resolution", o.resolution);
  if (o.pca_dim) apply_setting(cfg, "pca_dim", std::to_string(o.pca_dim));
  if (o.pool) apply_setting(cfg, "pool", std::to_string(o.pool));
  if (!o.fusion.empty()) apply_setting(cfg, "fusion", o.fusion);
  if (!o.niqe_model.empty()) apply_setting(cfg, "niqe_model", o.niqe_model);
  if (!o.descriptor.empty()) apply_setting(cfg, "descriptor", o.descriptor);
  if (!o.distance_option.empty()) apply_setting(cfg, "distance_option", o.distance_option);
  if (o.threads) apply_setting(cfg, "threads", std::to_string(o.threads));
  for (const auto& s : o.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  return cfg;
}

StageCache build_cache(const CommonOptions& o) {
  if (o.no_cache) return StageCache();
  return StageCache(o.cache_dir.empty() ? StageCache::default_root() : fs::path(o.cache_dir));
}

void log_cache(const StageCache& cache) {
  if (cache.enabled())
    std::cerr << "cache: " << cache.hits() << " hits, " << cache.misses() << " misses ("
              << cache.root().string() << ")\n";
}

std::string opt(const std::optional<double>& v) {
  if (!v) return "-";
  std::ostringstream s;
  s << std::setprecision(10) << *v;
  return s.str();
}

void print_report(std::ostream& out, const QualityReport& r) {
  out << "source             " << r.source_id << '\n'
      << "frames             " << r.frames << '\n'
      << "q_tpqi             " << opt(r.q_tpqi) << '\n'
      << "q_tpqi_lgn         " << opt(r.q_tpqi_lgn) << '\n'
      << "q_tpqi_v1          " << opt(r.q_tpqi_v1) << '\n'
      << "q_niqe             " << opt(r.q_niqe) << '\n'
      << "q_overall_sum      " << opt(r.q_overall_sum) << '\n'
      << "q_overall_product  " << opt(r.q_overall_product) << '\n'
      << "config_fingerprint " << r.config_fingerprint << '\n';
  for (const auto& f : r.degenerate_flags) out << "degenerate         " << f << '\n';
}

int cmd_score(const CommonOptions& o, const std::vector<std::string>& inputs) {
  Pipeline pipeline(build_config(o), build_cache(o));
  nlohmann::json all = nlohmann::json::array();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const QualityReport r = pipeline.score(fs::path(inputs[i]));
    for (const auto& w : r.warnings) std::cerr << "warning: " << inputs[i] << ": " << w << '\n';
    if (o.json) {
      all.push_back(to_json(r));
    } else {
      if (i) std::cout << '\n';
      print_report(std::cout, r);
    }
  }
  if (o.json) std::cout << (inputs.size() == 1 ? all[0] : all).dump(2) << '\n';
  log_cache(pipeline.cache());
  return 0;
}

struct EvalRequest {
  std::vector<std::string> manifests;
  std::vector<std::string> fields{"tpqi"};
  bool skip_errors = false;
};

int run_eval(const CommonOptions& o, PipelineConfig cfg, const EvalRequest& req,
             const std::string& method_suffix) {
  std::vector<ScoreField> fields;
  for (const auto& f : req.fields) fields.push_back(parse_score_field(f));
  Pipeline pipeline(std::move(cfg), build_cache(o));

  std::vector<EvaluationResult> results;
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& manifest_path : req.manifests) {
    DatasetManifest manifest;
    try {
      manifest = read_manifest(manifest_path);
    } catch (const Error& e) {
      throw ManifestFailure(e.what());
    }
    std::map<std::string, QualityReport> reports;
    DatasetManifest kept{manifest.name, {}};
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
      const auto& e = manifest.entries[i];
      std::cerr << "[" << manifest.name << " " << i + 1 << "/" << manifest.entries.size() << "] "
                << e.id << '\n';
      try {
        if (!fs::exists(e.path)) throw ManifestFailure("missing video " + e.path.string());
        reports[e.id] = pipeline.score(e.path);
        for (const auto& w : reports[e.id].warnings) std::cerr << "warning: " << e.id << ": " << w << '\n';
        kept.entries.push_back(e);
      } catch (const Error& err) {
        if (!req.skip_errors) {
          if (dynamic_cast<const NumericalError*>(&err)) throw;
          throw ManifestFailure(e.id + ": " + err.what());
        }
        std::cerr << "skipped " << e.id << ": " << err.what() << '\n';
        failures.push_back({{"dataset", manifest.name}, {"path", e.id}, {"error", err.what()}});
      }
    }
    for (ScoreField f : fields) {
      EvaluationResult r;
      try {
        r = evaluate_manifest(kept, reports, f);
      } catch (const ConfigError& e) {
        throw ManifestFailure(e.what());
      }
      r.method += method_suffix;
      results.push_back(r);
    }
  }
  log_cache(pipeline.cache());
  if (o.json) {
    nlohmann::json out;
    out["results"] = nlohmann::json::array();
    for (const auto& r : results) out["results"].push_back(to_json(r));
    out["failures"] = failures;
    out["config_fingerprint"] = pipeline.fingerprint();
    std::cout << out.dump(2) << '\n';
  } else {
    std::cout << format_table(results);
  }
  return 0;
}

int cmd_features(const CommonOptions& o, const std::string& input, const std::string& domain,
                 const std::string& of, const std::string& out, const std::string& format) {
  PipelineConfig cfg = build_config(o);
  cfg.fusion.reset();
  const MatrixFormat fmt = format == "csv" ? MatrixFormat::csv : MatrixFormat::binary;
  Eigen::MatrixXd m;
  if (domain == "trajectory") {
    Pipeline pipeline(cfg, build_cache(o));
    m = pipeline.trajectory(input, of == "lgn" ? Domain::lgn : Domain::v1).points;
    log_cache(pipeline.cache());
  } else {
    cfg.validate();
    LumaSequence seq = read_video(input);
    validate_sequence(seq);
    seq = resize(seq, cfg.width, cfg.height);
    m = domain_features(seq, domain == "lgn" ? Domain::lgn : Domain::v1, cfg).to_matrix();
  }
  if (out.empty() || out == "-")
    write_matrix(std::cout, m, fmt);
  else
    write_matrix(fs::path(out), m, fmt);
  std::cerr << "features: " << m.rows() << " x " << m.cols() << '\n';
  return 0;
}

int cmd_train(const std::string& corpus, const std::string& out, int patch_size, double sharpness) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(corpus)) {
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (e.is_regular_file() && (ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm"))
      files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Plane> images;
  for (const auto& f : files) images.push_back(read_image(f));
  std::cerr << "train-niqe: " << images.size() << " images from " << corpus << '\n';
  NiqeOptions options;
  options.patch_size = patch_size;
  options.sharpness_fraction = sharpness;
  save_model(out, train_model(images, options));
  return 0;
}

int cmd_synth(const std::string& kind, double strength, std::uint64_t seed, std::size_t frames,
              const std::string& size, double vx, double vy, const std::string& out) {
  const auto x = size.find_first_of("xX");
  if (x == std::string::npos) throw ConfigError("--size expects WxH");
  const Index w = std::stol(size.substr(0, x)), h = std::stol(size.substr(x + 1));
  LumaSequence clip = smooth_clip(frames, w, h, seed, {vx, vy});
  if (kind != "none") clip = distort(clip, {parse_distortion_kind(kind), strength, seed});
  if (fs::path(out).extension() == ".y4m")
    write_y4m(out, clip);
  else
    write_raw_luma(out, clip);
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"tpqi: completely blind video quality assessment"};
  app.require_subcommand(1);

  CommonOptions common;
  std::vector<std::string> inputs;
  auto* score = app.add_subcommand("score", "score videos (Y4M, TPQIRAW1 or image directory)");
  add_common(score, common);
  score->add_option("inputs", inputs, "videos to score")->required();

  EvalRequest eval_req;
  auto* eval = app.add_subcommand("eval", "correlate scores with MOS over manifests");
  add_common(eval, common);
  eval->add_option("manifests", eval_req.manifests, "CSV manifests with header path,mos")->required();
  eval->add_option("--score-field", eval_req.fields,
                   "tpqi | tpqi_lgn | tpqi_v1 | niqe | overall_sum | overall_product (repeatable)")
      ->allow_extra_args(false)
      ->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  eval->add_flag("--skip-errors", eval_req.skip_errors, "exclude videos that fail to score");

  EvalRequest ablate_req;
  auto* ablate = app.add_subcommand("ablate", "evaluate an alternative trajectory descriptor");
  add_common(ablate, common);
  ablate->add_option("manifests", ablate_req.manifests, "CSV manifests")->required();
  ablate->add_option("--score-field", ablate_req.fields, "tpqi | tpqi_lgn | tpqi_v1")
      ->allow_extra_args(false)
      ->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  ablate->add_flag("--skip-errors", ablate_req.skip_errors, "exclude videos that fail to score");

  std::string feat_input, feat_domain = "trajectory", feat_of = "v1", feat_out, feat_format = "binary";
  auto* features = app.add_subcommand("features", "dump per-frame features or a trajectory");
  add_common(features, common);
  features->add_option("input", feat_input, "video")->required();
  features->add_option("--domain", feat_domain, "lgn | v1 | trajectory")
      ->check(CLI::IsMember({"lgn", "v1", "trajectory"}));
  features->add_option("--trajectory-domain", feat_of, "domain of the trajectory dump")
      ->check(CLI::IsMember({"lgn", "v1"}));
  features->add_option("--out", feat_out, "output file (default stdout)");
  features->add_option("--format", feat_format, "binary | csv")->check(CLI::IsMember({"binary", "csv"}));

  std::string corpus, model_out;
  int patch_size = 96;
  double sharpness = 0.75;
  auto* train = app.add_subcommand("train-niqe", "fit a pristine NIQE model on an image corpus");
  train->add_option("--corpus", corpus, "directory of PNG/PNM images")->required()->check(CLI::ExistingDirectory);
  train->add_option("--out", model_out, "model file")->required();
  train->add_option("--patch-size", patch_size, "patch size (default 96)");
  train->add_option("--sharpness", sharpness, "kept fraction of max patch sharpness (default 0.75)");

  std::string synth_kind = "none", synth_size = "192x108", synth_out;
  double synth_strength = 0, synth_vx = 1.5, synth_vy = 0.5;
  std::uint64_t synth_seed = 0;
  std::size_t synth_frames = 60;
  auto* synth = app.add_subcommand("synth", "write a synthetic translating-texture clip");
  synth->add_option("--kind", synth_kind,
                    "none | frame_shuffle | temporal_jitter | frame_drop_repeat | additive_noise");
  synth->add_option("--strength", synth_strength, "distortion strength in [0,1]")->check(CLI::Range(0.0, 1.0));
  synth->add_option("--seed", synth_seed, "random seed");
  synth->add_option("--frames", synth_frames, "frame count (default 60)");
  synth->add_option("--size", synth_size, "WxH (default 192x108)");
  synth->add_option("--vx", synth_vx, "horizontal velocity, pixels/frame");
  synth->add_option("--vy", synth_vy, "vertical velocity, pixels/frame");
  synth->add_option("--out", synth_out, "output .y4m (or TPQIRAW1 for other extensions)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitError;
  }

  try {
    if (*score) return cmd_score(common, inputs);
    if (*eval) return run_eval(common, build_config(common), eval_req, "");
    if (*ablate) {
      PipelineConfig cfg = build_config(common);
      if (common.fusion.empty()) cfg.fusion.reset();
      const std::string suffix = " [" + to_string(cfg.descriptor.variant) +
                                 (cfg.descriptor.variant == Variant::vpt ||
                                          cfg.descriptor.variant == Variant::distance_only
                                      ? "/" + to_string(cfg.descriptor.distance)
                                      : "") +
                                 "]";
      return run_eval(common, std::move(cfg), ablate_req, suffix);
    }
    if (*features) return cmd_features(common, feat_input, feat_domain, feat_of, feat_out, feat_format);
    if (*train) return cmd_train(corpus, model_out, patch_size, sharpness);
    if (*synth)
      return cmd_synth(synth_kind, synth_strength, synth_seed, synth_frames, synth_size, synth_vx,
                       synth_vy, synth_out);
  } catch (const ManifestFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitManifest;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
