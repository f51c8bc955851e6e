#include "tpqi/pipeline.hpp"

#include "tpqi/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <unistd.h>

namespace tpqi {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
    return s.substr(1, s.size() - 2);
  return s;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  return out;
}

long long to_integer(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size())
    throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  const long long x = to_integer(key, v);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    throw ConfigError("config: '" + key + "' out of range");
  return static_cast<int>(x);
}

std::string num(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

// Settings that can change a score, grouped by the stage they feed.
std::map<std::string, std::string> canonical_map(const PipelineConfig& cfg) {
  std::map<std::string, std::string> m;
  m["resolution"] = std::to_string(cfg.width) + "x" + std::to_string(cfg.height);
  m["pca_dim"] = std::to_string(cfg.pca_dim);
  const auto& g = cfg.gabor;
  m["v1.scales"] = std::to_string(g.scales);
  m["v1.orientations"] = std::to_string(g.orientations);
  m["v1.max_frequency"] = num(g.max_frequency);
  m["v1.frequency_step"] = num(g.frequency_step);
  m["v1.sigma_frequency_product"] = num(g.sigma_frequency_product);
  m["v1.gamma"] = num(g.gamma);
  m["v1.eta"] = num(g.eta < 0 ? g.gamma : g.eta);
  m["v1.phase"] = num(g.phase);
  m["v1.size"] = std::to_string(g.size);
  m["v1.pool"] = std::to_string(g.pool);
  m["lgn.levels"] = std::to_string(cfg.lgn.levels);
  std::string list;
  for (double k : cfg.lgn.lowpass_kernel) list += (list.empty() ? "" : ",") + num(k);
  m["lgn.lowpass_kernel"] = list;
  list.clear();
  for (Index i = 0; i < cfg.lgn.norm_kernel.size(); ++i)
    list += (list.empty() ? "" : ",") + num(cfg.lgn.norm_kernel.data()[i]);
  m["lgn.norm_kernel"] = list;
  list.clear();
  for (double c : cfg.lgn.norm_constant_per_level) list += (list.empty() ? "" : ",") + num(c);
  m["lgn.norm_constants"] = list;
  m["descriptor"] = to_string(cfg.descriptor.variant);
  m["distance_option"] = to_string(cfg.descriptor.distance);
  m["fusion"] = cfg.fusion ? to_string(*cfg.fusion) : "none";
  return m;
}

std::string stage_fingerprint(const PipelineConfig& cfg, const std::string& prefix) {
  std::string text;
  for (const auto& [k, v] : canonical_map(cfg))
    if (k == "resolution" || k == "pca_dim" || k.starts_with(prefix)) text += k + "=" + v + "\n";
  return hex64(fnv1a(text));
}

template <typename Fn>
auto in_stage(const std::string& where, Fn&& fn) -> decltype(fn()) {
  const auto tag = [&](const std::exception& e) {
    const std::string what = e.what();
    return what.starts_with(where + ":") ? what : where + ": " + what;
  };
  try {
    return fn();
  } catch (const NumericalError& e) {
    throw NumericalError(tag(e));
  } catch (const ConfigError& e) {
    throw ConfigError(tag(e));
  } catch (const DimensionError& e) {
    throw DimensionError(tag(e));
  } catch (const ParseError& e) {
    throw ParseError(tag(e));
  } catch (const IoError& e) {
    throw IoError(tag(e));
  } catch (const Error& e) {
    throw Error(tag(e));
  }
}

// Trajectory cache layout: N rows of points followed by one row of
// explained variance.
Eigen::MatrixXd pack(const Trajectory& t) {
  Eigen::MatrixXd m(t.points.rows() + 1, t.points.cols());
  m.topRows(t.points.rows()) = t.points;
  m.bottomRows(1) = t.explained_variance.transpose();
  return m;
}

Trajectory unpack(const Eigen::MatrixXd& m, Domain domain) {
  Trajectory t;
  t.points = m.topRows(m.rows() - 1);
  t.explained_variance = m.bottomRows(1).transpose();
  t.domain = domain;
  return t;
}

} // namespace

void PipelineConfig::validate() const {
  if (width < 39 || height < 39)
    throw ConfigError("config: resolution must be at least 39x39 (Gabor support)");
  if (pca_dim < 1) throw ConfigError("config: pca_dim must be >= 1");
  if (gabor.pool < 1) throw ConfigError("config: pool must be >= 1");
  if (threads < 1) throw ConfigError("config: threads must be >= 1");
  if (cache_budget == 0) throw ConfigError("config: cache_budget must be > 0");
  lgn.validate();
  make_bank(gabor);
}

void apply_setting(PipelineConfig& cfg, const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = unquote(trim(raw_value));
  auto& g = cfg.gabor;
  if (key == "resolution") {
    const auto x = value.find_first_of("xX");
    if (x == std::string::npos) throw ConfigError("config: resolution expects WxH");
    cfg.width = to_int(key, value.substr(0, x));
    cfg.height = to_int(key, value.substr(x + 1));
  } else if (key == "width") {
    cfg.width = to_int(key, value);
  } else if (key == "height") {
    cfg.height = to_int(key, value);
  } else if (key == "pca_dim") {
    cfg.pca_dim = to_int(key, value);
  } else if (key == "pool" || key == "gabor.pool") {
    g.pool = to_int(key, value);
  } else if (key == "fusion") {
    cfg.fusion = value == "none" ? std::nullopt : std::optional<Fusion>(parse_fusion(value));
  } else if (key == "niqe_model") {
    cfg.niqe_model = value;
  } else if (key == "descriptor") {
    cfg.descriptor.variant = parse_variant(value);
  } else if (key == "distance_option") {
    cfg.descriptor.distance = parse_distance_option(value);
  } else if (key == "cache_budget") {
    const long long b = to_integer(key, value);
    if (b <= 0) throw ConfigError("config: cache_budget must be > 0");
    cfg.cache_budget = static_cast<std::size_t>(b);
  } else if (key == "threads") {
    const int t = to_int(key, value);
    if (t < 1) throw ConfigError("config: threads must be >= 1");
    cfg.threads = static_cast<unsigned>(t);
  } else if (key == "gabor.scales") {
    g.scales = to_int(key, value);
  } else if (key == "gabor.orientations") {
    g.orientations = to_int(key, value);
  } else if (key == "gabor.max_frequency") {
    g.max_frequency = to_double(key, value);
  } else if (key == "gabor.frequency_step") {
    g.frequency_step = to_double(key, value);
  } else if (key == "gabor.sigma_frequency_product") {
    g.sigma_frequency_product = to_double(key, value);
  } else if (key == "gabor.gamma") {
    g.gamma = to_double(key, value);
  } else if (key == "gabor.eta") {
    g.eta = to_double(key, value);
  } else if (key == "gabor.phase") {
    g.phase = to_double(key, value);
  } else if (key == "gabor.size") {
    g.size = to_int(key, value);
  } else if (key == "lgn.levels") {
    const double c = cfg.lgn.norm_constant_per_level.empty()
                         ? 0.17
                         : cfg.lgn.norm_constant_per_level.front();
    cfg.lgn.levels = to_int(key, value);
    cfg.lgn.set_norm_constant(c);
  } else if (key == "lgn.norm_constant") {
    cfg.lgn.set_norm_constant(to_double(key, value));
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

void load_config(const fs::path& path, PipelineConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::string line, section;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    const auto hash = line.find('#');
    if (hash != std::string::npos && line.find_first_of("\"'") > hash) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    try {
      apply_setting(cfg, section.empty() ? key : section + "." + key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::string canonical_config(const PipelineConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : canonical_map(cfg)) out += k + "=" + v + "\n";
  return out;
}

std::string config_fingerprint(const PipelineConfig& cfg) {
  std::string text = canonical_config(cfg);
  if (cfg.fusion) text += "niqe_model=" + hex64(content_hash(cfg.niqe_model)) + "\n";
  return hex64(fnv1a(text));
}

std::uint64_t content_hash(const fs::path& path) {
  auto hash_file = [](const fs::path& p, std::uint64_t h) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open " + p.string());
    std::vector<char> buf(1 << 16);
    while (in) {
      in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
      h = fnv1a(buf.data(), static_cast<std::size_t>(in.gcount()), h);
    }
    return h;
  };
  if (!fs::is_directory(path)) return hash_file(path, 0xcbf29ce484222325ULL);
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(path))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& f : files) {
    h = fnv1a(fs::relative(f, path).generic_string(), h);
    h = hash_file(f, h);
  }
  return h;
}

StageCache::StageCache(fs::path root) : root_(std::move(root)) {}

fs::path StageCache::default_root() {
  if (const char* dir = std::getenv("TPQI_CACHE_DIR"); dir && *dir) return dir;
  if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg && *xdg) return fs::path(xdg) / "tpqi";
  if (const char* home = std::getenv("HOME"); home && *home) return fs::path(home) / ".cache" / "tpqi";
  return fs::current_path() / ".tpqi-cache";
}

fs::path StageCache::path_for(const std::string& key, const char* ext) const {
  return root_ / key.substr(0, 2) / (key + ext);
}

void StageCache::write_atomic(const fs::path& target, const std::string& bytes) const {
  static std::atomic<unsigned> counter{0};
  fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid()) + "." +
                       std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("cache: cannot write " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::optional<Eigen::MatrixXd> StageCache::load(const std::string& key) const {
  if (!enabled()) return std::nullopt;
  std::ifstream in(path_for(key, ".bin"), std::ios::binary);
  std::uint64_t dims[2] = {0, 0};
  if (!in || !in.read(reinterpret_cast<char*>(dims), sizeof dims)) {
    ++misses_;
    return std::nullopt;
  }
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> m(
      static_cast<Index>(dims[0]), static_cast<Index>(dims[1]));
  if (!in.read(reinterpret_cast<char*>(m.data()),
               static_cast<std::streamsize>(m.size() * sizeof(double)))) {
    ++misses_;
    return std::nullopt;
  }
  ++hits_;
  return Eigen::MatrixXd(m);
}

void StageCache::store(const std::string& key, const Eigen::MatrixXd& m) const {
  if (!enabled()) return;
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  const std::uint64_t dims[2] = {static_cast<std::uint64_t>(m.rows()),
                                 static_cast<std::uint64_t>(m.cols())};
  std::string bytes(reinterpret_cast<const char*>(dims), sizeof dims);
  bytes.append(reinterpret_cast<const char*>(rm.data()), rm.size() * sizeof(double));
  write_atomic(path_for(key, ".bin"), bytes);
}

std::optional<std::string> StageCache::load_text(const std::string& key) const {
  if (!enabled()) return std::nullopt;
  std::ifstream in(path_for(key, ".json"), std::ios::binary);
  if (!in) {
    ++misses_;
    return std::nullopt;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  ++hits_;
  return ss.str();
}

void StageCache::store_text(const std::string& key, const std::string& text) const {
  if (enabled()) write_atomic(path_for(key, ".json"), text);
}

std::string stage_key(const std::string& stage, const std::string& fingerprint,
                      std::uint64_t input_hash) {
  return hex64(fnv1a(stage + "\n" + fingerprint + "\n" + hex64(input_hash)));
}

FeatureStore domain_features(const LumaSequence& resized, Domain domain, const PipelineConfig& cfg) {
  const std::string name = to_string(domain);
  std::optional<V1Transform> v1;
  Index dim = 0;
  if (domain == Domain::v1) {
    v1.emplace(make_bank(cfg.gabor), resized.width(), resized.height());
    dim = v1->feature_dim();
  } else if (domain == Domain::lgn) {
    dim = in_stage(name, [&] { return lgn_feature_dim(resized.width(), resized.height(), cfg.lgn); });
  } else {
    throw ConfigError("domain_features: unsupported domain " + name);
  }

  FeatureStore store(dim, cfg.cache_budget);
  const std::size_t batch = std::max<std::size_t>(1, 2 * cfg.threads);
  std::vector<Eigen::VectorXd> rows(batch);
  for (std::size_t begin = 0; begin < resized.size(); begin += batch) {
    const std::size_t count = std::min(batch, resized.size() - begin);
    parallel_for(count, cfg.threads, [&](std::size_t k) {
      const std::size_t frame = begin + k;
      rows[k] = in_stage(name + ": frame " + std::to_string(frame), [&] {
        return v1 ? v1->features(resized.frames[frame]) : lgn_features(resized.frames[frame], cfg.lgn);
      });
    });
    for (std::size_t k = 0; k < count; ++k)
      in_stage(name + ": frame " + std::to_string(begin + k), [&] { store.append(rows[k]); });
  }
  return store;
}

Trajectory domain_trajectory(const LumaSequence& resized, Domain domain, const PipelineConfig& cfg) {
  const FeatureStore store = domain_features(resized, domain, cfg);
  const Index d = std::min({cfg.pca_dim, store.rows(), store.cols()});
  Trajectory t = in_stage("pca (" + to_string(domain) + ")", [&] { return gram_pca(store, d); });
  t.domain = domain;
  return t;
}

Pipeline::Pipeline(PipelineConfig cfg, StageCache cache)
    : cfg_(std::move(cfg)), cache_(std::move(cache)) {
  cfg_.validate();
  if (cfg_.fusion && cfg_.niqe_model.empty())
    throw ConfigError("fusion needs a NIQE model (set niqe_model, or use fusion = none)");
  fingerprint_ = config_fingerprint(cfg_);
}

const NiqeModel& Pipeline::niqe_model() {
  if (!model_) model_ = in_stage("niqe model", [&] { return load_model(cfg_.niqe_model); });
  return *model_;
}

double Pipeline::niqe_of(const LumaSequence& seq) {
  const NiqeModel& model = niqe_model();
  const std::vector<double> scores =
      in_stage("niqe", [&] { return frame_scores(seq, model, cfg_.threads); });
  double sum = 0;
  for (double s : scores) sum += s;
  return sum / static_cast<double>(scores.size());
}

QualityReport Pipeline::assemble(const std::string& source_id, const Trajectory& lgn,
                                 const Trajectory& v1, std::optional<double> q_niqe) const {
  QualityReport r;
  r.source_id = source_id;
  r.config_fingerprint = fingerprint_;
  r.frames = static_cast<std::size_t>(lgn.frames());
  const DomainScore scores[] = {domain_score(lgn.points, cfg_.descriptor),
                                domain_score(v1.points, cfg_.descriptor)};
  const TpqiScore total = tpqi(std::span<const DomainScore>(scores));
  r.q_tpqi_lgn = scores[0].value;
  r.q_tpqi_v1 = scores[1].value;
  r.q_tpqi = total.value;
  const char* names[] = {"lgn", "v1"};
  for (int k = 0; k < 2; ++k) {
    if (!scores[k].degenerate) continue;
    r.degenerate_flags.push_back(std::string(names[k]) +
                                 (scores[k].used == 0 ? ": no usable instant"
                                                      : ": mean descriptor below floor"));
  }
  for (const Trajectory* t : {&lgn, &v1})
    if (t->dim() < cfg_.pca_dim)
      r.warnings.push_back(to_string(t->domain) + ": pca_dim reduced from " +
                           std::to_string(cfg_.pca_dim) + " to " + std::to_string(t->dim()));
  if (q_niqe) {
    r.q_niqe = *q_niqe;
    r.fuse_scores();
    if (cfg_.fusion == Fusion::product && *r.q_tpqi <= 0)
      r.warnings.push_back("q_tpqi <= 0: product fusion inverts the NIQE ordering");
  }
  return r;
}

QualityReport Pipeline::score(const LumaSequence& seq) {
  validate_sequence(seq);
  const LumaSequence resized =
      in_stage("resize", [&] { return resize(seq, cfg_.width, cfg_.height); });
  const Trajectory lgn = domain_trajectory(resized, Domain::lgn, cfg_);
  const Trajectory v1 = domain_trajectory(resized, Domain::v1, cfg_);
  std::optional<double> q_niqe;
  if (cfg_.fusion) q_niqe = niqe_of(seq);
  return assemble(seq.source_id, lgn, v1, q_niqe);
}

Trajectory Pipeline::trajectory(const fs::path& input, Domain domain) {
  const std::uint64_t h = content_hash(input);
  const std::string key =
      stage_key("trajectory." + to_string(domain),
                stage_fingerprint(cfg_, to_string(domain) + "."), h);
  if (auto m = cache_.load(key)) return unpack(*m, domain);
  const LumaSequence seq = in_stage("read", [&] {
    LumaSequence s = read_video(input);
    validate_sequence(s);
    return s;
  });
  const LumaSequence resized =
      in_stage("resize", [&] { return resize(seq, cfg_.width, cfg_.height); });
  Trajectory t = domain_trajectory(resized, domain, cfg_);
  cache_.store(key, pack(t));
  return t;
}

QualityReport Pipeline::score(const fs::path& input) {
  const std::uint64_t h = content_hash(input);
  const std::string report_key = stage_key("report", fingerprint_, h);
  if (auto text = cache_.load_text(report_key))
  {
    QualityReport r = report_from_json(nlohmann::json::parse(*text));
    r.source_id = input.string();
    return r;
  }

  std::optional<LumaSequence> seq, resized;
  auto source = [&]() -> const LumaSequence& {
    if (!seq) seq = in_stage("read", [&] {
      LumaSequence s = read_video(input);
      validate_sequence(s);
      return s;
    });
    return *seq;
  };
  auto trajectory_of = [&](Domain domain) {
    const std::string key = stage_key("trajectory." + to_string(domain),
                                      stage_fingerprint(cfg_, to_string(domain) + "."), h);
    if (auto m = cache_.load(key)) return unpack(*m, domain);
    if (!resized) {
      const LumaSequence& src = source();
      resized = in_stage("resize", [&] { return resize(src, cfg_.width, cfg_.height); });
    }
    Trajectory t = domain_trajectory(*resized, domain, cfg_);
    cache_.store(key, pack(t));
    return t;
  };
  const Trajectory lgn = trajectory_of(Domain::lgn);
  const Trajectory v1 = trajectory_of(Domain::v1);
  resized.reset();

  std::optional<double> q_niqe;
  if (cfg_.fusion) {
    const std::string key =
        stage_key("niqe", hex64(content_hash(cfg_.niqe_model)), h);
    if (auto m = cache_.load(key)) {
      q_niqe = (*m)(0, 0);
    } else {
      q_niqe = niqe_of(source());
      cache_.store(key, Eigen::MatrixXd::Constant(1, 1, *q_niqe));
    }
  }
  QualityReport r = assemble(input.string(), lgn, v1, q_niqe);
  cache_.store_text(report_key, to_json(r).dump());
  return r;
}

} // namespace tpqi
