#include "atelier/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <thread>

namespace atelier::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Typed access to one JSON object, reporting problems by dotted field path.
class Fields {
 public:
  Fields(const json& obj, std::string path, std::vector<std::string>& warnings)
      : obj_(obj), path_(std::move(path)), warnings_(warnings) {
    if (!obj_.is_object()) throw Error(ErrorCode::ParseError, where("") + "expected an object");
  }

  bool has(const char* key) const { return obj_.contains(key) && !obj_.at(key).is_null(); }

  template <typename T>
  std::optional<T> opt(const char* key) {
    seen_.insert(key);
    if (!has(key)) return std::nullopt;
    return convert<T>(obj_.at(key), key);
  }

  template <typename T>
  T get(const char* key, T fallback) {
    auto v = opt<T>(key);
    return v ? *v : fallback;
  }

  template <typename T>
  T require(const char* key) {
    auto v = opt<T>(key);
    if (!v) throw Error(ErrorCode::ParseError, where(key) + "required field is missing");
    return *v;
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return has(key) ? &obj_.at(key) : nullptr;
  }

  std::string where(const std::string& key) const {
    const std::string full = path_.empty() ? key : key.empty() ? path_ : path_ + "." + key;
    return "field '" + full + "': ";
  }

  std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void warn_unknown() const {
    for (const auto& [k, v] : obj_.items()) {
      if (!seen_.count(k)) warnings_.push_back(where(k) + "unknown field ignored");
    }
  }

  std::vector<std::string>& warnings() { return warnings_; }

 private:
  template <typename T>
  T convert(const json& v, const char* key) const {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw Error(ErrorCode::ParseError, where(key) + "expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string> || std::is_same_v<T, fs::path>) {
      if (!v.is_string()) throw Error(ErrorCode::ParseError, where(key) + "expected a string");
      return T(v.get<std::string>());
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
        throw Error(ErrorCode::ParseError, where(key) + "expected a non-negative integer");
      }
      return static_cast<T>(v.get<std::uint64_t>());
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw Error(ErrorCode::ParseError, where(key) + "expected an integer");
      return static_cast<T>(v.get<std::int64_t>());
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw Error(ErrorCode::ParseError, where(key) + "expected a number");
      return v.get<T>();
    } else if constexpr (std::is_same_v<T, pairsynth::Range>) {
      if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        throw Error(ErrorCode::ParseError, where(key) + "expected [lo, hi]");
      }
      return pairsynth::Range{v[0].get<double>(), v[1].get<double>()};
    } else {
      static_assert(sizeof(T) == 0, "unsupported field type");
    }
  }

  const json& obj_;
  std::string path_;
  std::vector<std::string>& warnings_;
  std::set<std::string> seen_;
};

fs::path resolve(const fs::path& base, const fs::path& p) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

const json& as_array(const json& v, const std::string& where) {
  if (!v.is_array()) throw Error(ErrorCode::ParseError, where + "expected an array");
  return v;
}

tiler::Pass parse_pass(const json& j, std::size_t i, std::uint64_t seed,
                       std::vector<std::string>& warnings) {
  Fields f(j, "passes[" + std::to_string(i) + "]", warnings);
  static const char* names[] = {"A", "B", "C"};
  tiler::Pass p;
  p.name = f.get<std::string>("name", i < 3 ? names[i] : "pass" + std::to_string(i));
  p.denoise = f.get<double>("denoise", 0.0);
  p.adapter_scale = f.get<double>("adapter_scale", 1.0);
  p.tile = f.get<std::size_t>("tile", p.tile);
  p.overlap = f.get<std::size_t>("overlap", p.overlap);
  p.pad = f.get<std::size_t>("pad", p.pad);
  p.prompt = f.get<std::string>("prompt", "");
  p.seed = f.get<std::uint64_t>("seed", seed + i);
  f.warn_unknown();
  return p;
}

void parse_degradation(const json& j, pairsynth::DegradationConfig& d, std::vector<std::string>& warnings) {
  Fields f(j, "pairsynth.degradation", warnings);
  d.blur_sigma = f.get<pairsynth::Range>("blur_sigma", d.blur_sigma);
  d.noise_sigma = f.get<pairsynth::Range>("noise_sigma", d.noise_sigma);
  d.scale = f.get<int>("scale", d.scale);
  if (const json* q = f.child("jpeg_quality")) {
    if (!q->is_array() || q->size() != 2 || !(*q)[0].is_number_integer() || !(*q)[1].is_number_integer()) {
      throw Error(ErrorCode::ParseError, f.where("jpeg_quality") + "expected [lo, hi] integers");
    }
    d.jpeg_quality_lo = (*q)[0].get<int>();
    d.jpeg_quality_hi = (*q)[1].get<int>();
  }
  if (const json* fl = f.child("filters")) {
    d.downsample_filters.clear();
    for (const auto& name : as_array(*fl, f.where("filters"))) {
      auto parsed = name.is_string() ? imaging::parse_filter(name.get<std::string>()) : std::nullopt;
      if (!parsed) throw Error(ErrorCode::ParseError, f.where("filters") + "unknown filter " + name.dump());
      d.downsample_filters.push_back(*parsed);
    }
  }
  if (const json* so = f.child("stage_order")) {
    d.stage_order.clear();
    for (const auto& name : as_array(*so, f.where("stage_order"))) {
      auto parsed = name.is_string() ? pairsynth::parse_stage(name.get<std::string>()) : std::nullopt;
      if (!parsed) throw Error(ErrorCode::ParseError, f.where("stage_order") + "unknown stage " + name.dump());
      d.stage_order.push_back(*parsed);
    }
  }
  f.warn_unknown();
}

void parse_pairsynth(const json& j, const fs::path& base, PairsynthSection& ps,
                     std::vector<std::string>& warnings) {
  Fields f(j, "pairsynth", warnings);
  if (const json* s = f.child("sources")) {
    for (const auto& item : as_array(*s, f.where("sources"))) {
      if (item.is_string()) {
        ps.sources.push_back(resolve(base, item.get<std::string>()));
        ps.masks.emplace_back();
      } else {
        Fields sf(item, f.sub("sources[]"), warnings);
        ps.sources.push_back(resolve(base, sf.require<fs::path>("image")));
        auto mask = sf.opt<fs::path>("mask");
        ps.masks.push_back(mask ? std::optional<fs::path>(resolve(base, *mask)) : std::nullopt);
        sf.warn_unknown();
      }
    }
  }
  ps.patch = f.get<std::size_t>("patch", ps.patch);
  ps.count = f.get<std::size_t>("count", ps.count);
  ps.out_dir = resolve(base, f.get<fs::path>("out_dir", ps.out_dir));
  if (const json* d = f.child("degradation")) parse_degradation(*d, ps.degradation, warnings);
  if (const json* a = f.child("augment")) {
    Fields af(*a, "pairsynth.augment", warnings);
    pairsynth::PairAugment aug;
    aug.hflip = af.get<bool>("hflip", false);
    aug.vflip = af.get<bool>("vflip", false);
    aug.quarter_turns = af.get<int>("quarter_turns", 0);
    aug.brightness = af.get<pairsynth::Range>("brightness", aug.brightness);
    aug.contrast = af.get<pairsynth::Range>("contrast", aug.contrast);
    af.warn_unknown();
    ps.augment = aug;
  }
  f.warn_unknown();
}

void parse_augment(const json& j, const fs::path& base, AugmentSection& a, std::vector<std::string>& warnings) {
  Fields f(j, "augment", warnings);
  a.input = resolve(base, f.get<fs::path>("input", {}));
  a.output = resolve(base, f.get<fs::path>("output", {}));
  auto& s = a.spec;
  s.hflip = f.get<bool>("hflip", false);
  s.vflip = f.get<bool>("vflip", false);
  s.quarter_turns = f.get<int>("quarter_turns", 0);
  s.rotation_deg = f.get<double>("rotation_deg", 0.0);
  s.scale_factor = f.get<double>("scale_factor", 1.0);
  s.brightness = f.get<double>("brightness", 0.0);
  s.contrast = f.get<double>("contrast", 0.0);
  s.grain_sigma = f.get<double>("grain_sigma", 0.0);
  if (auto seed = f.opt<std::uint64_t>("seed")) {
    s.seed = *seed;
    a.seed_given = true;
  }
  f.warn_unknown();
}

void parse_composite(const json& j, const fs::path& base, CompositeSection& c, std::vector<std::string>& warnings) {
  Fields f(j, "composite", warnings);
  c.width = f.get<std::size_t>("width", 0);
  c.height = f.get<std::size_t>("height", 0);
  c.output = resolve(base, f.get<fs::path>("output", {}));
  if (const json* p = f.child("placements")) {
    std::size_t i = 0;
    for (const auto& item : as_array(*p, f.where("placements"))) {
      Fields pf(item, "composite.placements[" + std::to_string(i++) + "]", warnings);
      CompositeItem ci;
      ci.asset = resolve(base, pf.require<fs::path>("asset"));
      ci.x = pf.get<std::int64_t>("x", 0);
      ci.y = pf.get<std::int64_t>("y", 0);
      ci.scale = pf.get<double>("scale", 1.0);
      pf.warn_unknown();
      c.placements.push_back(ci);
    }
  }
  f.warn_unknown();
}

void parse_dataset(const json& j, const fs::path& base, DatasetSection& d, std::vector<std::string>& warnings) {
  Fields f(j, "dataset", warnings);
  d.root = resolve(base, f.get<fs::path>("root", {}));
  d.out_dir = resolve(base, f.get<fs::path>("out_dir", {}));
  d.manifest = resolve(base, f.get<fs::path>("manifest", {}));
  if (const json* k = f.child("kind_rule")) {
    Fields kf(*k, "dataset.kind_rule", warnings);
    d.kind_rule.full_dir = kf.get<std::string>("full_dir", d.kind_rule.full_dir);
    d.kind_rule.detail_dir = kf.get<std::string>("detail_dir", d.kind_rule.detail_dir);
    kf.warn_unknown();
  }
  if (const json* b = f.child("buckets")) {
    d.buckets.clear();
    for (const auto& v : as_array(*b, f.where("buckets"))) {
      if (!v.is_number_unsigned()) throw Error(ErrorCode::ParseError, f.where("buckets") + "expected positive integers");
      d.buckets.push_back(v.get<std::size_t>());
    }
  }
  if (const json* c = f.child("caption")) {
    Fields cf(*c, "dataset.caption", warnings);
    d.caption.dropout_p = cf.get<double>("dropout_p", d.caption.dropout_p);
    d.caption.token_shuffle = cf.get<bool>("token_shuffle", d.caption.token_shuffle);
    if (auto s = cf.opt<std::uint64_t>("seed")) {
      d.caption.seed = *s;
      d.caption_seed_given = true;
    }
    cf.warn_unknown();
  }
  if (const json* a = f.child("audit")) {
    Fields af(*a, "dataset.audit", warnings);
    d.audit.target_full = af.get<double>("target_full", d.audit.target_full);
    d.audit.target_detail = af.get<double>("target_detail", d.audit.target_detail);
    d.audit.tolerance_pct = af.get<double>("tolerance", d.audit.tolerance_pct);
    af.warn_unknown();
  }
  if (const json* c = f.child("curriculum")) {
    Fields cf(*c, "dataset.curriculum", warnings);
    d.curriculum.pairs_target = cf.get<double>("pairs_target", d.curriculum.pairs_target);
    d.curriculum.triples_target = cf.get<double>("triples_target", d.curriculum.triples_target);
    d.curriculum.tolerance = cf.get<double>("tolerance", d.curriculum.tolerance);
    cf.warn_unknown();
  }
  f.warn_unknown();
}

void collect(std::vector<std::string>& errors, const std::function<void()>& check) {
  try {
    check();
  } catch (const Error& e) {
    std::istringstream lines(e.what());
    for (std::string line; std::getline(lines, line);) {
      const auto b = line.find_first_not_of(' ');
      if (b != std::string::npos && line.find("invalid schedule:") == std::string::npos) {
        errors.push_back(line.substr(b));
      }
    }
  }
}

void finalize(JobConfig& cfg, const Overrides& ov, bool schedule_given) {
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.parallelism) cfg.parallelism = *ov.parallelism;
  if (ov.input) cfg.input = *ov.input;
  if (ov.output) cfg.output = *ov.output;
  if (ov.refiner_endpoint) {
    cfg.refiner.kind = "http";
    cfg.refiner.endpoint = *ov.refiner_endpoint;
  }
  if (cfg.refiner.kind == "http" && !cfg.refiner.endpoint) {
    if (const char* env = std::getenv("ATELIER_REFINER_ENDPOINT"); env && *env) cfg.refiner.endpoint = env;
  }
  if (!schedule_given) {
    const auto path = cfg.schedule.path;
    const bool fff = cfg.schedule.final_full_frame;
    const auto steps = cfg.schedule.step_scales;
    cfg.schedule = path == tiler::PathKind::GAN ? tiler::default_gan_schedule() : tiler::default_diffusion_schedule();
    cfg.schedule.final_full_frame = fff;
    cfg.schedule.step_scales = steps;
    for (std::size_t i = 0; i < cfg.schedule.passes.size(); ++i) cfg.schedule.passes[i].seed = cfg.seed + i;
  }
  if (!cfg.augment.seed_given) cfg.augment.spec.seed = cfg.seed;
  if (!cfg.dataset.caption_seed_given) cfg.dataset.caption.seed = cfg.seed;

  std::vector<std::string> errors;
  collect(errors, [&] {
    auto warnings = cfg.schedule.validate();
    cfg.warnings.insert(cfg.warnings.end(), warnings.begin(), warnings.end());
  });
  if (!(cfg.target_scale >= 1.0)) errors.push_back("target_scale must be >= 1");
  if (cfg.parallelism == 0) errors.push_back("parallelism must be >= 1");
  if (cfg.memory_budget && *cfg.memory_budget == 0) errors.push_back("memory_budget must be positive");
  static const std::set<std::string> kinds = {"identity", "classical", "grain", "http"};
  if (!kinds.count(cfg.refiner.kind)) {
    errors.push_back("refiner.kind '" + cfg.refiner.kind + "' is not identity, classical, grain or http");
  }
  if (cfg.refiner.kind == "classical" && cfg.refiner.scale != 1 && cfg.refiner.scale != 2 && cfg.refiner.scale != 4) {
    errors.push_back("refiner.scale must be 1, 2 or 4");
  }
  if (cfg.refiner.max_tile_px < 64) errors.push_back("refiner.max_tile_px must be >= 64");
  if (cfg.schedule.path == tiler::PathKind::Diffusion && cfg.refiner.kind == "classical" && cfg.refiner.scale != 1) {
    errors.push_back("diffusion path needs a scale-1 refiner; classical refiner has scale " +
                     std::to_string(cfg.refiner.scale));
  }
  collect(errors, [&] { cfg.pairsynth.degradation.validate(); });
  if (cfg.pairsynth.patch == 0 || cfg.pairsynth.degradation.scale <= 0 ||
      cfg.pairsynth.patch % static_cast<std::size_t>(std::max(cfg.pairsynth.degradation.scale, 1)) != 0) {
    errors.push_back("pairsynth.patch must be a positive multiple of the degradation scale");
  }
  if (cfg.pairsynth.augment) {
    const auto& a = *cfg.pairsynth.augment;
    for (const auto& [name, r] : {std::pair{"brightness", a.brightness}, std::pair{"contrast", a.contrast}}) {
      if (r.lo > r.hi || r.lo < -0.2 || r.hi > 0.2) {
        errors.push_back(std::string("pairsynth.augment.") + name + " must be an ordered range within [-0.2, 0.2]");
      }
    }
  }
  collect(errors, [&] { cfg.augment.spec.validate(); });
  collect(errors, [&] { cfg.dataset.caption.validate(); });
  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw Error(ErrorCode::ValidationError, msg);
  }
}

}  // namespace

std::size_t default_parallelism() {
  return std::max<std::size_t>(std::thread::hardware_concurrency(), 1);
}

JobConfig default_config(const Overrides& overrides) {
  JobConfig cfg;
  cfg.parallelism = default_parallelism();
  finalize(cfg, overrides, false);
  return cfg;
}

JobConfig parse_config(const json& doc, const fs::path& base_dir, const Overrides& overrides) {
  JobConfig cfg;
  cfg.parallelism = default_parallelism();
  Fields f(doc, "", cfg.warnings);
  cfg.input = resolve(base_dir, f.get<fs::path>("input", {}));
  cfg.output = resolve(base_dir, f.get<fs::path>("output", {}));
  if (auto path = f.opt<std::string>("path")) {
    try {
      cfg.schedule.path = tiler::parse_path(*path);
    } catch (const Error& e) {
      throw Error(ErrorCode::ValidationError, f.where("path") + e.what());
    }
  }
  cfg.target_scale = f.get<double>("target_scale", cfg.target_scale);
  if (const json* s = f.child("step_scales")) {
    for (const auto& v : as_array(*s, f.where("step_scales"))) {
      if (!v.is_number()) throw Error(ErrorCode::ParseError, f.where("step_scales") + "expected numbers");
      cfg.schedule.step_scales.push_back(v.get<double>());
    }
  }
  cfg.schedule.final_full_frame = f.get<bool>("final_full_frame", false);
  cfg.memory_budget = f.opt<std::size_t>("memory_budget");
  cfg.seed = overrides.seed ? *overrides.seed : f.get<std::uint64_t>("seed", 0);
  cfg.parallelism = f.get<std::size_t>("parallelism", cfg.parallelism);
  if (const json* c = f.child("canvas")) {
    Fields cf(*c, "canvas", cfg.warnings);
    cfg.canvas = {cf.require<std::size_t>("width"), cf.require<std::size_t>("height")};
    cf.warn_unknown();
  }
  bool schedule_given = false;
  if (const json* p = f.child("passes")) {
    std::size_t i = 0;
    for (const auto& item : as_array(*p, f.where("passes"))) {
      cfg.schedule.passes.push_back(parse_pass(item, i++, cfg.seed, cfg.warnings));
    }
    schedule_given = true;
  }
  if (const json* r = f.child("refiner")) {
    Fields rf(*r, "refiner", cfg.warnings);
    cfg.refiner.kind = rf.get<std::string>("kind", cfg.refiner.kind);
    cfg.refiner.endpoint = rf.opt<std::string>("endpoint");
    cfg.refiner.scale = rf.get<int>("scale", cfg.refiner.scale);
    cfg.refiner.max_tile_px = rf.get<std::size_t>("max_tile_px", cfg.refiner.max_tile_px);
    rf.warn_unknown();
  }
  if (const json* s = f.child("pairsynth")) parse_pairsynth(*s, base_dir, cfg.pairsynth, cfg.warnings);
  if (const json* s = f.child("augment")) parse_augment(*s, base_dir, cfg.augment, cfg.warnings);
  if (const json* s = f.child("composite")) parse_composite(*s, base_dir, cfg.composite, cfg.warnings);
  if (const json* s = f.child("dataset")) parse_dataset(*s, base_dir, cfg.dataset, cfg.warnings);
  f.warn_unknown();
  finalize(cfg, overrides, schedule_given);
  return cfg;
}

JobConfig load_config(const fs::path& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IOError, "cannot read config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path(), overrides);
}

refiner::RefinerHandle make_refiner(const RefinerConfig& cfg) {
  if (cfg.kind == "identity") return refiner::make_identity_refiner(cfg.max_tile_px);
  if (cfg.kind == "classical") return refiner::make_classical_refiner(cfg.scale, cfg.max_tile_px);
  if (cfg.kind == "grain") return refiner::make_grain_refiner(cfg.max_tile_px);
  if (cfg.kind == "http") {
    if (!cfg.endpoint) {
      throw Error(ErrorCode::ValidationError,
                  "http refiner needs an endpoint (--refiner-endpoint, refiner.endpoint or ATELIER_REFINER_ENDPOINT)");
    }
    return refiner::make_http_refiner(*cfg.endpoint);
  }
  throw Error(ErrorCode::ValidationError, "unknown refiner kind '" + cfg.kind + "'");
}

}  // namespace atelier::cli
