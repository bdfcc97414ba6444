#include "atelier/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "atelier/codec.hpp"
#include "atelier/imaging.hpp"

namespace atelier::dataset {

namespace fs = std::filesystem;

const char* to_string(Kind kind) {
  return kind == Kind::FullComposition ? "full" : "detail";
}

const char* to_string(Group group) {
  switch (group) {
    case Group::Singles: return "singles";
    case Group::Pairs: return "pairs";
    case Group::Triples: return "triples";
    case Group::Extras: return "extras";
  }
  return "?";
}

std::size_t assign_bucket(std::size_t w, std::size_t h, const std::vector<std::size_t>& buckets) {
  if (buckets.empty()) throw Error(ErrorCode::ValidationError, "no buckets configured");
  const std::size_t side = std::min(w, h);
  std::size_t best = buckets.front();
  std::size_t best_d = side > best ? side - best : best - side;
  for (std::size_t b : buckets) {
    const std::size_t d = side > b ? side - b : b - side;
    if (d < best_d || (d == best_d && b < best)) {
      best = b;
      best_d = d;
    }
  }
  return best;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IOError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool is_image(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

bool is_png(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png";
}

ImageBuffer load_image(const fs::path& p) {
  return is_png(p) ? read_png(p) : decode_jpeg(read_bytes(p));
}

std::optional<Group> group_of(const fs::path& rel) {
  for (const auto& part : rel.parent_path()) {
    const std::string s = part.string();
    if (s == "singles") return Group::Singles;
    if (s == "pairs") return Group::Pairs;
    if (s == "triples") return Group::Triples;
    if (s == "extras") return Group::Extras;
  }
  return std::nullopt;
}

std::optional<Kind> kind_of(const fs::path& rel, const KindRule& rule) {
  for (const auto& part : rel.parent_path()) {
    if (part == rule.full_dir) return Kind::FullComposition;
    if (part == rule.detail_dir) return Kind::DetailShot;
  }
  return std::nullopt;
}

double pct(std::size_t part, std::size_t total) {
  return 100.0 * static_cast<double>(part) / static_cast<double>(total);
}

}  // namespace

ScanResult scan(const fs::path& root, const KindRule& rule, const std::vector<std::size_t>& buckets) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw Error(ErrorCode::IOError, "dataset root " + root.string() + " is not a directory");
  }
  std::vector<fs::path> images;
  for (auto it = fs::recursive_directory_iterator(root, ec); !ec && it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    if (it->is_regular_file() && is_image(it->path())) images.push_back(it->path());
  }
  if (ec) throw Error(ErrorCode::IOError, "cannot walk " + root.string() + ": " + ec.message());
  std::sort(images.begin(), images.end());

  ScanResult result;
  for (const auto& path : images) {
    const fs::path rel = fs::relative(path, root);
    const std::string id = rel.generic_string();
    fs::path caption_path = path;
    caption_path.replace_extension(".txt");
    if (!fs::exists(caption_path)) {
      result.issues.push_back({"MissingCaption", id, "no caption file " + caption_path.filename().string()});
      continue;
    }
    std::ifstream cin(caption_path);
    std::stringstream ss;
    ss << cin.rdbuf();
    const std::string caption = trim(ss.str());
    if (caption.empty()) {
      result.issues.push_back({"EmptyCaption", id, "caption file is empty"});
      continue;
    }
    const auto kind = kind_of(rel, rule);
    if (!kind) {
      result.issues.push_back({"UnclassifiedImage", id,
                               "not under a '" + rule.full_dir + "' or '" + rule.detail_dir + "' folder"});
      continue;
    }
    DatasetRecord rec;
    try {
      if (is_png(path)) {
        const ImageInfo info = read_png_info(path);
        rec.width = info.width;
        rec.height = info.height;
      } else {
        const ImageBuffer img = load_image(path);
        rec.width = img.width();
        rec.height = img.height();
      }
    } catch (const Error& e) {
      result.issues.push_back({"UnreadableImage", id, e.what()});
      continue;
    }
    rec.id = id;
    rec.image_path = path;
    rec.caption = caption;
    rec.kind = *kind;
    rec.bucket = assign_bucket(rec.width, rec.height, buckets);
    rec.group = group_of(rel);
    try {
      rec.asset_tags = stencil::parse_taxonomy(rel);
    } catch (const Error&) {
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

nlohmann::json ScanResult::to_json() const {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json j = {{"id", r.id},
                        {"kind", to_string(r.kind)},
                        {"bucket", r.bucket},
                        {"size", {r.width, r.height}},
                        {"caption", r.caption}};
    if (r.group) j["group"] = to_string(*r.group);
    if (r.asset_tags) {
      j["asset_tags"] = {{"z_role", stencil::to_string(r.asset_tags->z_role)},
                         {"category", r.asset_tags->category},
                         {"line_weight", stencil::to_string(r.asset_tags->line_weight)}};
    }
    recs.push_back(std::move(j));
  }
  nlohmann::json iss = nlohmann::json::array();
  for (const auto& i : issues) iss.push_back({{"code", i.code}, {"path", i.path}, {"message", i.message}});
  return {{"records", std::move(recs)}, {"issues", std::move(iss)}};
}

void CaptionTransformConfig::validate() const {
  if (!(dropout_p >= 0.0 && dropout_p <= 1.0)) {
    throw Error(ErrorCode::ValidationError, "dropout_p must lie in [0,1]");
  }
}

std::vector<std::string> caption_tokens(const std::string& caption) {
  std::vector<std::string> out;
  if (caption.find(',') != std::string::npos) {
    std::size_t start = 0;
    while (true) {
      const auto comma = caption.find(',', start);
      out.push_back(trim(caption.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  } else {
    std::istringstream in(caption);
    for (std::string w; in >> w;) out.push_back(w);
  }
  return out;
}

CaptionTransformer::CaptionTransformer(const CaptionTransformConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
  cfg_.validate();
}

std::string CaptionTransformer::operator()(const std::string& caption) {
  if (rng_.bernoulli(cfg_.dropout_p)) return {};
  if (!cfg_.token_shuffle) return caption;
  auto tokens = caption_tokens(caption);
  rng_.shuffle(std::span<std::string>(tokens));
  const char* sep = caption.find(',') != std::string::npos ? ", " : " ";
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

std::string caption_transform(const std::string& caption, const CaptionTransformConfig& cfg) {
  CaptionTransformer t(cfg);
  return t(caption);
}

AuditReport audit_ratio(const std::vector<DatasetRecord>& records, const AuditConfig& cfg) {
  if (records.empty()) throw Error(ErrorCode::EmptyDataset, "audit needs at least one record");
  if (!(cfg.target_full >= 0 && cfg.target_detail >= 0 && cfg.target_full + cfg.target_detail > 0)) {
    throw Error(ErrorCode::ValidationError, "audit targets must be non-negative with a positive sum");
  }
  AuditReport r;
  for (const auto& rec : records) {
    (rec.kind == Kind::FullComposition ? r.full : r.detail)++;
    if (rec.image_path.stem().string().ends_with("_hflip")) ++r.flipped;
  }
  r.total = records.size();
  r.full_pct = pct(r.full, r.total);
  r.detail_pct = pct(r.detail, r.total);
  const double tsum = cfg.target_full + cfg.target_detail;
  r.target_full_pct = 100.0 * cfg.target_full / tsum;
  r.target_detail_pct = 100.0 * cfg.target_detail / tsum;
  // Compare count ratios directly so that counts equal to the target
  // numbers deviate by exactly zero.
  const double actual = static_cast<double>(r.full) / static_cast<double>(r.total);
  const double target = cfg.target_full / tsum;
  r.deviation_pct = 100.0 * std::abs(actual - target);
  r.within_tolerance = r.deviation_pct <= cfg.tolerance_pct;
  std::ostringstream tgt;
  tgt << cfg.target_full << "/" << cfg.target_detail;
  if (std::abs(tsum - 100.0) > 1e-9) {
    std::ostringstream os;
    os.precision(3);
    os << "target " << tgt.str() << " does not sum to 100; compared as " << r.target_full_pct << "/"
       << r.target_detail_pct << " percent";
    r.warnings.push_back(os.str());
  }
  if (!r.within_tolerance) {
    std::ostringstream os;
    os.precision(3);
    os << "full/detail split " << r.full_pct << "/" << r.detail_pct << " deviates from target "
       << tgt.str() << " by " << r.deviation_pct << " points";
    r.warnings.push_back(os.str());
  }
  r.hflip_opportunity = r.flipped == 0;
  return r;
}

nlohmann::json AuditReport::to_json() const {
  return {{"counts", {{"full", full}, {"detail", detail}, {"total", total}}},
          {"percent", {{"full", full_pct}, {"detail", detail_pct}}},
          {"target_percent", {{"full", target_full_pct}, {"detail", target_detail_pct}}},
          {"deviation_points", deviation_pct},
          {"within_tolerance", within_tolerance},
          {"hflip", {{"flipped_records", flipped},
                     {"opportunity", hflip_opportunity},
                     {"records_after_expand", hflip_opportunity ? 2 * total : total}}},
          {"warnings", warnings}};
}

std::vector<DatasetRecord> hflip_expand(const std::vector<DatasetRecord>& records, const fs::path& out_dir) {
  std::vector<DatasetRecord> out = records;
  out.reserve(2 * records.size());
  for (const auto& rec : records) {
    const fs::path rel(rec.id);
    const fs::path dir = out_dir / rel.parent_path();
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IOError, "cannot create " + dir.string() + ": " + ec.message());
    const std::string stem = rel.stem().string() + "_hflip";
    const fs::path image_path = dir / (stem + ".png");
    ImageBuffer img;
    try {
      img = load_image(rec.image_path);
    } catch (const Error& e) {
      throw Error(ErrorCode::IOError, "cannot read " + rec.image_path.string() + ": " + e.what());
    }
    write_png(image_path, imaging::flip_horizontal(img));
    std::ofstream cap(dir / (stem + ".txt"), std::ios::binary);
    cap << rec.caption;
    if (!cap) throw Error(ErrorCode::IOError, "cannot write caption for " + image_path.string());
    DatasetRecord flipped = rec;
    flipped.id = (rel.parent_path() / (stem + ".png")).generic_string();
    flipped.image_path = image_path;
    out.push_back(std::move(flipped));
  }
  return out;
}

CurriculumManifest curriculum_manifest(const std::vector<DatasetRecord>& records,
                                       const CurriculumConfig& cfg) {
  CurriculumManifest m;
  std::vector<std::string> singles, pairs, later;
  std::size_t untagged = 0;
  for (const auto& r : records) {
    if (!r.group) {
      ++untagged;
      continue;
    }
    switch (*r.group) {
      case Group::Singles: singles.push_back(r.id); ++m.singles; break;
      case Group::Pairs: pairs.push_back(r.id); ++m.pairs; break;
      case Group::Triples: later.push_back(r.id); ++m.triples; break;
      case Group::Extras: later.push_back(r.id); ++m.extras; break;
    }
  }
  if (singles.empty()) throw Error(ErrorCode::NoSingles, "curriculum stage 1 needs at least one single");
  if (untagged) {
    m.warnings.push_back(std::to_string(untagged) + " records without a singles/pairs/triples/extras tag were left out");
  }
  m.total = m.singles + m.pairs + m.triples + m.extras;
  m.pairs_fraction = static_cast<double>(m.pairs) / static_cast<double>(m.total);
  m.triples_fraction = static_cast<double>(m.triples) / static_cast<double>(m.total);

  std::vector<std::string> ids = singles;
  m.stages.push_back({"singles", 1000, 2000, ids});
  if (pairs.empty()) {
    m.warnings.push_back("no pairs: stage 'pairs' omitted");
  } else {
    ids.insert(ids.end(), pairs.begin(), pairs.end());
    m.stages.push_back({"pairs", 2000, 6000, ids});
  }
  if (later.empty()) {
    m.warnings.push_back("no triples or extras: stage 'triples' omitted");
  } else {
    ids.insert(ids.end(), later.begin(), later.end());
    m.stages.push_back({"triples", 6000, std::nullopt, ids});
  }
  auto check = [&](const char* name, double actual, double target) {
    if (std::abs(actual - target) > cfg.tolerance + 1e-12) {
      std::ostringstream os;
      os << name << " fraction " << actual << " is off the " << target << " target";
      m.warnings.push_back(os.str());
    }
  };
  check("pairs", m.pairs_fraction, cfg.pairs_target);
  check("triples", m.triples_fraction, cfg.triples_target);
  return m;
}

nlohmann::json CurriculumManifest::to_json() const {
  nlohmann::json st = nlohmann::json::array();
  for (const auto& s : stages) {
    st.push_back({{"name", s.name},
                  {"step_range", {s.step_lo, s.step_hi ? nlohmann::json(*s.step_hi) : nlohmann::json()}},
                  {"record_ids", s.record_ids}});
  }
  return {{"stages", std::move(st)},
          {"counts", {{"singles", singles}, {"pairs", pairs}, {"triples", triples}, {"extras", extras}, {"total", total}}},
          {"fractions", {{"pairs", pairs_fraction}, {"triples", triples_fraction}}},
          {"warnings", warnings}};
}

}  // namespace atelier::dataset
