#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "atelier/random.hpp"
#include "atelier/stencil.hpp"

namespace atelier::dataset {

enum class Kind { FullComposition, DetailShot };
const char* to_string(Kind kind);

/// Curriculum group taken from a `singles/`, `pairs/`, `triples/` or
/// `extras/` path component.
enum class Group { Singles, Pairs, Triples, Extras };
const char* to_string(Group group);

struct DatasetRecord {
  std::string id;  // path relative to the scan root, '/' separated
  std::filesystem::path image_path;
  std::string caption;
  std::size_t width = 0, height = 0;
  std::size_t bucket = 0;
  Kind kind = Kind::FullComposition;
  std::optional<stencil::TaxonomyTags> asset_tags;
  std::optional<Group> group;
};

inline const std::vector<std::size_t> kDefaultBuckets = {512, 768, 1024};

/// Nearest bucket to min(w, h); ties go to the smaller bucket.
std::size_t assign_bucket(std::size_t w, std::size_t h,
                          const std::vector<std::size_t>& buckets = kDefaultBuckets);

struct KindRule {
  std::string full_dir = "full";
  std::string detail_dir = "detail";
};

struct ScanIssue {
  std::string code;  // MissingCaption, EmptyCaption, UnreadableImage, UnclassifiedImage
  std::string path;
  std::string message;
};

struct ScanResult {
  std::vector<DatasetRecord> records;
  std::vector<ScanIssue> issues;
  nlohmann::json to_json() const;
};

/// Walks `root` for .png/.jpg/.jpeg images with `<stem>.txt` captions.
/// Problems with single files are collected as issues. Errors: IOError when
/// root is not a directory.
ScanResult scan(const std::filesystem::path& root, const KindRule& rule = {},
                const std::vector<std::size_t>& buckets = kDefaultBuckets);

struct CaptionTransformConfig {
  double dropout_p = 0.05;
  bool token_shuffle = true;
  std::uint64_t seed = 0;
  void validate() const;
};

/// Tokens split on commas, or on whitespace when there are none; trimmed.
std::vector<std::string> caption_tokens(const std::string& caption);

/// Whole-caption dropout then token shuffle, drawing from one seeded stream.
class CaptionTransformer {
 public:
  explicit CaptionTransformer(const CaptionTransformConfig& cfg);
  std::string operator()(const std::string& caption);

 private:
  CaptionTransformConfig cfg_;
  Rng rng_;
};

std::string caption_transform(const std::string& caption, const CaptionTransformConfig& cfg);

struct AuditConfig {
  double target_full = 72.0;
  double target_detail = 25.0;
  double tolerance_pct = 5.0;  // percentage points
};

struct AuditReport {
  std::size_t full = 0, detail = 0, total = 0;
  double full_pct = 0, detail_pct = 0;
  double target_full_pct = 0, target_detail_pct = 0;
  double deviation_pct = 0;
  bool within_tolerance = true;
  std::size_t flipped = 0;
  bool hflip_opportunity = false;
  std::vector<std::string> warnings;
  nlohmann::json to_json() const;
};

/// Errors: EmptyDataset.
AuditReport audit_ratio(const std::vector<DatasetRecord>& records, const AuditConfig& cfg = {});

/// Writes `<stem>_hflip.png` plus a verbatim caption copy under out_dir,
/// mirroring each record's relative directory. Returns the input records
/// followed by the mirrored ones. Errors: IOError.
std::vector<DatasetRecord> hflip_expand(const std::vector<DatasetRecord>& records,
                                        const std::filesystem::path& out_dir);

struct CurriculumStage {
  std::string name;
  std::size_t step_lo = 0;
  std::optional<std::size_t> step_hi;
  std::vector<std::string> record_ids;
};

struct CurriculumConfig {
  double pairs_target = 0.40;
  double triples_target = 0.20;
  double tolerance = 0.05;
};

struct CurriculumManifest {
  std::vector<CurriculumStage> stages;
  std::size_t singles = 0, pairs = 0, triples = 0, extras = 0, total = 0;
  double pairs_fraction = 0, triples_fraction = 0;
  std::vector<std::string> warnings;
  nlohmann::json to_json() const;
};

/// Stages: singles [1000,2000], +pairs [2000,6000], +triples and extras
/// (6000, open). Fractions are of the tagged total. Errors: NoSingles.
CurriculumManifest curriculum_manifest(const std::vector<DatasetRecord>& records,
                                       const CurriculumConfig& cfg = {});

}  // namespace atelier::dataset
