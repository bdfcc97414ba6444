#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "atelier/dataset.hpp"
#include "atelier/pairsynth.hpp"
#include "atelier/refiner.hpp"
#include "atelier/stencil.hpp"
#include "atelier/tiler.hpp"

namespace atelier::cli {

struct RefinerConfig {
  std::string kind = "identity";  // identity | classical | grain | http
  std::optional<std::string> endpoint;
  int scale = 4;  // classical only
  std::size_t max_tile_px = refiner::kDefaultMaxTile;
};

struct PairsynthSection {
  std::vector<std::filesystem::path> sources;
  std::vector<std::optional<std::filesystem::path>> masks;  // parallel to sources
  std::size_t patch = 256;
  std::size_t count = 16;
  std::filesystem::path out_dir;
  pairsynth::DegradationConfig degradation;
  std::optional<pairsynth::PairAugment> augment;
};

struct AugmentSection {
  std::filesystem::path input, output;
  stencil::AugmentSpec spec;
  bool seed_given = false;
};

struct CompositeItem {
  std::filesystem::path asset;
  std::ptrdiff_t x = 0, y = 0;
  double scale = 1.0;
};

struct CompositeSection {
  std::size_t width = 0, height = 0;
  std::filesystem::path output;
  std::vector<CompositeItem> placements;
};

struct DatasetSection {
  std::filesystem::path root, out_dir, manifest;
  dataset::KindRule kind_rule;
  std::vector<std::size_t> buckets = dataset::kDefaultBuckets;
  dataset::CaptionTransformConfig caption;
  bool caption_seed_given = false;
  dataset::AuditConfig audit;
  dataset::CurriculumConfig curriculum;
};

struct JobConfig {
  std::filesystem::path input, output;
  tiler::PassSchedule schedule;
  double target_scale = 2.0;
  std::optional<std::size_t> memory_budget;  // set: stream instead of loading the canvas
  std::optional<std::pair<std::size_t, std::size_t>> canvas;  // plan geometry without a file
  RefinerConfig refiner;
  std::uint64_t seed = 0;
  std::size_t parallelism = 1;
  PairsynthSection pairsynth;
  AugmentSection augment;
  CompositeSection composite;
  DatasetSection dataset;
  std::vector<std::string> warnings;
};

/// Command-line values that take precedence over the file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> parallelism;
  std::optional<std::string> refiner_endpoint;
  std::optional<std::filesystem::path> input, output;
};

std::size_t default_parallelism();

/// Parses and validates a config document. Relative paths resolve against
/// `base_dir`. Errors: ParseError naming the field, ValidationError listing
/// every violated constraint.
JobConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                       const Overrides& overrides = {});

/// Reads `path` (ParseError with line and column on malformed JSON) then
/// parse_config.
JobConfig load_config(const std::filesystem::path& path, const Overrides& overrides = {});

/// Config with defaults only, for runs driven entirely by flags.
JobConfig default_config(const Overrides& overrides = {});

/// Endpoint precedence: flag, config file, ATELIER_REFINER_ENDPOINT.
refiner::RefinerHandle make_refiner(const RefinerConfig& cfg);

}  // namespace atelier::cli
