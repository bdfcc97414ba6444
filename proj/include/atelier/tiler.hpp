#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "atelier/image.hpp"
#include "atelier/memory_meter.hpp"
#include "atelier/refiner.hpp"
#include "atelier/row_io.hpp"

namespace atelier::tiler {

struct Rect {
  std::size_t x = 0, y = 0, w = 0, h = 0;
  std::size_t right() const { return x + w; }
  std::size_t bottom() const { return y + h; }
  bool contains(std::size_t px, std::size_t py) const {
    return px >= x && px < right() && py >= y && py < bottom();
  }
  bool operator==(const Rect&) const = default;
};

struct TileSpec {
  std::size_t col = 0, row = 0;
  std::size_t index = 0;  // row-major linear index
  Rect core;
  Rect padded;
};

struct TilePlan {
  std::size_t canvas_w = 0, canvas_h = 0;
  std::size_t tile = 0, overlap = 0, pad = 0;
  /// Core origins along each axis; every core has the same size.
  std::vector<std::size_t> xs, ys;
  std::size_t core_w = 0, core_h = 0;
  std::vector<TileSpec> tiles;

  std::size_t cols() const { return xs.size(); }
  std::size_t rows() const { return ys.size(); }
  const TileSpec& at(std::size_t col, std::size_t row) const { return tiles[row * cols() + col]; }
  std::size_t max_padded_w() const;
  std::size_t max_padded_h() const;
};

/// Core origins along one axis: multiples of (tile - overlap) with the last
/// one clamped to dim - tile.
std::vector<std::size_t> tile_positions(std::size_t dim, std::size_t tile, std::size_t overlap);

/// Errors: InvalidGeometry.
TilePlan plan_tiles(std::size_t w, std::size_t h, std::size_t tile, std::size_t overlap,
                    std::size_t pad);

/// Raised-cosine ramp value at t in [0,1]: 0 at t=0, 1 at t=1.
double raised_cosine(double t);

/// Normalized separable blend weights. The weight of a tile at an output
/// pixel is profile_x[col][x - core.x*scale] * profile_y[row][y - core.y*scale].
/// Profiles are built at output resolution (plan geometry times `scale`).
class BlendField {
 public:
  BlendField() = default;
  BlendField(const TilePlan& plan, std::size_t scale);

  std::size_t scale() const { return scale_; }
  std::span<const double> profile_x(std::size_t col) const { return px_[col]; }
  std::span<const double> profile_y(std::size_t row) const { return py_[row]; }
  /// Weight of `tile` at output pixel (x, y) in canvas coordinates; zero
  /// outside the tile's core.
  double weight(const TileSpec& tile, std::size_t x, std::size_t y) const;
  /// F32 weight map over the tile's scaled core.
  std::vector<float> tile_weights(const TileSpec& tile) const;

 private:
  std::size_t scale_ = 1;
  std::size_t core_w_ = 0, core_h_ = 0;
  std::vector<std::vector<double>> px_, py_;
};

BlendField blend_weights(const TilePlan& plan, std::size_t scale = 1);

struct RefinedTile {
  TileSpec tile;
  ImageBuffer image;  // padded_rect dims times scale
};

/// Weighted accumulation of tile cores in tile-index order. Errors:
/// MissingTile, DimensionMismatch.
ImageBuffer stitch(std::span<const RefinedTile> tiles, const TilePlan& plan,
                   const BlendField& field);

struct Pass {
  std::string name;
  double denoise = 0.0;
  double adapter_scale = 1.0;
  std::size_t tile = 1024;
  std::size_t overlap = 96;
  std::size_t pad = 16;
  std::string prompt;
  std::uint64_t seed = 0;
};

enum class PathKind { GAN, Diffusion };
const char* to_string(PathKind kind);
PathKind parse_path(const std::string& text);

struct PassSchedule {
  PathKind path = PathKind::Diffusion;
  std::vector<Pass> passes;
  std::vector<double> step_scales;
  bool final_full_frame = false;

  /// Throws ValidationError naming every violated constraint; returns
  /// warnings for values outside the recommended envelopes.
  std::vector<std::string> validate() const;
};

struct Envelope {
  double lo, hi;
  bool contains(double v) const { return v >= lo - 1e-9 && v <= hi + 1e-9; }
};
inline constexpr Envelope kTileEnvelope{512, 1536};
inline constexpr Envelope kOverlapEnvelope{64, 128};
inline constexpr Envelope kPassEnvelopes[3] = {{0.25, 0.37}, {0.17, 0.23}, {0.13, 0.17}};

/// Passes A/B/C at 0.31/0.20/0.15, adapter 1.0, empty prompts.
PassSchedule default_diffusion_schedule();
/// One geometry-only pass: tile 512, overlap 64, pad 16.
PassSchedule default_gan_schedule();

inline constexpr double kFallbackDenoise = 0.10;
inline constexpr std::size_t kFallbackOverlap = 128;

struct RunOptions {
  std::size_t parallelism = 1;
  MemoryMeter* meter = nullptr;
};

struct TileLatency {
  std::size_t index;
  double ms;
};

struct PassReport {
  std::string name;
  std::string kind;  // "resample" or "refine"
  std::size_t step = 0;
  std::size_t in_w = 0, in_h = 0, out_w = 0, out_h = 0;
  std::size_t tile = 0, overlap = 0, pad = 0, tiles = 0;
  double denoise = 0.0;
  bool fallback = false;
  double seconds = 0.0;
  std::size_t footprint = 0;
  std::vector<TileLatency> latencies;
};

struct RunReport {
  std::vector<PassReport> passes;
  std::vector<std::string> warnings;
  bool fallback_engaged = false;
  std::size_t peak_memory = 0;
  std::size_t memory_budget = 0;
  std::size_t parallelism = 1;
  std::size_t out_w = 0, out_h = 0;
  double seconds = 0.0;

  nlohmann::json to_json(bool include_timing = true) const;
};

/// Tiles one canvas through the refiner and stitches the result; output
/// dims are canvas dims times the refiner scale. Errors: InvalidGeometry,
/// CapabilityExceeded, and refiner errors annotated with the tile index.
ImageBuffer run_pass(const ImageBuffer& canvas, const Pass& pass, refiner::Refiner& refiner,
                     const RunOptions& options = {}, PassReport* report = nullptr);

/// Row-streaming form of run_pass: holds one band of tile rows at a time.
void run_pass_rows(RowReader& reader, RowWriter& writer, const Pass& pass,
                   refiner::Refiner& refiner, const RunOptions& options = {},
                   PassReport* report = nullptr);

/// Bytes run_pass_rows leases for a canvas of `in` geometry.
std::size_t pass_footprint(const ImageInfo& in, const Pass& pass, std::size_t scale,
                           std::size_t parallelism);

/// One step of a resolved schedule.
struct Stage {
  enum class Kind { Resample, Refine } kind = Kind::Resample;
  std::size_t step = 0;
  std::size_t out_w = 0, out_h = 0;  // Resample target
  Pass pass;                         // Refine parameters
  bool fallback = false;
};

/// Expands a schedule into concrete stages for an input of w x h.
/// Errors: ValidationError, TargetUnreachable, CapabilityExceeded.
std::vector<Stage> resolve_stages(std::size_t w, std::size_t h, const PassSchedule& schedule,
                                  const refiner::RefinerCapabilities& caps, double target_scale,
                                  std::vector<std::string>* notes = nullptr);

/// Output dims for a target scale (ceil of the exact product).
std::size_t target_dim(std::size_t dim, double target_scale);

ImageBuffer run_schedule(const ImageBuffer& input, const PassSchedule& schedule,
                         refiner::Refiner& refiner, double target_scale,
                         const RunOptions& options = {}, RunReport* report = nullptr);

struct StreamOptions {
  std::size_t parallelism = 1;
  std::filesystem::path temp_dir;  // defaults to the output's directory
  int compression_level = 6;
};

/// Largest per-stage footprint of a streamed run, i.e. the smallest budget
/// stream_process accepts.
std::size_t minimum_budget(const ImageInfo& input, const std::vector<Stage>& stages,
                           std::size_t scale, std::size_t parallelism);

/// Streams PNG to PNG through the schedule. Errors: BudgetTooSmall (with
/// the minimum), IOError, plus run_schedule errors.
RunReport stream_process(const std::filesystem::path& input_path,
                         const std::filesystem::path& output_path, const PassSchedule& schedule,
                         refiner::Refiner& refiner, double target_scale,
                         std::size_t memory_budget, const StreamOptions& options = {});

/// Dry-run statistics for a single pass geometry.
struct PlanStats {
  std::size_t cols = 0, rows = 0, tiles = 0;
  std::size_t padded_w = 0, padded_h = 0;
  std::size_t footprint = 0;
};
PlanStats plan_stats(const ImageInfo& in, const Pass& pass, std::size_t scale,
                     std::size_t parallelism);

}  // namespace atelier::tiler
