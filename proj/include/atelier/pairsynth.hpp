#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "atelier/image.hpp"
#include "atelier/imaging.hpp"
#include "atelier/random.hpp"

namespace atelier::pairsynth {

/// Categorical distribution over valid top-left patch positions of a
/// source: (source width - patch + 1) x (source height - patch + 1).
struct WeightMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t patch = 0;
  std::vector<float> weights;     // row-major, normalized
  std::vector<double> row_mass;   // sum of each row of weights
  std::vector<double> row_cdf;    // inclusive prefix of row_mass

  double weight(std::size_t x, std::size_t y) const { return weights[y * width + x]; }
  std::size_t positions() const { return width * height; }
  bool empty() const { return weights.empty(); }
};

/// Detail-weighted map: the Laplacian magnitude summed over each patch
/// window, gated to zero where the mask window is entirely zero, then
/// floored by 1e-8 of the total mass on unmasked positions and normalized.
/// A flat image therefore yields a uniform map.
WeightMap build_weight_map(const ImageBuffer& img, std::size_t patch,
                           const ImageBuffer* mask = nullptr);

inline constexpr double kWeightFloor = 1e-8;

struct PatchCoord {
  std::size_t x = 0;
  std::size_t y = 0;
  bool operator==(const PatchCoord&) const = default;
};

/// One draw from the map. Positions with zero weight are never returned.
PatchCoord draw_position(const WeightMap& wmap, Rng& rng);

struct SampledPatch {
  PatchCoord coord;
  ImageBuffer hr;
};

/// n independent draws with replacement.
std::vector<SampledPatch> sample_patches(const ImageBuffer& img, const WeightMap& wmap,
                                         std::size_t n, std::size_t patch, std::uint64_t seed);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

enum class Stage { Blur, Noise, Downsample, Jpeg };

std::string_view to_string(Stage stage) noexcept;
std::optional<Stage> parse_stage(std::string_view name) noexcept;

struct DegradationConfig {
  Range blur_sigma{0.2, 3.0};   // pixels, isotropic Gaussian
  Range noise_sigma{0.0, 10.0}; // 8-bit LSB units, additive Gaussian
  int scale = 4;
  std::vector<imaging::ResampleFilter> downsample_filters{
      imaging::ResampleFilter::Nearest, imaging::ResampleFilter::Bilinear,
      imaging::ResampleFilter::Bicubic};
  int jpeg_quality_lo = 30;
  int jpeg_quality_hi = 95;
  std::vector<Stage> stage_order{Stage::Blur, Stage::Noise, Stage::Downsample, Stage::Jpeg};

  /// Throws ValidationError on ill-ordered ranges, scale < 2, quality outside
  /// [1,100], an empty filter set or a stage order without exactly one
  /// downsample.
  void validate() const;

  /// No blur, no noise, bicubic, quality 100.
  static DegradationConfig neutral();
};

struct DegradationParams {
  double blur_sigma = 0.0;
  double noise_sigma = 0.0;
  imaging::ResampleFilter filter = imaging::ResampleFilter::Bicubic;
  int jpeg_quality = 100;
  std::uint64_t noise_seed = 0;
};

/// Draws parameters for one degradation from `seed`.
DegradationParams sample_params(const DegradationConfig& cfg, std::uint64_t seed);

/// Runs the stages with fixed parameters.
ImageBuffer apply_degradation(const ImageBuffer& hr, const DegradationConfig& cfg,
                              const DegradationParams& params);

struct Degraded {
  ImageBuffer lr;
  DegradationParams params;
};

/// hr must be RGB or Luma with both dimensions divisible by cfg.scale.
Degraded degrade(const ImageBuffer& hr, const DegradationConfig& cfg, std::uint64_t seed);

struct PairAugment {
  bool hflip = false;
  bool vflip = false;
  int quarter_turns = 0;
  Range brightness{0.0, 0.0};  // fractional, |bound| <= 0.2
  Range contrast{0.0, 0.0};
};

struct AppliedAugment {
  bool hflip = false;
  bool vflip = false;
  int quarter_turns = 0;
  double brightness = 0.0;
  double contrast = 0.0;
};

struct Provenance {
  std::string source_id;
  PatchCoord coord;
  std::uint64_t seed = 0;
  DegradationParams params;
  std::optional<AppliedAugment> augment;
};

struct TrainingPair {
  ImageBuffer hr;
  ImageBuffer lr;
  Provenance provenance;
};

/// Same geometric op and the same photometric draw on hr and lr.
TrainingPair augment_pair(const TrainingPair& pair, const PairAugment& ops, std::uint64_t seed);

/// Photometric jitter with a single rounding: ((v (1+b)) - mid)(1+c) + mid.
ImageBuffer apply_jitter(const ImageBuffer& img, double brightness, double contrast);

struct SourceImage {
  std::string id;
  std::shared_ptr<const ImageBuffer> image;
  std::shared_ptr<const ImageBuffer> mask;  // optional, Luma
};

/// Weight maps keyed by (source id, patch size, mask identity).
class WeightMapCache {
 public:
  std::shared_ptr<const WeightMap> get(const SourceImage& source, std::size_t patch);
  std::size_t size() const;

 private:
  using Key = std::tuple<std::string, std::size_t, const ImageBuffer*>;
  mutable std::mutex mutex_;
  std::map<Key, std::shared_ptr<const WeightMap>> maps_;
};

/// Unbounded, deterministic stream of training pairs. All per-source
/// validation and weight-map construction happens in the constructor.
class PairStream {
 public:
  PairStream(std::vector<SourceImage> sources, std::size_t patch, DegradationConfig cfg,
             std::uint64_t seed);

  TrainingPair next();

  const std::vector<SourceImage>& sources() const { return sources_; }
  const WeightMap& weight_map(std::size_t source) const { return *maps_[source]; }
  const DegradationConfig& config() const { return cfg_; }
  std::size_t patch() const { return patch_; }

 private:
  std::vector<SourceImage> sources_;
  std::vector<std::shared_ptr<const WeightMap>> maps_;
  WeightMapCache cache_;
  std::size_t patch_;
  DegradationConfig cfg_;
  Rng rng_;
};

/// Rebuilds a pair from its provenance (crop + degrade with the recorded
/// seed, then the recorded augmentation if any).
TrainingPair replay(const SourceImage& source, std::size_t patch, const DegradationConfig& cfg,
                    const Provenance& provenance);

}  // namespace atelier::pairsynth
