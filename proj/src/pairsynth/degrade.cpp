#include <algorithm>
#include <string>

#include "atelier/codec.hpp"
#include "atelier/pairsynth.hpp"

namespace atelier::pairsynth {

std::string_view to_string(Stage stage) noexcept {
  switch (stage) {
    case Stage::Blur: return "blur";
    case Stage::Noise: return "noise";
    case Stage::Downsample: return "downsample";
    case Stage::Jpeg: return "jpeg";
  }
  return "?";
}

std::optional<Stage> parse_stage(std::string_view name) noexcept {
  for (auto s : {Stage::Blur, Stage::Noise, Stage::Downsample, Stage::Jpeg}) {
    if (name == to_string(s)) return s;
  }
  return std::nullopt;
}

void DegradationConfig::validate() const {
  std::vector<std::string> problems;
  if (!(blur_sigma.lo <= blur_sigma.hi) || blur_sigma.lo < 0.0) {
    problems.push_back("blur_sigma range must satisfy 0 <= lo <= hi");
  }
  if (!(noise_sigma.lo <= noise_sigma.hi) || noise_sigma.lo < 0.0) {
    problems.push_back("noise_sigma range must satisfy 0 <= lo <= hi");
  }
  if (scale < 2) problems.push_back("scale must be >= 2");
  if (jpeg_quality_lo > jpeg_quality_hi || jpeg_quality_lo < 1 || jpeg_quality_hi > 100) {
    problems.push_back("jpeg quality range must satisfy 1 <= lo <= hi <= 100");
  }
  if (downsample_filters.empty()) problems.push_back("downsample filter set is empty");
  if (std::count(stage_order.begin(), stage_order.end(), Stage::Downsample) != 1) {
    problems.push_back("stage order must contain exactly one downsample");
  }
  for (auto s : {Stage::Blur, Stage::Noise, Stage::Jpeg}) {
    if (std::count(stage_order.begin(), stage_order.end(), s) > 1) {
      problems.push_back("stage '" + std::string(to_string(s)) + "' repeated");
    }
  }
  if (!problems.empty()) {
    std::string msg = "invalid degradation config:";
    for (const auto& p : problems) msg += " " + p + ";";
    throw Error(ErrorCode::ValidationError, msg);
  }
}

DegradationConfig DegradationConfig::neutral() {
  DegradationConfig cfg;
  cfg.blur_sigma = {0.0, 0.0};
  cfg.noise_sigma = {0.0, 0.0};
  cfg.downsample_filters = {imaging::ResampleFilter::Bicubic};
  cfg.jpeg_quality_lo = 100;
  cfg.jpeg_quality_hi = 100;
  return cfg;
}

DegradationParams sample_params(const DegradationConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  DegradationParams p;
  p.blur_sigma = rng.uniform(cfg.blur_sigma.lo, cfg.blur_sigma.hi);
  p.noise_sigma = rng.uniform(cfg.noise_sigma.lo, cfg.noise_sigma.hi);
  p.filter = cfg.downsample_filters[rng.uniform_index(cfg.downsample_filters.size())];
  p.jpeg_quality = static_cast<int>(rng.uniform_int(cfg.jpeg_quality_lo, cfg.jpeg_quality_hi));
  p.noise_seed = rng.next_u64();
  return p;
}

namespace {

ImageBuffer add_noise(const ImageBuffer& img, double sigma_lsb, std::uint64_t seed) {
  if (!(sigma_lsb > 0.0)) return img;
  const double sigma = sigma_lsb * max_value(img.depth()) / 255.0;
  Rng rng(seed);
  return imaging::map_color(img, [&](double v, std::size_t) { return v + sigma * rng.normal(); });
}

}  // namespace

namespace {

// Orientation k in [0,8): optional horizontal flip, then k%4 quarter turns.
ImageBuffer orient(const ImageBuffer& img, int k) {
  const ImageBuffer base = k >= 4 ? imaging::flip_horizontal(img) : img;
  return k % 4 == 0 ? base : imaging::rotate90(base, k % 4);
}

ImageBuffer unorient(const ImageBuffer& img, int k) {
  const ImageBuffer turned = k % 4 == 0 ? img : imaging::rotate90(img, 4 - k % 4);
  return k >= 4 ? imaging::flip_horizontal(turned) : turned;
}

bool image_less(const ImageBuffer& a, const ImageBuffer& b) {
  if (a.width() != b.width()) return a.width() < b.width();
  for (std::size_t i = 0; i < a.sample_count(); ++i) {
    const double x = a.get(i), y = b.get(i);
    if (x != y) return x < y;
  }
  return false;
}

// The 8x8 block grid is anchored to the lexicographically smallest of the
// eight orientations, so flips and quarter turns commute with the round trip.
ImageBuffer jpeg_roundtrip_canonical(const ImageBuffer& img, int quality) {
  int best = 0;
  ImageBuffer best_img = img;
  for (int k = 1; k < 8; ++k) {
    ImageBuffer cand = orient(img, k);
    if (image_less(cand, best_img)) {
      best = k;
      best_img = std::move(cand);
    }
  }
  return unorient(jpeg_roundtrip(best_img, quality), best);
}

}  // namespace

ImageBuffer apply_degradation(const ImageBuffer& hr, const DegradationConfig& cfg,
                              const DegradationParams& params) {
  if (hr.layout() == Layout::RGBA) {
    throw Error(ErrorCode::LayoutMismatch, "degradation operates on flattened RGB or Luma");
  }
  const auto s = static_cast<std::size_t>(cfg.scale);
  if (hr.width() % s != 0 || hr.height() % s != 0) {
    throw Error(ErrorCode::NotDivisibleByScale,
                std::to_string(hr.width()) + "x" + std::to_string(hr.height()) +
                    " is not divisible by scale " + std::to_string(cfg.scale));
  }
  ImageBuffer img = hr;
  for (Stage stage : cfg.stage_order) {
    switch (stage) {
      case Stage::Blur:
        img = imaging::gaussian_blur(img, params.blur_sigma);
        break;
      case Stage::Noise:
        img = add_noise(img, params.noise_sigma, params.noise_seed);
        break;
      case Stage::Downsample:
        img = imaging::resample(img, hr.width() / s, hr.height() / s, params.filter);
        break;
      case Stage::Jpeg:
        img = jpeg_roundtrip_canonical(img, params.jpeg_quality);
        break;
    }
  }
  return img;
}

Degraded degrade(const ImageBuffer& hr, const DegradationConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const auto s = static_cast<std::size_t>(cfg.scale);
  if (hr.width() % s != 0 || hr.height() % s != 0) {
    throw Error(ErrorCode::NotDivisibleByScale,
                std::to_string(hr.width()) + "x" + std::to_string(hr.height()) +
                    " is not divisible by scale " + std::to_string(cfg.scale));
  }
  DegradationParams params = sample_params(cfg, seed);
  return {apply_degradation(hr, cfg, params), params};
}

}  // namespace atelier::pairsynth
