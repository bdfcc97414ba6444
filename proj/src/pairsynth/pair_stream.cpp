#include <string>

#include "atelier/pairsynth.hpp"

namespace atelier::pairsynth {

namespace {

constexpr double kMaxJitter = 0.2;

bool within(const Range& r, double bound) {
  return r.lo <= r.hi && r.lo >= -bound && r.hi <= bound;
}

TrainingPair apply_augment(const TrainingPair& pair, const AppliedAugment& a) {
  auto geometric = [&](ImageBuffer img) {
    if (a.hflip) img = imaging::flip_horizontal(img);
    if (a.vflip) img = imaging::flip_vertical(img);
    if (a.quarter_turns % 4 != 0) img = imaging::rotate90(img, a.quarter_turns);
    return apply_jitter(img, a.brightness, a.contrast);
  };
  TrainingPair out{geometric(pair.hr), geometric(pair.lr), pair.provenance};
  out.provenance.augment = a;
  return out;
}

}  // namespace

ImageBuffer apply_jitter(const ImageBuffer& img, double brightness, double contrast) {
  if (brightness == 0.0 && contrast == 0.0) return img;
  const double mid = max_value(img.depth()) / 2.0;
  const double gain = 1.0 + brightness;
  const double slope = 1.0 + contrast;
  return imaging::map_color(img, [&](double v, std::size_t) {
    double out = v * gain;
    if (contrast != 0.0) out = (out - mid) * slope + mid;
    return out;
  });
}

TrainingPair augment_pair(const TrainingPair& pair, const PairAugment& ops, std::uint64_t seed) {
  if (!within(ops.brightness, kMaxJitter) || !within(ops.contrast, kMaxJitter)) {
    throw Error(ErrorCode::JitterOutOfBounds,
                "brightness/contrast jitter ranges must be ordered and within +/-20%");
  }
  Rng rng(seed);
  AppliedAugment a;
  a.hflip = ops.hflip;
  a.vflip = ops.vflip;
  a.quarter_turns = ((ops.quarter_turns % 4) + 4) % 4;
  a.brightness = rng.uniform(ops.brightness.lo, ops.brightness.hi);
  a.contrast = rng.uniform(ops.contrast.lo, ops.contrast.hi);
  return apply_augment(pair, a);
}

PairStream::PairStream(std::vector<SourceImage> sources, std::size_t patch, DegradationConfig cfg,
                       std::uint64_t seed)
    : sources_(std::move(sources)), patch_(patch), cfg_(std::move(cfg)), rng_(seed) {
  if (sources_.empty()) throw Error(ErrorCode::ValidationError, "pair stream needs at least one source");
  cfg_.validate();
  if (patch_ % static_cast<std::size_t>(cfg_.scale) != 0) {
    throw Error(ErrorCode::NotDivisibleByScale, "patch " + std::to_string(patch_) +
                                                    " is not divisible by scale " +
                                                    std::to_string(cfg_.scale));
  }
  for (const auto& src : sources_) {
    if (!src.image) throw Error(ErrorCode::ValidationError, "source '" + src.id + "' has no image");
    if (src.image->layout() == Layout::RGBA) {
      throw Error(ErrorCode::LayoutMismatch, "source '" + src.id + "' must be flattened RGB or Luma");
    }
    try {
      maps_.push_back(cache_.get(src, patch_));
    } catch (const Error& e) {
      throw Error(e.code(), "source '" + src.id + "': " + e.what());
    }
  }
}

TrainingPair PairStream::next() {
  const auto s = static_cast<std::size_t>(rng_.uniform_index(sources_.size()));
  const PatchCoord p = draw_position(*maps_[s], rng_);
  const std::uint64_t seed = rng_.next_u64();
  TrainingPair pair;
  pair.hr = imaging::crop(*sources_[s].image, p.x, p.y, patch_, patch_);
  Degraded d = degrade(pair.hr, cfg_, seed);
  pair.lr = std::move(d.lr);
  pair.provenance = Provenance{sources_[s].id, p, seed, d.params, std::nullopt};
  return pair;
}

TrainingPair replay(const SourceImage& source, std::size_t patch, const DegradationConfig& cfg,
                    const Provenance& provenance) {
  TrainingPair pair;
  pair.hr = imaging::crop(*source.image, provenance.coord.x, provenance.coord.y, patch, patch);
  pair.lr = apply_degradation(pair.hr, cfg, provenance.params);
  pair.provenance = provenance;
  pair.provenance.augment.reset();
  if (provenance.augment) return apply_augment(pair, *provenance.augment);
  return pair;
}

}  // namespace atelier::pairsynth
