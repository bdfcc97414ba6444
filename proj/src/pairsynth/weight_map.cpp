#include <algorithm>
#include <cmath>
#include <string>

#include "atelier/pairsynth.hpp"

namespace atelier::pairsynth {

namespace {

/// Normalized luma of one row.
void luma_row(const ImageBuffer& img, std::size_t r, std::vector<float>& out) {
  const std::size_t w = img.width();
  const std::size_t ch = img.channels();
  const double scale = 1.0 / max_value(img.depth());
  img.visit([&](auto s) {
    const auto* row = s.data() + r * w * ch;
    if (ch == 1) {
      for (std::size_t x = 0; x < w; ++x) out[x] = static_cast<float>(row[x] * scale);
      return;
    }
    for (std::size_t x = 0; x < w; ++x) {
      const double y = imaging::kRec709[0] * row[x * ch] + imaging::kRec709[1] * row[x * ch + 1] +
                       imaging::kRec709[2] * row[x * ch + 2];
      out[x] = static_cast<float>(y * scale);
    }
  });
}

}  // namespace

WeightMap build_weight_map(const ImageBuffer& img, std::size_t patch, const ImageBuffer* mask) {
  if (img.empty()) throw Error(ErrorCode::MalformedBuffer, "empty source image");
  if (patch == 0 || patch > img.width() || patch > img.height()) {
    throw Error(ErrorCode::PatchLargerThanImage,
                "patch " + std::to_string(patch) + " does not fit " + std::to_string(img.width()) +
                    "x" + std::to_string(img.height()));
  }
  if (mask && (mask->width() != img.width() || mask->height() != img.height())) {
    throw Error(ErrorCode::DimensionMismatch, "mask dimensions differ from the image");
  }
  const std::size_t w = img.width();
  const std::size_t h = img.height();
  WeightMap map;
  map.patch = patch;
  map.width = w - patch + 1;
  map.height = h - patch + 1;
  const std::size_t pw = map.width;
  map.weights.assign(pw * map.height, 0.0f);

  // Rows of luma (three, rolling), Laplacian, and the horizontal window sums
  // of the last `patch` rows for the vertical running sum.
  std::vector<std::vector<float>> luma(3, std::vector<float>(w));
  std::vector<float> lap(w);
  std::vector<double> prefix(w + 1);
  std::vector<double> hsum_ring(patch * pw);
  std::vector<double> colsum(pw, 0.0);
  std::vector<std::int64_t> mask_hcount_ring(mask ? patch * pw : 0);
  std::vector<std::int64_t> mask_colcount(mask ? pw : 0, 0);
  std::vector<std::int64_t> mask_prefix(mask ? w + 1 : 0);

  auto luma_slot = [](std::size_t r) { return r % 3; };
  luma_row(img, 0, luma[0]);
  if (h > 1) luma_row(img, 1, luma[1]);

  double mass = 0.0;
  std::size_t unmasked = 0;
  for (std::size_t r = 0; r < h; ++r) {
    if (r + 1 < h && r >= 1) luma_row(img, r + 1, luma[luma_slot(r + 1)]);
    const auto& up = luma[luma_slot(r == 0 ? 0 : r - 1)];
    const auto& mid = luma[luma_slot(r)];
    const auto& down = luma[luma_slot(r + 1 == h ? r : r + 1)];
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t cl = c == 0 ? 0 : c - 1;
      const std::size_t cr = c + 1 == w ? c : c + 1;
      float s = up[c];
      s += mid[cl];
      s += -4.0f * mid[c];
      s += mid[cr];
      s += down[c];
      lap[c] = std::fabs(s);
    }
    prefix[0] = 0.0;
    for (std::size_t c = 0; c < w; ++c) prefix[c + 1] = prefix[c] + lap[c];
    double* hs = hsum_ring.data() + (r % patch) * pw;
    if (r >= patch) {
      for (std::size_t x = 0; x < pw; ++x) colsum[x] -= hs[x];
    }
    for (std::size_t x = 0; x < pw; ++x) {
      hs[x] = prefix[x + patch] - prefix[x];
      colsum[x] += hs[x];
    }
    if (mask) {
      mask_prefix[0] = 0;
      mask->visit([&](auto s) {
        const std::size_t mch = mask->channels();
        for (std::size_t c = 0; c < w; ++c) {
          mask_prefix[c + 1] = mask_prefix[c] + (s[(r * w + c) * mch] > 0 ? 1 : 0);
        }
      });
      std::int64_t* mh = mask_hcount_ring.data() + (r % patch) * pw;
      if (r >= patch) {
        for (std::size_t x = 0; x < pw; ++x) mask_colcount[x] -= mh[x];
      }
      for (std::size_t x = 0; x < pw; ++x) {
        mh[x] = mask_prefix[x + patch] - mask_prefix[x];
        mask_colcount[x] += mh[x];
      }
    }
    if (r + 1 >= patch) {
      const std::size_t py = r + 1 - patch;
      float* out = map.weights.data() + py * pw;
      for (std::size_t x = 0; x < pw; ++x) {
        if (mask && mask_colcount[x] == 0) {
          out[x] = -1.0f;  // gated; resolved below
          continue;
        }
        const double v = std::max(colsum[x], 0.0);
        out[x] = static_cast<float>(v);
        mass += v;
        ++unmasked;
      }
    }
  }
  if (unmasked == 0) {
    throw Error(ErrorCode::AllMasked, "every patch position is masked out");
  }

  const double floor = mass > 0.0 ? kWeightFloor * mass : 1.0;
  double total = 0.0;
  for (float& v : map.weights) {
    if (v < 0.0f) continue;
    total += static_cast<double>(v) + floor;
  }
  map.row_mass.assign(map.height, 0.0);
  map.row_cdf.assign(map.height, 0.0);
  double running = 0.0;
  for (std::size_t y = 0; y < map.height; ++y) {
    double row = 0.0;
    float* out = map.weights.data() + y * pw;
    for (std::size_t x = 0; x < pw; ++x) {
      if (out[x] < 0.0f) {
        out[x] = 0.0f;
        continue;
      }
      out[x] = static_cast<float>((static_cast<double>(out[x]) + floor) / total);
      row += out[x];
    }
    map.row_mass[y] = row;
    running += row;
    map.row_cdf[y] = running;
  }
  return map;
}

PatchCoord draw_position(const WeightMap& wmap, Rng& rng) {
  if (wmap.empty() || wmap.row_cdf.empty() || !(wmap.row_cdf.back() > 0.0)) {
    throw Error(ErrorCode::EmptyWeightMap, "weight map has no mass");
  }
  const double total = wmap.row_cdf.back();
  const double u_row = rng.uniform() * total;
  auto it = std::upper_bound(wmap.row_cdf.begin(), wmap.row_cdf.end(), u_row);
  if (it == wmap.row_cdf.end()) {
    // Rounding at the top end; take the last row with mass.
    it = wmap.row_cdf.end() - 1;
    while (it != wmap.row_cdf.begin() && wmap.row_mass[static_cast<std::size_t>(it - wmap.row_cdf.begin())] <= 0.0) --it;
  }
  const auto y = static_cast<std::size_t>(it - wmap.row_cdf.begin());
  const double target = rng.uniform() * wmap.row_mass[y];
  const float* row = wmap.weights.data() + y * wmap.width;
  double cum = 0.0;
  std::size_t last_positive = wmap.width;
  for (std::size_t x = 0; x < wmap.width; ++x) {
    if (row[x] <= 0.0f) continue;
    last_positive = x;
    cum += row[x];
    if (cum > target) return {x, y};
  }
  if (last_positive == wmap.width) {
    throw Error(ErrorCode::EmptyWeightMap, "selected row has no mass");
  }
  return {last_positive, y};
}

std::vector<SampledPatch> sample_patches(const ImageBuffer& img, const WeightMap& wmap,
                                         std::size_t n, std::size_t patch, std::uint64_t seed) {
  if (wmap.empty()) throw Error(ErrorCode::EmptyWeightMap, "weight map is empty");
  if (wmap.patch != patch || wmap.width + patch - 1 != img.width() ||
      wmap.height + patch - 1 != img.height()) {
    throw Error(ErrorCode::DimensionMismatch, "weight map was built for a different image or patch");
  }
  Rng rng(seed);
  std::vector<SampledPatch> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const PatchCoord p = draw_position(wmap, rng);
    out.push_back({p, imaging::crop(img, p.x, p.y, patch, patch)});
  }
  return out;
}

std::shared_ptr<const WeightMap> WeightMapCache::get(const SourceImage& source, std::size_t patch) {
  const Key key{source.id, patch, source.mask.get()};
  {
    std::lock_guard lock(mutex_);
    if (auto it = maps_.find(key); it != maps_.end()) return it->second;
  }
  auto map = std::make_shared<const WeightMap>(build_weight_map(*source.image, patch, source.mask.get()));
  std::lock_guard lock(mutex_);
  return maps_.emplace(key, std::move(map)).first->second;
}

std::size_t WeightMapCache::size() const {
  std::lock_guard lock(mutex_);
  return maps_.size();
}

}  // namespace atelier::pairsynth
