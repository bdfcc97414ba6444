#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "atelier/tiler.hpp"

namespace atelier::tiler {

std::vector<std::size_t> tile_positions(std::size_t dim, std::size_t tile, std::size_t overlap) {
  if (dim == 0 || tile == 0 || overlap >= tile) {
    throw Error(ErrorCode::InvalidGeometry, "tile positions need dim > 0 and 0 <= overlap < tile");
  }
  std::vector<std::size_t> out;
  if (dim <= tile) {
    out.push_back(0);
    return out;
  }
  const std::size_t stride = tile - overlap;
  for (std::size_t p = 0;; p += stride) {
    if (p + tile >= dim) {
      const std::size_t last = dim - tile;
      if (out.empty() || out.back() != last) out.push_back(last);
      break;
    }
    out.push_back(p);
  }
  return out;
}

std::size_t TilePlan::max_padded_w() const {
  std::size_t m = 0;
  for (std::size_t c = 0; c < cols(); ++c) m = std::max(m, at(c, 0).padded.w);
  return m;
}

std::size_t TilePlan::max_padded_h() const {
  std::size_t m = 0;
  for (std::size_t r = 0; r < rows(); ++r) m = std::max(m, at(0, r).padded.h);
  return m;
}

TilePlan plan_tiles(std::size_t w, std::size_t h, std::size_t tile, std::size_t overlap,
                    std::size_t pad) {
  if (w == 0 || h == 0) {
    throw Error(ErrorCode::InvalidGeometry, "canvas dimensions must be positive");
  }
  if (tile == 0 || overlap >= tile) {
    throw Error(ErrorCode::InvalidGeometry, "overlap " + std::to_string(overlap) +
                                                " must be smaller than tile " + std::to_string(tile));
  }
  TilePlan plan;
  plan.canvas_w = w;
  plan.canvas_h = h;
  plan.tile = tile;
  plan.overlap = overlap;
  plan.pad = pad;
  plan.xs = tile_positions(w, tile, overlap);
  plan.ys = tile_positions(h, tile, overlap);
  plan.core_w = std::min(tile, w);
  plan.core_h = std::min(tile, h);
  plan.tiles.reserve(plan.xs.size() * plan.ys.size());
  for (std::size_t r = 0; r < plan.ys.size(); ++r) {
    for (std::size_t c = 0; c < plan.xs.size(); ++c) {
      TileSpec t;
      t.col = c;
      t.row = r;
      t.index = plan.tiles.size();
      t.core = {plan.xs[c], plan.ys[r], plan.core_w, plan.core_h};
      const std::size_t x0 = t.core.x > pad ? t.core.x - pad : 0;
      const std::size_t y0 = t.core.y > pad ? t.core.y - pad : 0;
      const std::size_t x1 = std::min(w, t.core.right() + pad);
      const std::size_t y1 = std::min(h, t.core.bottom() + pad);
      t.padded = {x0, y0, x1 - x0, y1 - y0};
      plan.tiles.push_back(t);
    }
  }
  return plan;
}

double raised_cosine(double t) {
  return 0.5 - 0.5 * std::cos(std::numbers::pi * std::clamp(t, 0.0, 1.0));
}

namespace {

std::vector<std::vector<double>> axis_profiles(const std::vector<std::size_t>& positions,
                                               std::size_t length, std::size_t dim) {
  const std::size_t n = positions.size();
  std::vector<std::vector<double>> prof(n, std::vector<double>(length, 1.0));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t p = positions[i];
    const std::size_t left = i > 0 ? positions[i - 1] + length - p : 0;
    const std::size_t right = i + 1 < n ? p + length - positions[i + 1] : 0;
    for (std::size_t k = 0; k < length; ++k) {
      double v = 1.0;
      if (k < left) v *= raised_cosine((static_cast<double>(k) + 0.5) / static_cast<double>(left));
      if (right > 0 && k >= length - right) {
        v *= raised_cosine((static_cast<double>(length - k) - 0.5) / static_cast<double>(right));
      }
      prof[i][k] = v;
    }
  }
  std::vector<double> sum(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < length; ++k) sum[positions[i] + k] += prof[i][k];
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < length; ++k) prof[i][k] /= sum[positions[i] + k];
  }
  return prof;
}

std::vector<std::size_t> scaled(const std::vector<std::size_t>& v, std::size_t s) {
  std::vector<std::size_t> out(v);
  for (auto& x : out) x *= s;
  return out;
}

}  // namespace

BlendField::BlendField(const TilePlan& plan, std::size_t scale)
    : scale_(scale), core_w_(plan.core_w * scale), core_h_(plan.core_h * scale) {
  if (scale == 0) throw Error(ErrorCode::InvalidGeometry, "blend scale must be positive");
  px_ = axis_profiles(scaled(plan.xs, scale), core_w_, plan.canvas_w * scale);
  py_ = axis_profiles(scaled(plan.ys, scale), core_h_, plan.canvas_h * scale);
}

double BlendField::weight(const TileSpec& tile, std::size_t x, std::size_t y) const {
  const std::size_t x0 = tile.core.x * scale_, y0 = tile.core.y * scale_;
  if (x < x0 || y < y0 || x >= x0 + core_w_ || y >= y0 + core_h_) return 0.0;
  return px_[tile.col][x - x0] * py_[tile.row][y - y0];
}

std::vector<float> BlendField::tile_weights(const TileSpec& tile) const {
  std::vector<float> out(core_w_ * core_h_);
  for (std::size_t y = 0; y < core_h_; ++y) {
    for (std::size_t x = 0; x < core_w_; ++x) {
      out[y * core_w_ + x] = static_cast<float>(px_[tile.col][x] * py_[tile.row][y]);
    }
  }
  return out;
}

BlendField blend_weights(const TilePlan& plan, std::size_t scale) {
  return BlendField(plan, scale);
}

}  // namespace atelier::tiler
