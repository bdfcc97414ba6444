#include "atelier/stencil.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "atelier/codec.hpp"
#include "atelier/imaging.hpp"
#include "atelier/random.hpp"

namespace atelier::stencil {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string_view to_string(ZRole role) noexcept {
  switch (role) {
    case ZRole::FG: return "fg";
    case ZRole::MG: return "mg";
    case ZRole::BGOverlay: return "bg-overlay";
  }
  return "?";
}

std::string_view to_string(LineWeight weight) noexcept {
  switch (weight) {
    case LineWeight::Thin: return "thin";
    case LineWeight::Medium: return "medium";
    case LineWeight::Thick: return "thick";
  }
  return "?";
}

std::optional<ZRole> parse_z_role(std::string_view text) noexcept {
  const std::string t = lower(text);
  if (t == "fg" || t == "foreground") return ZRole::FG;
  if (t == "mg" || t == "midground") return ZRole::MG;
  if (t == "bg-overlay" || t == "bg_overlay" || t == "bgoverlay" || t == "bg") {
    return ZRole::BGOverlay;
  }
  return std::nullopt;
}

std::optional<LineWeight> parse_line_weight(std::string_view text) noexcept {
  const std::string t = lower(text);
  if (t == "thin") return LineWeight::Thin;
  if (t == "medium") return LineWeight::Medium;
  if (t == "thick") return LineWeight::Thick;
  return std::nullopt;
}

TaxonomyTags parse_taxonomy(const std::filesystem::path& image_path) {
  const auto weight_dir = image_path.parent_path();
  const auto category_dir = weight_dir.parent_path();
  const auto role_dir = category_dir.parent_path();
  const auto role = parse_z_role(role_dir.filename().string());
  if (!role) {
    throw Error(ErrorCode::UnknownZRole, image_path.string() + ": '" +
                                             role_dir.filename().string() +
                                             "' is not a Z-role (fg, mg, bg-overlay)");
  }
  const auto weight = parse_line_weight(weight_dir.filename().string());
  if (!weight) {
    throw Error(ErrorCode::UnknownLineWeight, image_path.string() + ": '" +
                                                  weight_dir.filename().string() +
                                                  "' is not a line weight (thin, medium, thick)");
  }
  return {*role, category_dir.filename().string(), *weight};
}

void AugmentSpec::validate() const {
  std::string problems;
  auto bad = [&](const std::string& p) { problems += " " + p + ";"; };
  if (!(std::fabs(rotation_deg) <= kMaxRotationDeg)) bad("rotation_deg outside [-15, 15]");
  if (!(scale_factor >= kMinScale && scale_factor <= kMaxScale)) bad("scale_factor outside [0.85, 1.15]");
  if (!(std::fabs(brightness) <= kMaxJitter)) bad("brightness outside [-0.10, 0.10]");
  if (!(std::fabs(contrast) <= kMaxJitter)) bad("contrast outside [-0.10, 0.10]");
  if (!(grain_sigma >= 0.0) || !std::isfinite(grain_sigma)) bad("grain_sigma must be >= 0");
  if (!problems.empty()) throw Error(ErrorCode::SpecOutOfBounds, "augment spec:" + problems);
}

AffineGeometry rotation_geometry(std::size_t w, std::size_t h, double rotation_deg,
                                 double scale_factor) {
  const double theta = rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double fw = static_cast<double>(w);
  const double fh = static_cast<double>(h);
  const double bw = scale_factor * (std::fabs(c) * fw + std::fabs(s) * fh);
  const double bh = scale_factor * (std::fabs(s) * fw + std::fabs(c) * fh);
  AffineGeometry g;
  g.out_w = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(bw - 1e-9)));
  g.out_h = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(bh - 1e-9)));
  // Inverse of (scale * R(theta)) is R(-theta) / scale.
  g.m00 = c / scale_factor;
  g.m01 = s / scale_factor;
  g.m10 = -s / scale_factor;
  g.m11 = c / scale_factor;
  g.in_cx = fw / 2.0;
  g.in_cy = fh / 2.0;
  g.out_cx = static_cast<double>(g.out_w) / 2.0;
  g.out_cy = static_cast<double>(g.out_h) / 2.0;
  return g;
}

namespace {

ImageBuffer rotate_scale(const ImageBuffer& img, double rotation_deg, double scale_factor) {
  const AffineGeometry g = rotation_geometry(img.width(), img.height(), rotation_deg, scale_factor);
  const double maxv = max_value(img.depth());
  const double lsb = img.depth() == Depth::F32 ? 0.0 : 1.0;
  const auto w = static_cast<std::ptrdiff_t>(img.width());
  const auto h = static_cast<std::ptrdiff_t>(img.height());

  // Premultiplied source in double precision.
  std::vector<double> prem(img.sample_count());
  const std::size_t n = img.width() * img.height();
  for (std::size_t p = 0; p < n; ++p) {
    const double a = img.get(p * 4 + 3);
    for (std::size_t c = 0; c < 3; ++c) prem[p * 4 + c] = img.get(p * 4 + c) * a / maxv;
    prem[p * 4 + 3] = a;
  }

  ImageBuffer out(g.out_w, g.out_h, Layout::RGBA, img.depth(), AlphaMode::Straight);
  for (std::size_t y = 0; y < g.out_h; ++y) {
    for (std::size_t x = 0; x < g.out_w; ++x) {
      const auto [u, v] = g.source_of(x, y);
      const double fx0 = std::floor(u);
      const double fy0 = std::floor(v);
      const double fx = u - fx0;
      const double fy = v - fy0;
      const auto x0 = static_cast<std::ptrdiff_t>(fx0);
      const auto y0 = static_cast<std::ptrdiff_t>(fy0);
      double acc[4] = {0, 0, 0, 0};
      const std::ptrdiff_t xs[2] = {x0, x0 + 1};
      const std::ptrdiff_t ys[2] = {y0, y0 + 1};
      const double wx[2] = {1.0 - fx, fx};
      const double wy[2] = {1.0 - fy, fy};
      for (int j = 0; j < 2; ++j) {
        if (ys[j] < 0 || ys[j] >= h) continue;
        for (int i = 0; i < 2; ++i) {
          if (xs[i] < 0 || xs[i] >= w) continue;
          const double wt = wx[i] * wy[j];
          if (wt == 0.0) continue;
          const std::size_t base = static_cast<std::size_t>(ys[j] * w + xs[i]) * 4;
          for (int c = 0; c < 4; ++c) acc[c] += wt * prem[base + static_cast<std::size_t>(c)];
        }
      }
      const std::size_t o = out.index(x, y);
      out.set(o + 3, acc[3]);
      const double stored_alpha = out.get(o + 3);
      for (std::size_t c = 0; c < 3; ++c) {
        const double straight =
            stored_alpha <= lsb || acc[3] <= 0.0 ? 0.0 : std::min(acc[c] * maxv / acc[3], maxv);
        out.set(o + c, straight);
      }
    }
  }
  return out;
}

ImageBuffer photometric(const ImageBuffer& img, const AugmentSpec& spec) {
  const bool jitter = spec.brightness != 0.0 || spec.contrast != 0.0;
  const bool grain = spec.grain_sigma > 0.0;
  if (!jitter && !grain) return img;
  ImageBuffer out = img;
  const double maxv = max_value(img.depth());
  const double mid = maxv / 2.0;
  const double sigma = spec.grain_sigma * maxv / 255.0;
  Rng rng(spec.seed);
  const std::size_t n = img.width() * img.height();
  for (std::size_t p = 0; p < n; ++p) {
    const bool visible = img.get(p * 4 + 3) > 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      const double noise = grain ? sigma * rng.normal() : 0.0;
      if (!visible) continue;
      double v = img.get(p * 4 + c);
      if (jitter) {
        v *= 1.0 + spec.brightness;
        if (spec.contrast != 0.0) v = (v - mid) * (1.0 + spec.contrast) + mid;
      }
      out.set(p * 4 + c, v + noise);
    }
  }
  return out;
}

}  // namespace

ImageBuffer alpha_safe_transform(const ImageBuffer& rgba, const AugmentSpec& spec) {
  if (rgba.layout() != Layout::RGBA || rgba.alpha_mode() != AlphaMode::Straight) {
    throw Error(ErrorCode::MissingAlphaChannel, "stencil assets are straight-alpha RGBA");
  }
  spec.validate();
  ImageBuffer img = rgba;
  if (spec.hflip) img = imaging::flip_horizontal(img);
  if (spec.vflip) img = imaging::flip_vertical(img);
  if (spec.quarter_turns % 4 != 0) img = imaging::rotate90(img, spec.quarter_turns);
  if (spec.has_free_rotation()) img = rotate_scale(img, spec.rotation_deg, spec.scale_factor);
  return photometric(img, spec);
}

StencilAsset alpha_safe_transform(const StencilAsset& asset, const AugmentSpec& spec) {
  StencilAsset out = asset;
  out.image = alpha_safe_transform(asset.image, spec);
  return out;
}

ImageBuffer composite_assets(const std::vector<Placement>& placements, std::size_t canvas_w,
                             std::size_t canvas_h) {
  if (placements.empty()) throw Error(ErrorCode::EmptyAssetList, "nothing to composite");
  const Depth depth = placements.front().asset.image.depth();
  ImageBuffer canvas(canvas_w, canvas_h, Layout::RGBA, depth, AlphaMode::Straight);

  std::vector<const Placement*> order;
  for (const auto& p : placements) order.push_back(&p);
  std::stable_sort(order.begin(), order.end(), [](const Placement* a, const Placement* b) {
    return draw_rank(a->asset.z_role) < draw_rank(b->asset.z_role);
  });

  for (const Placement* p : order) {
    const ImageBuffer& src = p->asset.image;
    if (src.layout() != Layout::RGBA) {
      throw Error(ErrorCode::MissingAlphaChannel, "asset '" + p->asset.category + "' has no alpha");
    }
    ImageBuffer layer = imaging::unpremultiply(imaging::convert_depth(src, depth));
    if (p->scale != 1.0) {
      if (!(p->scale > 0.0)) throw Error(ErrorCode::ValidationError, "placement scale must be positive");
      const auto tw = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(layer.width() * p->scale)));
      const auto th = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(layer.height() * p->scale)));
      layer = imaging::unpremultiply(imaging::resample(imaging::premultiply(layer), tw, th,
                                                       imaging::ResampleFilter::Bilinear));
    }
    canvas = imaging::composite_over(canvas, layer, p->x, p->y);
  }
  return canvas;
}

StencilAsset validate_asset(const std::filesystem::path& path) {
  ImageBuffer img;
  try {
    img = read_png(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::UnreadableFile, e.what());
  }
  if (img.layout() != Layout::RGBA) {
    throw Error(ErrorCode::MissingAlphaChannel, path.string() + ": PNG has no alpha channel");
  }
  const TaxonomyTags tags = parse_taxonomy(path);
  StencilAsset asset;
  asset.image = std::move(img);
  asset.z_role = tags.z_role;
  asset.line_weight = tags.line_weight;
  asset.category = tags.category;
  auto caption = path;
  caption.replace_extension(".txt");
  if (std::filesystem::exists(caption)) {
    std::ifstream in(caption);
    std::stringstream ss;
    ss << in.rdbuf();
    asset.caption_path = caption;
    asset.caption = trim(ss.str());
  }
  return asset;
}

}  // namespace atelier::stencil
