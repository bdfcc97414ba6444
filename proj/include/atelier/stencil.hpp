#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "atelier/image.hpp"

namespace atelier::stencil {

enum class ZRole { FG, MG, BGOverlay };
enum class LineWeight { Thin, Medium, Thick };

std::string_view to_string(ZRole role) noexcept;
std::string_view to_string(LineWeight weight) noexcept;
std::optional<ZRole> parse_z_role(std::string_view text) noexcept;
std::optional<LineWeight> parse_line_weight(std::string_view text) noexcept;

/// Compositing depth: background overlays first, foreground last.
constexpr int draw_rank(ZRole role) noexcept {
  switch (role) {
    case ZRole::BGOverlay: return 0;
    case ZRole::MG: return 1;
    case ZRole::FG: return 2;
  }
  return 0;
}

struct StencilAsset {
  ImageBuffer image;  // RGBA, straight alpha
  ZRole z_role = ZRole::FG;
  LineWeight line_weight = LineWeight::Medium;
  std::string category;
  std::optional<std::filesystem::path> caption_path;
  std::string caption;
};

struct TaxonomyTags {
  ZRole z_role;
  std::string category;
  LineWeight line_weight;
};

/// Reads `<z_role>/<category>/<line_weight>/<name>.png` from the tail of a
/// path. Throws UnknownZRole / UnknownLineWeight.
TaxonomyTags parse_taxonomy(const std::filesystem::path& image_path);

struct AugmentSpec {
  bool hflip = false;
  bool vflip = false;
  int quarter_turns = 0;       // exact 90-degree rotations
  double rotation_deg = 0.0;   // [-15, 15]
  double scale_factor = 1.0;   // [0.85, 1.15]
  double brightness = 0.0;     // [-0.10, 0.10]
  double contrast = 0.0;       // [-0.10, 0.10]
  double grain_sigma = 0.0;    // >= 0, 8-bit LSB units, color only
  std::uint64_t seed = 0;

  /// Throws SpecOutOfBounds naming every violated bound.
  void validate() const;
  bool has_free_rotation() const { return rotation_deg != 0.0 || scale_factor != 1.0; }
};

inline constexpr double kMaxRotationDeg = 15.0;
inline constexpr double kMinScale = 0.85;
inline constexpr double kMaxScale = 1.15;
inline constexpr double kMaxJitter = 0.10;

/// Output geometry of a rotate+scale about the image centre. Maps output
/// pixel centres back into source pixel coordinates.
struct AffineGeometry {
  std::size_t out_w = 0;
  std::size_t out_h = 0;
  double m00 = 1, m01 = 0, m10 = 0, m11 = 1;  // inverse linear part
  double in_cx = 0, in_cy = 0, out_cx = 0, out_cy = 0;

  /// Source position (in pixel-index space, centres at integers) of output
  /// pixel (x, y).
  std::pair<double, double> source_of(std::size_t x, std::size_t y) const {
    const double dx = static_cast<double>(x) + 0.5 - out_cx;
    const double dy = static_cast<double>(y) + 0.5 - out_cy;
    return {m00 * dx + m01 * dy + in_cx - 0.5, m10 * dx + m11 * dy + in_cy - 0.5};
  }
};

/// The canvas grows to the bounding box so nothing is clipped.
AffineGeometry rotation_geometry(std::size_t w, std::size_t h, double rotation_deg,
                                 double scale_factor);

/// Geometric ops permute (flips, quarter turns) or resample in premultiplied
/// space with a bilinear kernel and a transparent border; photometric ops
/// touch color only, never alpha.
ImageBuffer alpha_safe_transform(const ImageBuffer& rgba, const AugmentSpec& spec);
StencilAsset alpha_safe_transform(const StencilAsset& asset, const AugmentSpec& spec);

struct Placement {
  StencilAsset asset;
  std::ptrdiff_t x = 0;
  std::ptrdiff_t y = 0;
  double scale = 1.0;
};

/// Transparent canvas, layers drawn BGOverlay, MG, FG (stable within a
/// role) with Porter-Duff over. The canvas takes the first asset's depth.
ImageBuffer composite_assets(const std::vector<Placement>& placements, std::size_t canvas_w,
                             std::size_t canvas_h);

/// Loads and checks an asset from a taxonomy tree. Errors:
/// UnreadableFile, MissingAlphaChannel, UnknownZRole, UnknownLineWeight.
StencilAsset validate_asset(const std::filesystem::path& path);

}  // namespace atelier::stencil
