#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

#include "atelier/image.hpp"

namespace atelier::imaging {

enum class ResampleFilter { Nearest, Bilinear, Bicubic, Lanczos3 };

std::string_view to_string(ResampleFilter filter) noexcept;
std::optional<ResampleFilter> parse_filter(std::string_view name) noexcept;

/// Kernel support radius in source pixels at unit scale.
double filter_radius(ResampleFilter filter) noexcept;

/// Kernel value at offset t. Bicubic is Catmull-Rom (a = -0.5).
double filter_kernel(ResampleFilter filter, double t) noexcept;

inline constexpr std::array<double, 3> kRec709 = {0.2126, 0.7152, 0.0722};

/// Separable resample with replicate edges. Downscaling widens the kernel by
/// the scale ratio. RGBA input must be premultiplied.
ImageBuffer resample(const ImageBuffer& img, std::size_t target_w, std::size_t target_h,
                     ResampleFilter filter);

/// |Laplacian| of the luma under the 4-neighbour kernel, replicate edges.
/// Output is Luma/F32 in normalized units.
ImageBuffer laplacian_magnitude(const ImageBuffer& img);

/// Rec.709 luma at the input depth; alpha is ignored. Luma input is copied.
ImageBuffer to_luma(const ImageBuffer& img);

/// Normalized luma as floats, one per pixel.
std::vector<float> luma_f32(const ImageBuffer& img);

ImageBuffer crop(const ImageBuffer& img, std::size_t x, std::size_t y, std::size_t w,
                 std::size_t h);

/// Copies src into dst at (x, y) verbatim, clipped to dst bounds.
void paste(ImageBuffer& dst, const ImageBuffer& src, std::ptrdiff_t x, std::ptrdiff_t y);

/// Porter-Duff "src over dst" with src placed at (x, y). Both straight RGBA of
/// the same depth; the result is straight RGBA.
ImageBuffer composite_over(const ImageBuffer& dst, const ImageBuffer& src, std::ptrdiff_t x,
                           std::ptrdiff_t y);

ImageBuffer premultiply(const ImageBuffer& img);

/// Divides color by alpha. Pixels with alpha at or below one storage LSB get
/// black color.
ImageBuffer unpremultiply(const ImageBuffer& img);

ImageBuffer convert_depth(const ImageBuffer& img, Depth depth);

/// Drops or adds an opaque alpha channel; color samples are copied.
ImageBuffer convert_layout(const ImageBuffer& img, Layout layout);

ImageBuffer flip_horizontal(const ImageBuffer& img);
ImageBuffer flip_vertical(const ImageBuffer& img);

/// Rotates by quarter_turns * 90 degrees counter-clockwise.
ImageBuffer rotate90(const ImageBuffer& img, int quarter_turns);

/// Isotropic Gaussian blur on every channel, replicate edges, radius
/// ceil(3 sigma). sigma <= 0 returns a copy.
ImageBuffer gaussian_blur(const ImageBuffer& img, double sigma);

/// Applies `fn(value, channel) -> value` to every sample of the color
/// channels, leaving alpha untouched; values are in storage units.
template <typename Fn>
ImageBuffer map_color(const ImageBuffer& img, Fn&& fn) {
  ImageBuffer out = img;
  const std::size_t ch = img.channels();
  const std::size_t color = img.has_alpha() ? 3 : ch;
  const std::size_t n = img.width() * img.height();
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t c = 0; c < color; ++c) {
      const std::size_t i = p * ch + c;
      out.set(i, fn(img.get(i), c));
    }
  }
  return out;
}

/// Extracts the alpha channel as a Luma buffer of the same depth.
ImageBuffer alpha_channel(const ImageBuffer& img);

}  // namespace atelier::imaging
