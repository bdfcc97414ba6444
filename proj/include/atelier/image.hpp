#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "atelier/error.hpp"

namespace atelier {

enum class Layout { RGB, RGBA, Luma };
enum class Depth { U8, U16, F32 };
enum class AlphaMode { Straight, Premultiplied, None };

constexpr std::size_t channel_count(Layout layout) noexcept {
  switch (layout) {
    case Layout::RGB: return 3;
    case Layout::RGBA: return 4;
    case Layout::Luma: return 1;
  }
  return 0;
}

constexpr std::size_t bytes_per_sample(Depth depth) noexcept {
  switch (depth) {
    case Depth::U8: return 1;
    case Depth::U16: return 2;
    case Depth::F32: return 4;
  }
  return 0;
}

/// Full-scale value in storage units: 255, 65535, or 1.0 for float.
constexpr double max_value(Depth depth) noexcept {
  switch (depth) {
    case Depth::U8: return 255.0;
    case Depth::U16: return 65535.0;
    case Depth::F32: return 1.0;
  }
  return 1.0;
}

std::string_view to_string(Layout layout) noexcept;
std::string_view to_string(Depth depth) noexcept;
std::string_view to_string(AlphaMode mode) noexcept;

/// Round half-to-even and clamp to the integer range; float depth passes
/// the value through unchanged.
template <typename T>
inline T store_sample(double value) noexcept {
  if constexpr (std::is_same_v<T, float>) {
    return static_cast<float>(value);
  } else {
    constexpr double hi = std::is_same_v<T, std::uint8_t> ? 255.0 : 65535.0;
    const double r = std::nearbyint(value);
    return static_cast<T>(r < 0.0 ? 0.0 : (r > hi ? hi : r));
  }
}

/// Geometry and format of a raster, without pixels.
struct ImageInfo {
  std::size_t width = 0;
  std::size_t height = 0;
  Layout layout = Layout::RGB;
  Depth depth = Depth::U8;
  AlphaMode alpha_mode = AlphaMode::None;

  std::size_t channels() const { return channel_count(layout); }
  std::size_t row_samples() const { return width * channels(); }
  std::size_t row_bytes() const { return row_samples() * bytes_per_sample(depth); }
  std::size_t byte_size() const { return row_bytes() * height; }
  bool operator==(const ImageInfo&) const = default;
};

/// Row-major, channel-interleaved raster. Samples live in a typed vector
/// selected by the depth; all arithmetic elsewhere happens in floating point
/// on values in storage units.
class ImageBuffer {
 public:
  using Storage = std::variant<std::vector<std::uint8_t>, std::vector<std::uint16_t>,
                               std::vector<float>>;

  ImageBuffer() = default;
  ImageBuffer(std::size_t width, std::size_t height, Layout layout, Depth depth);
  ImageBuffer(std::size_t width, std::size_t height, Layout layout, Depth depth,
              AlphaMode alpha_mode);
  explicit ImageBuffer(const ImageInfo& info)
      : ImageBuffer(info.width, info.height, info.layout, info.depth, info.alpha_mode) {}

  std::size_t width() const { return info_.width; }
  std::size_t height() const { return info_.height; }
  Layout layout() const { return info_.layout; }
  Depth depth() const { return info_.depth; }
  AlphaMode alpha_mode() const { return info_.alpha_mode; }
  std::size_t channels() const { return info_.channels(); }
  const ImageInfo& info() const { return info_; }
  bool empty() const { return info_.width == 0 || info_.height == 0; }
  std::size_t sample_count() const { return info_.width * info_.height * channels(); }
  std::size_t byte_size() const { return info_.byte_size(); }
  bool has_alpha() const { return info_.layout == Layout::RGBA; }

  /// Retags an RGBA buffer's alpha interpretation without touching samples.
  void set_alpha_mode(AlphaMode mode);

  template <typename T>
  std::span<T> samples() {
    return std::span<T>(std::get<std::vector<T>>(storage_));
  }
  template <typename T>
  std::span<const T> samples() const {
    return std::span<const T>(std::get<std::vector<T>>(storage_));
  }

  /// Calls fn with a typed span over the samples.
  template <typename Fn>
  decltype(auto) visit(Fn&& fn) {
    return std::visit([&](auto& v) -> decltype(auto) { return fn(std::span(v)); }, storage_);
  }
  template <typename Fn>
  decltype(auto) visit(Fn&& fn) const {
    return std::visit(
        [&](const auto& v) -> decltype(auto) { return fn(std::span(v)); }, storage_);
  }

  std::size_t index(std::size_t x, std::size_t y, std::size_t c = 0) const {
    return (y * info_.width + x) * channels() + c;
  }

  /// Sample value in storage units.
  double get(std::size_t i) const {
    return std::visit([i](const auto& v) { return static_cast<double>(v[i]); }, storage_);
  }
  double at(std::size_t x, std::size_t y, std::size_t c) const { return get(index(x, y, c)); }

  /// Stores a value in storage units (rounded and clamped at integer depths).
  void set(std::size_t i, double value) {
    std::visit(
        [i, value](auto& v) {
          using T = typename std::decay_t<decltype(v)>::value_type;
          v[i] = store_sample<T>(value);
        },
        storage_);
  }

  /// Copies `count` rows starting at `src_row` of `src` into this buffer at
  /// `dst_row`. Formats must match exactly.
  void copy_rows_from(const ImageBuffer& src, std::size_t src_row, std::size_t dst_row,
                      std::size_t count);

  /// Moves rows [from, from+count) to start at row `to` within this buffer.
  void move_rows(std::size_t from, std::size_t to, std::size_t count);

  bool operator==(const ImageBuffer& other) const {
    return info_ == other.info_ && storage_ == other.storage_;
  }

 private:
  ImageInfo info_;
  Storage storage_;
};

inline AlphaMode default_alpha_mode(Layout layout) {
  return layout == Layout::RGBA ? AlphaMode::Straight : AlphaMode::None;
}

/// Throws MalformedBuffer when the invariants of the format are violated.
void check_invariants(const ImageBuffer& img);

}  // namespace atelier
