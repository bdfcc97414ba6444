#include "atelier/image.hpp"

#include <algorithm>
#include <cstring>
#include <string>

namespace atelier {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ZeroDimension: return "ZeroDimension";
    case ErrorCode::AlphaModeViolation: return "AlphaModeViolation";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::LayoutMismatch: return "LayoutMismatch";
    case ErrorCode::MalformedBuffer: return "MalformedBuffer";
    case ErrorCode::PatchLargerThanImage: return "PatchLargerThanImage";
    case ErrorCode::AllMasked: return "AllMasked";
    case ErrorCode::EmptyWeightMap: return "EmptyWeightMap";
    case ErrorCode::NotDivisibleByScale: return "NotDivisibleByScale";
    case ErrorCode::JitterOutOfBounds: return "JitterOutOfBounds";
    case ErrorCode::SpecOutOfBounds: return "SpecOutOfBounds";
    case ErrorCode::EmptyAssetList: return "EmptyAssetList";
    case ErrorCode::MissingAlphaChannel: return "MissingAlphaChannel";
    case ErrorCode::UnreadableFile: return "UnreadableFile";
    case ErrorCode::UnknownZRole: return "UnknownZRole";
    case ErrorCode::UnknownLineWeight: return "UnknownLineWeight";
    case ErrorCode::InvalidGeometry: return "InvalidGeometry";
    case ErrorCode::MissingTile: return "MissingTile";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TargetUnreachable: return "TargetUnreachable";
    case ErrorCode::BudgetTooSmall: return "BudgetTooSmall";
    case ErrorCode::RefinerError: return "RefinerError";
    case ErrorCode::CapabilityExceeded: return "CapabilityExceeded";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::NoSingles: return "NoSingles";
    case ErrorCode::IOError: return "IOError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::CodecError: return "CodecError";
  }
  return "Unknown";
}

std::string_view to_string(Layout layout) noexcept {
  switch (layout) {
    case Layout::RGB: return "RGB";
    case Layout::RGBA: return "RGBA";
    case Layout::Luma: return "Luma";
  }
  return "?";
}

std::string_view to_string(Depth depth) noexcept {
  switch (depth) {
    case Depth::U8: return "U8";
    case Depth::U16: return "U16";
    case Depth::F32: return "F32";
  }
  return "?";
}

std::string_view to_string(AlphaMode mode) noexcept {
  switch (mode) {
    case AlphaMode::Straight: return "Straight";
    case AlphaMode::Premultiplied: return "Premultiplied";
    case AlphaMode::None: return "None";
  }
  return "?";
}

ImageBuffer::ImageBuffer(std::size_t width, std::size_t height, Layout layout, Depth depth)
    : ImageBuffer(width, height, layout, depth, default_alpha_mode(layout)) {}

ImageBuffer::ImageBuffer(std::size_t width, std::size_t height, Layout layout, Depth depth,
                         AlphaMode alpha_mode) {
  if (width == 0 || height == 0) {
    throw Error(ErrorCode::ZeroDimension, "image dimensions must be positive, got " +
                                              std::to_string(width) + "x" +
                                              std::to_string(height));
  }
  if ((alpha_mode == AlphaMode::None) != (layout != Layout::RGBA)) {
    throw Error(ErrorCode::AlphaModeViolation,
                "alpha mode None is required exactly when the layout has no alpha");
  }
  info_ = ImageInfo{width, height, layout, depth, alpha_mode};
  const std::size_t n = sample_count();
  switch (depth) {
    case Depth::U8: storage_ = std::vector<std::uint8_t>(n, 0); break;
    case Depth::U16: storage_ = std::vector<std::uint16_t>(n, 0); break;
    case Depth::F32: storage_ = std::vector<float>(n, 0.0f); break;
  }
}

void ImageBuffer::set_alpha_mode(AlphaMode mode) {
  if (info_.layout != Layout::RGBA || mode == AlphaMode::None) {
    throw Error(ErrorCode::AlphaModeViolation, "only RGBA buffers carry an alpha mode");
  }
  info_.alpha_mode = mode;
}

void ImageBuffer::copy_rows_from(const ImageBuffer& src, std::size_t src_row,
                                 std::size_t dst_row, std::size_t count) {
  if (src.width() != width() || src.layout() != layout() || src.depth() != depth()) {
    throw Error(ErrorCode::LayoutMismatch, "row copy between incompatible buffers");
  }
  if (src_row + count > src.height() || dst_row + count > height()) {
    throw Error(ErrorCode::OutOfBounds, "row copy outside buffer");
  }
  const std::size_t row = info_.row_samples();
  visit([&](auto dst) {
    using T = typename decltype(dst)::value_type;
    auto s = src.samples<T>();
    std::copy_n(s.begin() + static_cast<std::ptrdiff_t>(src_row * row), count * row,
                dst.begin() + static_cast<std::ptrdiff_t>(dst_row * row));
  });
}

void ImageBuffer::move_rows(std::size_t from, std::size_t to, std::size_t count) {
  if (from + count > height() || to + count > height()) {
    throw Error(ErrorCode::OutOfBounds, "row move outside buffer");
  }
  if (count == 0 || from == to) return;
  const std::size_t row = info_.row_samples();
  visit([&](auto s) {
    using T = typename decltype(s)::value_type;
    std::memmove(s.data() + to * row, s.data() + from * row, count * row * sizeof(T));
  });
}

void check_invariants(const ImageBuffer& img) {
  if (img.empty()) throw Error(ErrorCode::ZeroDimension, "empty image");
  if (img.alpha_mode() != AlphaMode::Premultiplied) return;
  const double eps = img.depth() == Depth::F32 ? 1e-6 : 0.0;
  const std::size_t n = img.width() * img.height();
  for (std::size_t p = 0; p < n; ++p) {
    const double a = img.get(p * 4 + 3);
    for (std::size_t c = 0; c < 3; ++c) {
      if (img.get(p * 4 + c) > a + eps) {
        throw Error(ErrorCode::MalformedBuffer,
                    "premultiplied color exceeds alpha at pixel " + std::to_string(p));
      }
    }
  }
}

}  // namespace atelier
