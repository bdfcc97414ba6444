#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "atelier/image.hpp"
#include "atelier/row_io.hpp"

namespace atelier {

// PNG: 8/16-bit gray, RGB and RGBA. Gray+alpha and palette files decode to
// RGBA/RGB. Alpha is straight on disk; premultiplied buffers are converted
// before encoding and F32 buffers are written as 16-bit.

ImageBuffer decode_png(std::span<const std::uint8_t> bytes);
ImageBuffer read_png(const std::filesystem::path& path);
ImageInfo read_png_info(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const ImageBuffer& img, int compression_level = 6);
void write_png(const std::filesystem::path& path, const ImageBuffer& img,
               int compression_level = 6);

/// Row-by-row PNG decoder. Interlaced files are rejected since they cannot
/// be streamed.
class PngRowReader final : public RowReader {
 public:
  explicit PngRowReader(const std::filesystem::path& path);
  ~PngRowReader() override;
  PngRowReader(const PngRowReader&) = delete;
  PngRowReader& operator=(const PngRowReader&) = delete;

  const ImageInfo& info() const override;
  void read_rows(ImageBuffer& dst, std::size_t dst_row, std::size_t count) override;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

/// Row-by-row PNG encoder. Accepts U8/U16 straight-alpha rows.
class PngRowWriter final : public RowWriter {
 public:
  PngRowWriter(const std::filesystem::path& path, const ImageInfo& info,
               int compression_level = 6);
  ~PngRowWriter() override;
  PngRowWriter(const PngRowWriter&) = delete;
  PngRowWriter& operator=(const PngRowWriter&) = delete;

  const ImageInfo& info() const override;
  void write_rows(const ImageBuffer& src, std::size_t src_row, std::size_t count) override;
  void finish() override;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

/// Baseline JPEG at the given quality (1..100) with 4:4:4 sampling. RGB and
/// Luma, 8-bit only.
std::vector<std::uint8_t> encode_jpeg(const ImageBuffer& img, int quality);
ImageBuffer decode_jpeg(std::span<const std::uint8_t> bytes);

/// Encode then decode. Buffers at other depths are quantized to 8-bit around
/// the codec and converted back afterwards.
ImageBuffer jpeg_roundtrip(const ImageBuffer& img, int quality);

}  // namespace atelier
