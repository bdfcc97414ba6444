#include <cstdio>

#include <jpeglib.h>

#include <csetjmp>
#include <cstdlib>
#include <string>

#include "atelier/codec.hpp"
#include "atelier/imaging.hpp"

namespace atelier {

namespace {

struct ErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void on_jpeg_error(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<ErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

void silence(j_common_ptr, int) {}

}  // namespace

std::vector<std::uint8_t> encode_jpeg(const ImageBuffer& img, int quality) {
  if (img.depth() != Depth::U8 || img.layout() == Layout::RGBA) {
    throw Error(ErrorCode::LayoutMismatch, "JPEG encodes 8-bit RGB or Luma only");
  }
  if (quality < 1 || quality > 100) {
    throw Error(ErrorCode::ValidationError, "JPEG quality must be in [1,100]");
  }
  jpeg_compress_struct cinfo{};
  ErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = on_jpeg_error;
  err.base.emit_message = silence;
  unsigned char* mem = nullptr;
  unsigned long mem_size = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    std::free(mem);
    throw Error(ErrorCode::CodecError, std::string("JPEG encode failed: ") + err.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &mem, &mem_size);
  cinfo.image_width = static_cast<JDIMENSION>(img.width());
  cinfo.image_height = static_cast<JDIMENSION>(img.height());
  cinfo.input_components = static_cast<int>(img.channels());
  cinfo.in_color_space = img.layout() == Layout::Luma ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  for (int c = 0; c < cinfo.num_components; ++c) {
    cinfo.comp_info[c].h_samp_factor = 1;
    cinfo.comp_info[c].v_samp_factor = 1;
  }
  jpeg_start_compress(&cinfo, TRUE);
  auto samples = img.samples<std::uint8_t>();
  const std::size_t stride = img.info().row_samples();
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = const_cast<JSAMPROW>(samples.data() + cinfo.next_scanline * stride);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  std::vector<std::uint8_t> out(mem, mem + mem_size);
  std::free(mem);
  return out;
}

ImageBuffer decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo{};
  ErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = on_jpeg_error;
  err.base.emit_message = silence;
  ImageBuffer out;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(ErrorCode::CodecError, std::string("JPEG decode failed: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  out = ImageBuffer(cinfo.output_width, cinfo.output_height,
                    cinfo.output_components == 1 ? Layout::Luma : Layout::RGB, Depth::U8);
  auto samples = out.samples<std::uint8_t>();
  const std::size_t stride = out.info().row_samples();
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = samples.data() + cinfo.output_scanline * stride;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return out;
}

ImageBuffer jpeg_roundtrip(const ImageBuffer& img, int quality) {
  if (img.depth() == Depth::U8) return decode_jpeg(encode_jpeg(img, quality));
  const ImageBuffer u8 = imaging::convert_depth(img, Depth::U8);
  return imaging::convert_depth(decode_jpeg(encode_jpeg(u8, quality)), img.depth());
}

}  // namespace atelier
