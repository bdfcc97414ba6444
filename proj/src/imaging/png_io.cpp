#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <string>

#include "atelier/codec.hpp"
#include "atelier/imaging.hpp"

namespace atelier {

namespace {

struct MemoryInput {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void read_from_memory(png_structp png, png_bytep out, png_size_t length) {
  auto* in = static_cast<MemoryInput*>(png_get_io_ptr(png));
  if (in->offset + length > in->bytes.size()) png_error(png, "truncated PNG data");
  std::memcpy(out, in->bytes.data() + in->offset, length);
  in->offset += length;
}

void write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void flush_noop(png_structp) {}

[[noreturn]] void on_png_error(png_structp png, png_const_charp message) {
  auto* msg = static_cast<std::string*>(png_get_error_ptr(png));
  if (msg) *msg = message;
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

/// Configures transforms after png_read_info and returns the decoded format.
ImageInfo configure_read(png_structp png, png_infop info) {
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  const bool has_trns = png_get_valid(png, info, PNG_INFO_tRNS) != 0;
  if (has_trns) png_set_tRNS_to_alpha(png);
  if (bit_depth == 16) png_set_swap(png);

  bool alpha = (color & PNG_COLOR_MASK_ALPHA) != 0 || has_trns;
  bool gray = (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA);
  if (gray && alpha) {
    png_set_gray_to_rgb(png);
    gray = false;
  }
  png_read_update_info(png, info);

  ImageInfo out;
  out.width = w;
  out.height = h;
  out.depth = bit_depth == 16 ? Depth::U16 : Depth::U8;
  out.layout = gray ? Layout::Luma : (alpha ? Layout::RGBA : Layout::RGB);
  out.alpha_mode = default_alpha_mode(out.layout);
  if (png_get_rowbytes(png, info) != out.row_bytes()) {
    png_error(png, "unexpected decoded row size");
  }
  return out;
}

unsigned char* row_pointer(ImageBuffer& img, std::size_t row) {
  return img.visit([&](auto s) {
    return reinterpret_cast<unsigned char*>(s.data() + row * img.info().row_samples());
  });
}

const unsigned char* row_pointer(const ImageBuffer& img, std::size_t row) {
  return img.visit([&](auto s) {
    return reinterpret_cast<const unsigned char*>(s.data() + row * img.info().row_samples());
  });
}

int png_color_type(Layout layout) {
  switch (layout) {
    case Layout::Luma: return PNG_COLOR_TYPE_GRAY;
    case Layout::RGB: return PNG_COLOR_TYPE_RGB;
    case Layout::RGBA: return PNG_COLOR_TYPE_RGBA;
  }
  return PNG_COLOR_TYPE_RGB;
}

/// Brings a buffer into an on-disk representable form.
ImageBuffer prepare_for_png(const ImageBuffer& img) {
  ImageBuffer out = img;
  if (out.alpha_mode() == AlphaMode::Premultiplied) out = imaging::unpremultiply(out);
  if (out.depth() == Depth::F32) out = imaging::convert_depth(out, Depth::U16);
  return out;
}

void write_header(png_structp png, png_infop info, const ImageInfo& fmt, int level) {
  png_set_IHDR(png, info, static_cast<png_uint_32>(fmt.width),
               static_cast<png_uint_32>(fmt.height), fmt.depth == Depth::U16 ? 16 : 8,
               png_color_type(fmt.layout), PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, level);
  png_write_info(png, info);
  if (fmt.depth == Depth::U16) png_set_swap(png);
}

}  // namespace

ImageBuffer decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw Error(ErrorCode::CodecError, "not a PNG stream");
  }
  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, on_png_error,
                                           on_png_warning);
  png_infop info = png_create_info_struct(png);
  MemoryInput input{bytes, 0};
  ImageBuffer out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::CodecError, "PNG decode failed: " + message);
  }
  png_set_read_fn(png, &input, read_from_memory);
  png_read_info(png, info);
  const int passes = png_set_interlace_handling(png);
  const ImageInfo fmt = configure_read(png, info);
  out = ImageBuffer(fmt);
  for (int pass = 0; pass < passes; ++pass) {
    for (std::size_t r = 0; r < fmt.height; ++r) png_read_row(png, row_pointer(out, r), nullptr);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw Error(ErrorCode::IOError, "cannot open " + path.string());
  std::vector<std::uint8_t> data;
  std::uint8_t buf[1 << 16];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) data.insert(data.end(), buf, buf + n);
  const bool failed = std::ferror(f) != 0;
  std::fclose(f);
  if (failed) throw Error(ErrorCode::IOError, "read error on " + path.string());
  return data;
}

}  // namespace

ImageBuffer read_png(const std::filesystem::path& path) {
  const auto data = slurp(path);
  try {
    return decode_png(data);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

ImageInfo read_png_info(const std::filesystem::path& path) {
  PngRowReader reader(path);
  return reader.info();
}

std::vector<std::uint8_t> encode_png(const ImageBuffer& img, int compression_level) {
  const ImageBuffer src = prepare_for_png(img);
  std::vector<std::uint8_t> out;
  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, on_png_error,
                                            on_png_warning);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::CodecError, "PNG encode failed: " + message);
  }
  png_set_write_fn(png, &out, write_to_vector, flush_noop);
  write_header(png, info, src.info(), compression_level);
  for (std::size_t r = 0; r < src.height(); ++r) {
    png_write_row(png, row_pointer(src, r));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_png(const std::filesystem::path& path, const ImageBuffer& img,
               int compression_level) {
  const ImageBuffer src = prepare_for_png(img);
  PngRowWriter writer(path, src.info(), compression_level);
  writer.write_rows(src, 0, src.height());
  writer.finish();
}

struct PngRowReader::State {
  std::FILE* file = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::string message;
  std::string path;
  ImageInfo fmt;
  std::size_t next = 0;

  ~State() {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    if (file) std::fclose(file);
  }
};

PngRowReader::PngRowReader(const std::filesystem::path& path) : state_(std::make_unique<State>()) {
  State& s = *state_;
  s.path = path.string();
  s.file = std::fopen(path.c_str(), "rb");
  if (!s.file) throw Error(ErrorCode::IOError, "cannot open " + s.path);
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, s.file) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw Error(ErrorCode::CodecError, s.path + ": not a PNG file");
  }
  s.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &s.message, on_png_error, on_png_warning);
  s.info = png_create_info_struct(s.png);
  if (setjmp(png_jmpbuf(s.png))) {
    throw Error(ErrorCode::CodecError, s.path + ": " + s.message);
  }
  png_init_io(s.png, s.file);
  png_set_sig_bytes(s.png, 8);
  png_read_info(s.png, s.info);
  if (png_get_interlace_type(s.png, s.info) != PNG_INTERLACE_NONE) {
    throw Error(ErrorCode::CodecError, s.path + ": interlaced PNG cannot be row-streamed");
  }
  s.fmt = configure_read(s.png, s.info);
}

PngRowReader::~PngRowReader() = default;

const ImageInfo& PngRowReader::info() const { return state_->fmt; }

void PngRowReader::read_rows(ImageBuffer& dst, std::size_t dst_row, std::size_t count) {
  State& s = *state_;
  if (dst.width() != s.fmt.width || dst.layout() != s.fmt.layout || dst.depth() != s.fmt.depth) {
    throw Error(ErrorCode::LayoutMismatch, "row buffer does not match PNG format");
  }
  if (s.next + count > s.fmt.height || dst_row + count > dst.height()) {
    throw Error(ErrorCode::OutOfBounds, s.path + ": read past the last row");
  }
  if (setjmp(png_jmpbuf(s.png))) {
    throw Error(ErrorCode::CodecError, s.path + ": " + s.message);
  }
  for (std::size_t r = 0; r < count; ++r) {
    png_read_row(s.png, row_pointer(dst, dst_row + r), nullptr);
  }
  s.next += count;
}

struct PngRowWriter::State {
  std::FILE* file = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::string message;
  std::string path;
  ImageInfo fmt;
  std::size_t next = 0;
  bool finished = false;

  ~State() {
    if (png) png_destroy_write_struct(&png, &info);
    if (file) std::fclose(file);
  }
};

PngRowWriter::PngRowWriter(const std::filesystem::path& path, const ImageInfo& info,
                           int compression_level)
    : state_(std::make_unique<State>()) {
  State& s = *state_;
  s.path = path.string();
  s.fmt = info;
  if (info.depth == Depth::F32 || info.alpha_mode == AlphaMode::Premultiplied) {
    throw Error(ErrorCode::LayoutMismatch, "PNG rows must be integer, straight alpha");
  }
  s.file = std::fopen(path.c_str(), "wb");
  if (!s.file) throw Error(ErrorCode::IOError, "cannot create " + s.path);
  s.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &s.message, on_png_error, on_png_warning);
  s.info = png_create_info_struct(s.png);
  if (setjmp(png_jmpbuf(s.png))) {
    throw Error(ErrorCode::IOError, s.path + ": " + s.message);
  }
  png_init_io(s.png, s.file);
  write_header(s.png, s.info, info, compression_level);
}

PngRowWriter::~PngRowWriter() = default;

const ImageInfo& PngRowWriter::info() const { return state_->fmt; }

void PngRowWriter::write_rows(const ImageBuffer& src, std::size_t src_row, std::size_t count) {
  State& s = *state_;
  if (src.width() != s.fmt.width || src.layout() != s.fmt.layout || src.depth() != s.fmt.depth) {
    throw Error(ErrorCode::LayoutMismatch, "row buffer does not match PNG format");
  }
  if (s.next + count > s.fmt.height) {
    throw Error(ErrorCode::OutOfBounds, s.path + ": write past the last row");
  }
  if (setjmp(png_jmpbuf(s.png))) {
    throw Error(ErrorCode::IOError, s.path + ": " + s.message);
  }
  for (std::size_t r = 0; r < count; ++r) {
    png_write_row(s.png, row_pointer(src, src_row + r));
  }
  s.next += count;
}

void PngRowWriter::finish() {
  State& s = *state_;
  if (s.finished) return;
  if (s.next != s.fmt.height) {
    throw Error(ErrorCode::IOError, s.path + ": finished after " + std::to_string(s.next) +
                                        " of " + std::to_string(s.fmt.height) + " rows");
  }
  if (setjmp(png_jmpbuf(s.png))) {
    throw Error(ErrorCode::IOError, s.path + ": " + s.message);
  }
  png_write_end(s.png, nullptr);
  s.finished = true;
  if (std::fclose(s.file) != 0) {
    s.file = nullptr;
    throw Error(ErrorCode::IOError, "failed to close " + s.path);
  }
  s.file = nullptr;
}

}  // namespace atelier
