#pragma once

#include <cstddef>

#include "atelier/image.hpp"
#include "atelier/imaging.hpp"
#include "atelier/memory_meter.hpp"

namespace atelier {

/// Sequential top-to-bottom source of image rows.
class RowReader {
 public:
  virtual ~RowReader() = default;
  virtual const ImageInfo& info() const = 0;
  /// Reads the next `count` rows into dst starting at row `dst_row`.
  virtual void read_rows(ImageBuffer& dst, std::size_t dst_row, std::size_t count) = 0;
};

/// Sequential top-to-bottom sink of image rows.
class RowWriter {
 public:
  virtual ~RowWriter() = default;
  virtual const ImageInfo& info() const = 0;
  virtual void write_rows(const ImageBuffer& src, std::size_t src_row, std::size_t count) = 0;
  virtual void finish() {}
};

class BufferRowReader final : public RowReader {
 public:
  explicit BufferRowReader(const ImageBuffer& src) : src_(src) {}
  const ImageInfo& info() const override { return src_.info(); }
  void read_rows(ImageBuffer& dst, std::size_t dst_row, std::size_t count) override {
    dst.copy_rows_from(src_, next_, dst_row, count);
    next_ += count;
  }

 private:
  const ImageBuffer& src_;
  std::size_t next_ = 0;
};

class BufferRowWriter final : public RowWriter {
 public:
  explicit BufferRowWriter(const ImageInfo& info) : out_(info) {}
  const ImageInfo& info() const override { return out_.info(); }
  void write_rows(const ImageBuffer& src, std::size_t src_row, std::size_t count) override {
    out_.copy_rows_from(src, src_row, next_, count);
    next_ += count;
  }
  std::size_t rows_written() const { return next_; }
  ImageBuffer take() { return std::move(out_); }

 private:
  ImageBuffer out_;
  std::size_t next_ = 0;
};

/// Streams a resample from reader to writer holding only the window of
/// horizontally-resampled rows the vertical kernel needs. The in-memory
/// imaging::resample runs through this same path, so results agree bit for
/// bit.
void resample_rows(RowReader& reader, RowWriter& writer, imaging::ResampleFilter filter,
                   MemoryMeter* meter = nullptr);

/// Bytes resample_rows leases for the given geometry.
std::size_t resample_footprint(const ImageInfo& in, std::size_t out_w, std::size_t out_h,
                               imaging::ResampleFilter filter);

}  // namespace atelier
