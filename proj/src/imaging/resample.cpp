#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "atelier/imaging.hpp"
#include "atelier/row_io.hpp"

namespace atelier::imaging {

std::string_view to_string(ResampleFilter filter) noexcept {
  switch (filter) {
    case ResampleFilter::Nearest: return "nearest";
    case ResampleFilter::Bilinear: return "bilinear";
    case ResampleFilter::Bicubic: return "bicubic";
    case ResampleFilter::Lanczos3: return "lanczos3";
  }
  return "?";
}

std::optional<ResampleFilter> parse_filter(std::string_view name) noexcept {
  for (auto f : {ResampleFilter::Nearest, ResampleFilter::Bilinear, ResampleFilter::Bicubic,
                 ResampleFilter::Lanczos3}) {
    if (name == to_string(f)) return f;
  }
  return std::nullopt;
}

double filter_radius(ResampleFilter filter) noexcept {
  switch (filter) {
    case ResampleFilter::Nearest: return 0.5;
    case ResampleFilter::Bilinear: return 1.0;
    case ResampleFilter::Bicubic: return 2.0;
    case ResampleFilter::Lanczos3: return 3.0;
  }
  return 1.0;
}

namespace {

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

double filter_kernel(ResampleFilter filter, double t) noexcept {
  const double x = std::fabs(t);
  switch (filter) {
    case ResampleFilter::Nearest:
      return x < 0.5 ? 1.0 : 0.0;
    case ResampleFilter::Bilinear:
      return x < 1.0 ? 1.0 - x : 0.0;
    case ResampleFilter::Bicubic: {
      constexpr double a = -0.5;
      if (x < 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
      if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
      return 0.0;
    }
    case ResampleFilter::Lanczos3:
      return x < 3.0 ? sinc(x) * sinc(x / 3.0) : 0.0;
  }
  return 0.0;
}

ImageBuffer resample(const ImageBuffer& img, std::size_t target_w, std::size_t target_h,
                     ResampleFilter filter) {
  if (target_w == 0 || target_h == 0 || img.empty()) {
    throw Error(ErrorCode::ZeroDimension, "resample target must be positive");
  }
  if (img.layout() == Layout::RGBA && img.alpha_mode() != AlphaMode::Premultiplied) {
    throw Error(ErrorCode::AlphaModeViolation,
                "resampling RGBA requires premultiplied alpha; convert first");
  }
  BufferRowReader reader(img);
  ImageInfo out_info = img.info();
  out_info.width = target_w;
  out_info.height = target_h;
  BufferRowWriter writer(out_info);
  resample_rows(reader, writer, filter);
  return writer.take();
}

}  // namespace atelier::imaging

namespace atelier {

namespace {

struct Tap {
  std::size_t index;
  double weight;
};

/// Taps for every output position along one axis; indices are clamped to
/// the source extent (replicate edges).
std::vector<std::vector<Tap>> axis_taps(std::size_t in, std::size_t out,
                                        imaging::ResampleFilter filter) {
  std::vector<std::vector<Tap>> taps(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  const auto last = static_cast<std::ptrdiff_t>(in) - 1;
  if (filter == imaging::ResampleFilter::Nearest) {
    for (std::size_t o = 0; o < out; ++o) {
      const auto j = static_cast<std::ptrdiff_t>(std::floor((static_cast<double>(o) + 0.5) * scale));
      taps[o].push_back({static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, last)), 1.0});
    }
    return taps;
  }
  const double stretch = std::max(1.0, scale);
  const double support = imaging::filter_radius(filter) * stretch;
  for (std::size_t o = 0; o < out; ++o) {
    const double center = (static_cast<double>(o) + 0.5) * scale - 0.5;
    const auto lo = static_cast<std::ptrdiff_t>(std::ceil(center - support));
    const auto hi = static_cast<std::ptrdiff_t>(std::floor(center + support));
    double sum = 0.0;
    auto& t = taps[o];
    for (std::ptrdiff_t j = lo; j <= hi; ++j) {
      const double w = imaging::filter_kernel(filter, (static_cast<double>(j) - center) / stretch);
      if (w == 0.0) continue;
      t.push_back({static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, last)), w});
      sum += w;
    }
    if (t.empty()) {
      const auto j = static_cast<std::ptrdiff_t>(std::lround(center));
      t.push_back({static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, last)), 1.0});
      sum = 1.0;
    }
    for (auto& tap : t) tap.weight /= sum;
  }
  return taps;
}

std::size_t window_rows(const std::vector<std::vector<Tap>>& vtaps) {
  std::size_t cap = 1;
  for (const auto& t : vtaps) {
    std::size_t lo = t.front().index, hi = t.front().index;
    for (const auto& tap : t) {
      lo = std::min(lo, tap.index);
      hi = std::max(hi, tap.index);
    }
    cap = std::max(cap, hi - lo + 1);
  }
  return cap;
}

}  // namespace

std::size_t resample_footprint(const ImageInfo& in, std::size_t out_w, std::size_t out_h,
                               imaging::ResampleFilter filter) {
  const auto vtaps = axis_taps(in.height, out_h, filter);
  ImageInfo out = in;
  out.width = out_w;
  out.height = 1;
  return window_rows(vtaps) * out_w * in.channels() * sizeof(double) + in.row_bytes() +
         out.row_bytes();
}

void resample_rows(RowReader& reader, RowWriter& writer, imaging::ResampleFilter filter,
                   MemoryMeter* meter) {
  const ImageInfo in = reader.info();
  const ImageInfo out = writer.info();
  if (in.layout != out.layout || in.depth != out.depth || in.alpha_mode != out.alpha_mode) {
    throw Error(ErrorCode::LayoutMismatch, "resample reader and writer formats differ");
  }
  const std::size_t ch = in.channels();
  const auto htaps = axis_taps(in.width, out.width, filter);
  const auto vtaps = axis_taps(in.height, out.height, filter);
  const std::size_t cap = window_rows(vtaps);
  const std::size_t hrow_len = out.width * ch;

  auto ring_lease = meter_lease(meter, cap * hrow_len * sizeof(double));
  std::vector<double> ring(cap * hrow_len);
  ImageInfo in_row_info = in;
  in_row_info.height = 1;
  auto in_lease = meter_lease(meter, in_row_info.row_bytes());
  ImageBuffer in_row(in_row_info);
  ImageInfo out_row_info = out;
  out_row_info.height = 1;
  auto out_lease = meter_lease(meter, out_row_info.row_bytes());
  ImageBuffer out_row(out_row_info);
  std::vector<double> acc(hrow_len);

  const bool clamp_premultiplied = in.alpha_mode == AlphaMode::Premultiplied;
  std::size_t next_source = 0;  // next source row to read

  auto load_row = [&](std::size_t j) {
    reader.read_rows(in_row, 0, 1);
    double* dst = ring.data() + (j % cap) * hrow_len;
    in_row.visit([&](auto s) {
      for (std::size_t x = 0; x < out.width; ++x) {
        for (std::size_t c = 0; c < ch; ++c) {
          double v = 0.0;
          for (const Tap& t : htaps[x]) v += t.weight * static_cast<double>(s[t.index * ch + c]);
          dst[x * ch + c] = v;
        }
      }
    });
  };

  for (std::size_t o = 0; o < out.height; ++o) {
    std::size_t hi = 0;
    for (const Tap& t : vtaps[o]) hi = std::max(hi, t.index);
    while (next_source <= hi) load_row(next_source++);

    std::fill(acc.begin(), acc.end(), 0.0);
    for (const Tap& t : vtaps[o]) {
      const double* src = ring.data() + (t.index % cap) * hrow_len;
      for (std::size_t i = 0; i < hrow_len; ++i) acc[i] += t.weight * src[i];
    }
    out_row.visit([&](auto d) {
      using T = typename decltype(d)::value_type;
      for (std::size_t i = 0; i < hrow_len; ++i) d[i] = store_sample<T>(acc[i]);
      if (clamp_premultiplied) {
        for (std::size_t x = 0; x < out.width; ++x) {
          const T a = d[x * 4 + 3];
          for (std::size_t c = 0; c < 3; ++c) d[x * 4 + c] = std::min(d[x * 4 + c], a);
        }
      }
    });
    writer.write_rows(out_row, 0, 1);
  }
  // Drain unread rows so sequential readers end at the bottom.
  while (next_source < in.height) {
    reader.read_rows(in_row, 0, 1);
    ++next_source;
  }
  writer.finish();
}

}  // namespace atelier
