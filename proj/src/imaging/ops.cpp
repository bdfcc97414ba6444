#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "atelier/imaging.hpp"

namespace atelier::imaging {

namespace {

std::string rect_string(std::size_t x, std::size_t y, std::size_t w, std::size_t h) {
  return "(" + std::to_string(x) + "," + std::to_string(y) + " " + std::to_string(w) + "x" +
         std::to_string(h) + ")";
}

void require_straight_rgba(const ImageBuffer& img, const char* what) {
  if (img.layout() != Layout::RGBA || img.alpha_mode() != AlphaMode::Straight) {
    throw Error(ErrorCode::LayoutMismatch,
                std::string(what) + " must be straight-alpha RGBA, got " +
                    std::string(to_string(img.layout())) + "/" +
                    std::string(to_string(img.alpha_mode())));
  }
}

double alpha_lsb(Depth depth) { return depth == Depth::F32 ? 0.0 : 1.0; }

}  // namespace

std::vector<float> luma_f32(const ImageBuffer& img) {
  const std::size_t n = img.width() * img.height();
  const std::size_t ch = img.channels();
  const double scale = 1.0 / max_value(img.depth());
  std::vector<float> out(n);
  img.visit([&](auto s) {
    if (img.layout() == Layout::Luma) {
      for (std::size_t p = 0; p < n; ++p) out[p] = static_cast<float>(s[p] * scale);
      return;
    }
    for (std::size_t p = 0; p < n; ++p) {
      const double y = kRec709[0] * s[p * ch] + kRec709[1] * s[p * ch + 1] +
                       kRec709[2] * s[p * ch + 2];
      out[p] = static_cast<float>(y * scale);
    }
  });
  return out;
}

ImageBuffer to_luma(const ImageBuffer& img) {
  if (img.layout() == Layout::Luma) return img;
  ImageBuffer out(img.width(), img.height(), Layout::Luma, img.depth());
  const std::size_t n = img.width() * img.height();
  const std::size_t ch = img.channels();
  img.visit([&](auto s) {
    using T = typename decltype(s)::value_type;
    auto d = out.samples<T>();
    for (std::size_t p = 0; p < n; ++p) {
      const double y = kRec709[0] * s[p * ch] + kRec709[1] * s[p * ch + 1] +
                       kRec709[2] * s[p * ch + 2];
      d[p] = store_sample<T>(y);
    }
  });
  return out;
}

ImageBuffer laplacian_magnitude(const ImageBuffer& img) {
  if (img.empty()) throw Error(ErrorCode::MalformedBuffer, "empty image");
  const std::size_t w = img.width();
  const std::size_t h = img.height();
  const std::vector<float> y = luma_f32(img);
  ImageBuffer out(w, h, Layout::Luma, Depth::F32);
  auto d = out.samples<float>();
  for (std::size_t r = 0; r < h; ++r) {
    const std::size_t ru = r == 0 ? 0 : r - 1;
    const std::size_t rd = r + 1 == h ? r : r + 1;
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t cl = c == 0 ? 0 : c - 1;
      const std::size_t cr = c + 1 == w ? c : c + 1;
      // Kernel taps in raster order.
      float s = y[ru * w + c];
      s += y[r * w + cl];
      s += -4.0f * y[r * w + c];
      s += y[r * w + cr];
      s += y[rd * w + c];
      d[r * w + c] = std::fabs(s);
    }
  }
  return out;
}

ImageBuffer crop(const ImageBuffer& img, std::size_t x, std::size_t y, std::size_t w,
                 std::size_t h) {
  if (w == 0 || h == 0 || x + w > img.width() || y + h > img.height()) {
    throw Error(ErrorCode::OutOfBounds, "crop rectangle " + rect_string(x, y, w, h) +
                                            " outside " + std::to_string(img.width()) + "x" +
                                            std::to_string(img.height()) + " image");
  }
  ImageBuffer out(w, h, img.layout(), img.depth(), img.alpha_mode());
  const std::size_t ch = img.channels();
  img.visit([&](auto s) {
    using T = typename decltype(s)::value_type;
    auto d = out.samples<T>();
    for (std::size_t r = 0; r < h; ++r) {
      const auto* src = s.data() + ((y + r) * img.width() + x) * ch;
      std::copy_n(src, w * ch, d.data() + r * w * ch);
    }
  });
  return out;
}

void paste(ImageBuffer& dst, const ImageBuffer& src, std::ptrdiff_t x, std::ptrdiff_t y) {
  if (dst.layout() != src.layout() || dst.depth() != src.depth()) {
    throw Error(ErrorCode::LayoutMismatch, "paste between different formats");
  }
  const auto dw = static_cast<std::ptrdiff_t>(dst.width());
  const auto dh = static_cast<std::ptrdiff_t>(dst.height());
  const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(x, 0);
  const std::ptrdiff_t y0 = std::max<std::ptrdiff_t>(y, 0);
  const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(x + static_cast<std::ptrdiff_t>(src.width()), dw);
  const std::ptrdiff_t y1 = std::min<std::ptrdiff_t>(y + static_cast<std::ptrdiff_t>(src.height()), dh);
  if (x0 >= x1 || y0 >= y1) return;
  const std::size_t ch = dst.channels();
  dst.visit([&](auto d) {
    using T = typename decltype(d)::value_type;
    auto s = src.samples<T>();
    for (std::ptrdiff_t r = y0; r < y1; ++r) {
      const auto* from = s.data() + (static_cast<std::size_t>(r - y) * src.width() +
                                     static_cast<std::size_t>(x0 - x)) * ch;
      std::copy_n(from, static_cast<std::size_t>(x1 - x0) * ch,
                  d.data() + (static_cast<std::size_t>(r) * dst.width() +
                              static_cast<std::size_t>(x0)) * ch);
    }
  });
}

ImageBuffer composite_over(const ImageBuffer& dst, const ImageBuffer& src, std::ptrdiff_t x,
                           std::ptrdiff_t y) {
  require_straight_rgba(dst, "composite destination");
  require_straight_rgba(src, "composite source");
  if (dst.depth() != src.depth()) {
    throw Error(ErrorCode::LayoutMismatch, "composite layers must share a depth");
  }
  ImageBuffer out = dst;
  const double maxv = max_value(dst.depth());
  const auto dw = static_cast<std::ptrdiff_t>(dst.width());
  const auto dh = static_cast<std::ptrdiff_t>(dst.height());
  const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(x, 0);
  const std::ptrdiff_t y0 = std::max<std::ptrdiff_t>(y, 0);
  const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(x + static_cast<std::ptrdiff_t>(src.width()), dw);
  const std::ptrdiff_t y1 = std::min<std::ptrdiff_t>(y + static_cast<std::ptrdiff_t>(src.height()), dh);
  for (std::ptrdiff_t r = y0; r < y1; ++r) {
    for (std::ptrdiff_t c = x0; c < x1; ++c) {
      const std::size_t si = src.index(static_cast<std::size_t>(c - x), static_cast<std::size_t>(r - y));
      const std::size_t di = dst.index(static_cast<std::size_t>(c), static_cast<std::size_t>(r));
      const double sa_raw = src.get(si + 3);
      if (sa_raw <= 0.0) continue;
      if (sa_raw >= maxv) {
        for (std::size_t k = 0; k < 4; ++k) out.set(di + k, src.get(si + k));
        continue;
      }
      const double sa = sa_raw / maxv;
      const double da = dst.get(di + 3) / maxv;
      const double keep = da * (1.0 - sa);
      const double oa = sa + keep;
      for (std::size_t k = 0; k < 3; ++k) {
        const double prem = src.get(si + k) * sa + dst.get(di + k) * keep;
        out.set(di + k, oa > 0.0 ? prem / oa : 0.0);
      }
      out.set(di + 3, oa * maxv);
    }
  }
  return out;
}

ImageBuffer premultiply(const ImageBuffer& img) {
  if (img.layout() != Layout::RGBA) {
    throw Error(ErrorCode::LayoutMismatch, "premultiply requires RGBA");
  }
  if (img.alpha_mode() == AlphaMode::Premultiplied) return img;
  ImageBuffer out = img;
  out.set_alpha_mode(AlphaMode::Premultiplied);
  const double maxv = max_value(img.depth());
  const std::size_t n = img.width() * img.height();
  for (std::size_t p = 0; p < n; ++p) {
    const double a = img.get(p * 4 + 3) / maxv;
    for (std::size_t c = 0; c < 3; ++c) out.set(p * 4 + c, img.get(p * 4 + c) * a);
  }
  return out;
}

ImageBuffer unpremultiply(const ImageBuffer& img) {
  if (img.layout() != Layout::RGBA) {
    throw Error(ErrorCode::LayoutMismatch, "unpremultiply requires RGBA");
  }
  if (img.alpha_mode() == AlphaMode::Straight) return img;
  ImageBuffer out = img;
  out.set_alpha_mode(AlphaMode::Straight);
  const double maxv = max_value(img.depth());
  const double lsb = alpha_lsb(img.depth());
  const std::size_t n = img.width() * img.height();
  for (std::size_t p = 0; p < n; ++p) {
    const double a = img.get(p * 4 + 3);
    for (std::size_t c = 0; c < 3; ++c) {
      const double v = a <= lsb ? 0.0 : std::min(img.get(p * 4 + c) * maxv / a, maxv);
      out.set(p * 4 + c, v);
    }
  }
  return out;
}

ImageBuffer convert_depth(const ImageBuffer& img, Depth depth) {
  if (img.depth() == depth) return img;
  ImageBuffer out(img.width(), img.height(), img.layout(), depth, img.alpha_mode());
  const double k = max_value(depth) / max_value(img.depth());
  const std::size_t n = img.sample_count();
  img.visit([&](auto s) {
    out.visit([&](auto d) {
      using T = typename decltype(d)::value_type;
      for (std::size_t i = 0; i < n; ++i) d[i] = store_sample<T>(static_cast<double>(s[i]) * k);
    });
  });
  return out;
}

ImageBuffer convert_layout(const ImageBuffer& img, Layout layout) {
  if (img.layout() == layout) return img;
  if (layout == Layout::Luma) return to_luma(img);
  ImageBuffer src = img;
  if (src.alpha_mode() == AlphaMode::Premultiplied) src = unpremultiply(src);
  ImageBuffer out(img.width(), img.height(), layout, img.depth());
  const std::size_t n = img.width() * img.height();
  const std::size_t sc = src.channels();
  const std::size_t dc = out.channels();
  const double maxv = max_value(img.depth());
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t c = 0; c < 3; ++c) {
      out.set(p * dc + c, src.get(p * sc + (sc == 1 ? 0 : c)));
    }
    if (dc == 4) out.set(p * dc + 3, maxv);
  }
  return out;
}

namespace {

template <typename Map>
ImageBuffer permute(const ImageBuffer& img, std::size_t out_w, std::size_t out_h, Map&& map) {
  ImageBuffer out(out_w, out_h, img.layout(), img.depth(), img.alpha_mode());
  const std::size_t ch = img.channels();
  img.visit([&](auto s) {
    using T = typename decltype(s)::value_type;
    auto d = out.samples<T>();
    for (std::size_t y = 0; y < out_h; ++y) {
      for (std::size_t x = 0; x < out_w; ++x) {
        const auto [sx, sy] = map(x, y);
        std::copy_n(s.data() + (sy * img.width() + sx) * ch, ch, d.data() + (y * out_w + x) * ch);
      }
    }
  });
  return out;
}

}  // namespace

ImageBuffer flip_horizontal(const ImageBuffer& img) {
  const std::size_t w = img.width();
  return permute(img, w, img.height(), [w](std::size_t x, std::size_t y) {
    return std::pair{w - 1 - x, y};
  });
}

ImageBuffer flip_vertical(const ImageBuffer& img) {
  const std::size_t h = img.height();
  return permute(img, img.width(), h, [h](std::size_t x, std::size_t y) {
    return std::pair{x, h - 1 - y};
  });
}

ImageBuffer rotate90(const ImageBuffer& img, int quarter_turns) {
  const int k = ((quarter_turns % 4) + 4) % 4;
  const std::size_t w = img.width();
  const std::size_t h = img.height();
  switch (k) {
    case 0: return img;
    case 1:
      return permute(img, h, w, [w](std::size_t x, std::size_t y) {
        return std::pair{w - 1 - y, x};
      });
    case 2:
      return permute(img, w, h, [w, h](std::size_t x, std::size_t y) {
        return std::pair{w - 1 - x, h - 1 - y};
      });
    default:
      return permute(img, h, w, [h](std::size_t x, std::size_t y) {
        return std::pair{y, h - 1 - x};
      });
  }
}

ImageBuffer gaussian_blur(const ImageBuffer& img, double sigma) {
  if (!(sigma > 0.0)) return img;
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;

  const auto w = static_cast<std::ptrdiff_t>(img.width());
  const auto h = static_cast<std::ptrdiff_t>(img.height());
  const auto ch = static_cast<std::ptrdiff_t>(img.channels());
  std::vector<double> src(img.sample_count());
  img.visit([&](auto s) { std::copy(s.begin(), s.end(), src.begin()); });
  std::vector<double> tmp(src.size());
  auto clampi = [](std::ptrdiff_t v, std::ptrdiff_t n) { return std::clamp<std::ptrdiff_t>(v, 0, n - 1); };
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      for (std::ptrdiff_t c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
          acc += k[static_cast<std::size_t>(i + radius)] *
                 src[static_cast<std::size_t>((y * w + clampi(x + i, w)) * ch + c)];
        }
        tmp[static_cast<std::size_t>((y * w + x) * ch + c)] = acc;
      }
    }
  }
  ImageBuffer out(img.info());
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      for (std::ptrdiff_t c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
          acc += k[static_cast<std::size_t>(i + radius)] *
                 tmp[static_cast<std::size_t>((clampi(y + i, h) * w + x) * ch + c)];
        }
        out.set(static_cast<std::size_t>((y * w + x) * ch + c), acc);
      }
    }
  }
  return out;
}

ImageBuffer alpha_channel(const ImageBuffer& img) {
  if (img.layout() != Layout::RGBA) {
    throw Error(ErrorCode::MissingAlphaChannel, "image has no alpha channel");
  }
  ImageBuffer out(img.width(), img.height(), Layout::Luma, img.depth());
  const std::size_t n = img.width() * img.height();
  img.visit([&](auto s) {
    using T = typename decltype(s)::value_type;
    auto d = out.samples<T>();
    for (std::size_t p = 0; p < n; ++p) d[p] = s[p * 4 + 3];
  });
  return out;
}

}  // namespace atelier::imaging
