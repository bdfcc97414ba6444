#pragma once

// Test-side oracles. These are written independently of the library code
// they check: direct 2-D evaluation instead of separable passes, brute-force
// loops instead of prefix sums.

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "atelier/codec.hpp"
#include "atelier/image.hpp"
#include "atelier/imaging.hpp"

namespace testing_support {

using atelier::AlphaMode;
using atelier::Depth;
using atelier::ImageBuffer;
using atelier::Layout;

inline ImageBuffer random_image(std::size_t w, std::size_t h, Layout layout, Depth depth,
                                std::uint64_t seed, AlphaMode mode = AlphaMode::Straight) {
  ImageBuffer img = layout == Layout::RGBA ? ImageBuffer(w, h, layout, depth, mode)
                                           : ImageBuffer(w, h, layout, depth);
  std::mt19937_64 gen(seed);
  const double maxv = atelier::max_value(depth);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < img.sample_count(); ++i) {
    double v = u(gen) * maxv;
    if (depth != Depth::F32) v = std::floor(v + 0.5);
    img.set(i, v);
  }
  return img;
}

inline ImageBuffer constant_image(std::size_t w, std::size_t h, Layout layout, Depth depth,
                                  double value) {
  ImageBuffer img = layout == Layout::RGBA ? ImageBuffer(w, h, layout, depth, AlphaMode::Straight)
                                           : ImageBuffer(w, h, layout, depth);
  for (std::size_t i = 0; i < img.sample_count(); ++i) img.set(i, value);
  return img;
}

inline double max_abs_diff(const ImageBuffer& a, const ImageBuffer& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.sample_count(); ++i) m = std::max(m, std::abs(a.get(i) - b.get(i)));
  return m;
}

inline double mean_abs_diff(const ImageBuffer& a, const ImageBuffer& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.sample_count(); ++i) s += std::abs(a.get(i) - b.get(i));
  return s / static_cast<double>(a.sample_count());
}

/// Catmull-Rom cubic, written from the textbook piecewise form.
inline double catmull_rom(double x) {
  x = std::abs(x);
  if (x < 1) return 1.5 * x * x * x - 2.5 * x * x + 1.0;
  if (x < 2) return -0.5 * x * x * x + 2.5 * x * x - 4.0 * x + 2.0;
  return 0.0;
}

inline double lanczos3(double x) {
  x = std::abs(x);
  if (x < 1e-12) return 1.0;
  if (x >= 3) return 0.0;
  const double px = std::numbers::pi * x;
  return 3.0 * std::sin(px) * std::sin(px / 3.0) / (px * px);
}

/// Direct 2-D resample: for each output pixel, sum kernel(dx)*kernel(dy)
/// over every source pixel in the (stretched) support, with replicate edges,
/// normalizing by the weight total.
inline ImageBuffer direct_resample(const ImageBuffer& img, std::size_t ow, std::size_t oh,
                                   const std::function<double(double)>& kernel, double radius) {
  ImageBuffer out = img.layout() == Layout::RGBA
                        ? ImageBuffer(ow, oh, img.layout(), img.depth(), img.alpha_mode())
                        : ImageBuffer(ow, oh, img.layout(), img.depth());
  const std::size_t ch = img.channels();
  const double sx = static_cast<double>(img.width()) / static_cast<double>(ow);
  const double sy = static_cast<double>(img.height()) / static_cast<double>(oh);
  const double fx = std::max(1.0, sx), fy = std::max(1.0, sy);
  auto clampi = [](long v, long n) { return std::clamp(v, 0L, n - 1); };
  std::vector<double> acc(ch);
  for (std::size_t oy = 0; oy < oh; ++oy) {
    const double cy = (static_cast<double>(oy) + 0.5) * sy - 0.5;
    const long y0 = static_cast<long>(std::floor(cy - radius * fy)) - 1;
    const long y1 = static_cast<long>(std::ceil(cy + radius * fy)) + 1;
    for (std::size_t ox = 0; ox < ow; ++ox) {
      const double cx = (static_cast<double>(ox) + 0.5) * sx - 0.5;
      const long x0 = static_cast<long>(std::floor(cx - radius * fx)) - 1;
      const long x1 = static_cast<long>(std::ceil(cx + radius * fx)) + 1;
      std::fill(acc.begin(), acc.end(), 0.0);
      double wsum = 0;
      for (long y = y0; y <= y1; ++y) {
        const double wy = kernel((static_cast<double>(y) - cy) / fy);
        if (wy == 0) continue;
        for (long x = x0; x <= x1; ++x) {
          const double wx = kernel((static_cast<double>(x) - cx) / fx);
          if (wx == 0) continue;
          const double w = wx * wy;
          wsum += w;
          const auto sxi = static_cast<std::size_t>(clampi(x, static_cast<long>(img.width())));
          const auto syi = static_cast<std::size_t>(clampi(y, static_cast<long>(img.height())));
          for (std::size_t c = 0; c < ch; ++c) acc[c] += w * img.at(sxi, syi, c);
        }
      }
      for (std::size_t c = 0; c < ch; ++c) out.set(out.index(ox, oy, c), acc[c] / wsum);
    }
  }
  return out;
}

/// 3x3 [0,1,0;1,-4,1;0,1,0] on a normalized luma raster with replicate
/// edges, by explicit neighbour lookup in F32, taps summed in raster order.
inline std::vector<float> brute_laplacian(const std::vector<float>& luma, std::size_t w,
                                          std::size_t h) {
  std::vector<float> out(w * h);
  auto at = [&](long x, long y) {
    x = std::clamp(x, 0L, static_cast<long>(w) - 1);
    y = std::clamp(y, 0L, static_cast<long>(h) - 1);
    return luma[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
  };
  for (long y = 0; y < static_cast<long>(h); ++y) {
    for (long x = 0; x < static_cast<long>(w); ++x) {
      float v = at(x, y - 1);
      v += at(x - 1, y);
      v += -4.0f * at(x, y);
      v += at(x + 1, y);
      v += at(x, y + 1);
      out[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)] = std::fabs(v);
    }
  }
  return out;
}

/// Upper critical value of the chi-square distribution.
inline double chi_square_critical(double dof, double alpha) {
  boost::math::chi_squared dist(dof);
  return boost::math::quantile(boost::math::complement(dist, alpha));
}

inline double chi_square_stat(const std::vector<double>& observed, const std::vector<double>& expected) {
  double s = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double d = observed[i] - expected[i];
    s += d * d / expected[i];
  }
  return s;
}

/// Sprite-like RGBA fixture: transparent background, a random-colored
/// ellipse with a soft edge, and sparse semi-transparent specks.
inline ImageBuffer sprite(std::size_t w, std::size_t h, std::uint64_t seed, Depth depth = Depth::U8) {
  ImageBuffer img(w, h, Layout::RGBA, depth, AlphaMode::Straight);
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double maxv = atelier::max_value(depth);
  const double cx = w * (0.3 + 0.4 * u(gen)), cy = h * (0.3 + 0.4 * u(gen));
  const double rx = w * (0.15 + 0.2 * u(gen)), ry = h * (0.15 + 0.2 * u(gen));
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
      const double r = std::sqrt(dx * dx + dy * dy);
      double a = std::clamp((1.2 - r) / 0.4, 0.0, 1.0);
      if (a == 0.0 && u(gen) < 0.01) a = u(gen);
      const auto q = [&](double v) { return depth == Depth::F32 ? v * maxv : std::floor(v * maxv + 0.5); };
      for (std::size_t c = 0; c < 3; ++c) img.set(img.index(x, y, c), a > 0 ? q(u(gen)) : 0.0);
      img.set(img.index(x, y, 3), q(a));
    }
  }
  return img;
}

/// Source position (index space, centres at integers) of output pixel
/// (x, y) for a rotate-by-deg, scale-by-s about the centre of an in_w x in_h
/// image onto an out_w x out_h canvas. Inverts out = s R (in - c_in) + c_out.
inline std::pair<double, double> inverse_affine(double x, double y, std::size_t in_w, std::size_t in_h,
                                                std::size_t out_w, std::size_t out_h, double deg,
                                                double s) {
  const double t = deg * std::numbers::pi / 180.0;
  const double px = x + 0.5 - out_w / 2.0, py = y + 0.5 - out_h / 2.0;
  // R(t)^-1 = R(-t) = [cos sin; -sin cos]
  const double qx = (std::cos(t) * px + std::sin(t) * py) / s;
  const double qy = (-std::sin(t) * px + std::cos(t) * py) / s;
  return {qx + in_w / 2.0 - 0.5, qy + in_h / 2.0 - 0.5};
}

/// Counts output pixels with nonzero alpha whose bilinear support (source
/// pixels strictly closer than 1 in both axes) holds no nonzero alpha.
inline std::size_t alpha_from_nothing(const ImageBuffer& in, const ImageBuffer& out, double deg, double s) {
  std::size_t bad = 0;
  for (std::size_t y = 0; y < out.height(); ++y) {
    for (std::size_t x = 0; x < out.width(); ++x) {
      if (out.at(x, y, 3) <= 0) continue;
      const auto [u, v] = inverse_affine(x, y, in.width(), in.height(), out.width(), out.height(), deg, s);
      bool found = false;
      for (long yy = static_cast<long>(std::floor(v)) - 1; yy <= static_cast<long>(std::ceil(v)) + 1; ++yy) {
        for (long xx = static_cast<long>(std::floor(u)) - 1; xx <= static_cast<long>(std::ceil(u)) + 1; ++xx) {
          if (xx < 0 || yy < 0 || xx >= static_cast<long>(in.width()) || yy >= static_cast<long>(in.height())) continue;
          if (std::abs(xx - u) >= 1.0 + 1e-9 || std::abs(yy - v) >= 1.0 + 1e-9) continue;
          if (in.at(static_cast<std::size_t>(xx), static_cast<std::size_t>(yy), 3) > 0) found = true;
        }
      }
      bad += !found;
    }
  }
  return bad;
}

/// Writes `<root>/<rel>.png` plus `<root>/<rel>.txt` with the given caption.
inline void write_captioned(const std::filesystem::path& root, const std::string& rel,
                            const ImageBuffer& img, const std::string& caption) {
  const auto png = root / (rel + ".png");
  std::filesystem::create_directories(png.parent_path());
  atelier::write_png(png, img, 1);
  std::ofstream(root / (rel + ".txt"), std::ios::binary) << caption;
}

/// `full/` and `detail/` tree of small captioned images.
inline void write_kind_tree(const std::filesystem::path& root, std::size_t full, std::size_t detail) {
  for (std::size_t i = 0; i < full; ++i) {
    write_captioned(root, "full/f" + std::to_string(1000 + i), random_image(12, 9, Layout::RGB, Depth::U8, i),
                    "scene " + std::to_string(i) + ", ink, wash");
  }
  for (std::size_t i = 0; i < detail; ++i) {
    write_captioned(root, "detail/d" + std::to_string(1000 + i),
                    random_image(8, 8, Layout::RGBA, Depth::U8, 500 + i), "detail " + std::to_string(i));
  }
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("atelier_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_support
