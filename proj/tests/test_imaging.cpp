#include <gtest/gtest.h>

#include "atelier/imaging.hpp"
#include "support.hpp"

using namespace atelier;
using namespace atelier::imaging;
using namespace testing_support;

namespace {

double ramp_kernel(double x) { return std::max(0.0, 1.0 - std::abs(x)); }

}  // namespace

TEST(ImageBuffer, RejectsZeroDimensions) {
  try {
    ImageBuffer(0, 4, Layout::RGB, Depth::U8);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroDimension);
  }
}

TEST(ImageBuffer, AlphaModeMustMatchLayout) {
  EXPECT_THROW(ImageBuffer(2, 2, Layout::RGB, Depth::U8, AlphaMode::Straight), Error);
  EXPECT_THROW(ImageBuffer(2, 2, Layout::RGBA, Depth::U8, AlphaMode::None), Error);
  ImageBuffer rgba(3, 2, Layout::RGBA, Depth::U16);
  EXPECT_EQ(rgba.alpha_mode(), AlphaMode::Straight);
  EXPECT_EQ(rgba.sample_count(), 3u * 2u * 4u);
}

TEST(ImageBuffer, StoreRoundsHalfToEvenAndClamps) {
  ImageBuffer img(4, 1, Layout::Luma, Depth::U8);
  img.set(0, 140.5);
  img.set(1, 141.5);
  img.set(2, -3.0);
  img.set(3, 300.0);
  EXPECT_EQ(img.get(0), 140);
  EXPECT_EQ(img.get(1), 142);
  EXPECT_EQ(img.get(2), 0);
  EXPECT_EQ(img.get(3), 255);
}

TEST(ImageBuffer, PremultipliedInvariantIsChecked) {
  ImageBuffer img(1, 1, Layout::RGBA, Depth::U8, AlphaMode::Premultiplied);
  img.set(0, 200);
  img.set(3, 100);
  EXPECT_THROW(check_invariants(img), Error);
  img.set(0, 100);
  EXPECT_NO_THROW(check_invariants(img));
}

TEST(Resample, NearestSameSizeIsBitIdentical) {
  const auto img = random_image(512, 512, Layout::RGB, Depth::U8, 1);
  EXPECT_EQ(resample(img, 512, 512, ResampleFilter::Nearest), img);
}

TEST(Resample, Lanczos4xGeometry) {
  const auto img = random_image(64, 64, Layout::RGB, Depth::U8, 2);
  const auto out = resample(img, 256, 256, ResampleFilter::Lanczos3);
  EXPECT_EQ(out.width(), 256u);
  EXPECT_EQ(out.height(), 256u);
  EXPECT_EQ(out.layout(), Layout::RGB);
}

TEST(Resample, ConstantsAreFixedPoints) {
  for (auto f : {ResampleFilter::Nearest, ResampleFilter::Bilinear, ResampleFilter::Bicubic,
                 ResampleFilter::Lanczos3}) {
    for (auto d : {Depth::U8, Depth::U16}) {
      const double v = d == Depth::U8 ? 131 : 40000;
      const auto img = constant_image(100, 100, Layout::RGB, d, v);
      for (auto [w, h] : {std::pair<std::size_t, std::size_t>{400, 400}, {37, 61}}) {
        const auto out = resample(img, w, h, f);
        for (std::size_t i = 0; i < out.sample_count(); ++i) {
          ASSERT_LE(std::abs(out.get(i) - v), 1.0) << to_string(f);
        }
      }
    }
  }
}

TEST(Resample, MatchesDirectTwoDimensionalOracle) {
  const auto img = random_image(23, 17, Layout::RGB, Depth::F32, 3);
  struct Case {
    ResampleFilter f;
    std::function<double(double)> k;
    double r;
  };
  const std::vector<Case> cases = {{ResampleFilter::Bilinear, ramp_kernel, 1.0},
                                   {ResampleFilter::Bicubic, catmull_rom, 2.0},
                                   {ResampleFilter::Lanczos3, lanczos3, 3.0}};
  for (const auto& c : cases) {
    for (auto [w, h] : {std::pair<std::size_t, std::size_t>{41, 50}, {9, 6}, {23, 34}, {92, 4}}) {
      const auto got = resample(img, w, h, c.f);
      const auto want = direct_resample(img, w, h, c.k, c.r);
      EXPECT_LT(max_abs_diff(got, want), 1e-5) << to_string(c.f) << " " << w << "x" << h;
    }
  }
}

TEST(Resample, NearestPicksCentreSample) {
  const auto img = random_image(40, 30, Layout::Luma, Depth::U8, 4);
  const auto out = resample(img, 10, 12, ResampleFilter::Nearest);
  for (std::size_t y = 0; y < 12; ++y) {
    for (std::size_t x = 0; x < 10; ++x) {
      const auto sx = static_cast<std::size_t>((x + 0.5) * 4.0);
      const auto sy = static_cast<std::size_t>((y + 0.5) * 2.5);
      ASSERT_EQ(out.at(x, y, 0), img.at(sx, sy, 0));
    }
  }
}

TEST(Resample, IntegerDepthWithinOneLsbOfOracle) {
  const auto img = random_image(31, 29, Layout::RGB, Depth::U8, 5);
  const auto got = resample(img, 8, 7, ResampleFilter::Bicubic);
  const auto want = direct_resample(img, 8, 7, catmull_rom, 2.0);
  EXPECT_LE(max_abs_diff(got, want), 1.0);
}

TEST(Resample, RejectsStraightAlphaAndZeroTarget) {
  const auto straight = random_image(8, 8, Layout::RGBA, Depth::U8, 6);
  try {
    resample(straight, 4, 4, ResampleFilter::Bilinear);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AlphaModeViolation);
  }
  const auto rgb = random_image(8, 8, Layout::RGB, Depth::U8, 6);
  try {
    resample(rgb, 0, 4, ResampleFilter::Bilinear);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroDimension);
  }
}

TEST(Resample, PremultipliedOutputKeepsColorBelowAlpha) {
  const auto img = premultiply(random_image(20, 20, Layout::RGBA, Depth::U8, 7));
  const auto out = resample(img, 57, 33, ResampleFilter::Lanczos3);
  EXPECT_NO_THROW(check_invariants(out));
}

TEST(Laplacian, ConstantImageIsZero) {
  const auto lap = laplacian_magnitude(constant_image(9, 7, Layout::RGB, Depth::U8, 77));
  for (std::size_t i = 0; i < lap.sample_count(); ++i) EXPECT_EQ(lap.get(i), 0.0);
}

TEST(Laplacian, SingleWhitePixel) {
  ImageBuffer img(5, 5, Layout::Luma, Depth::U8);
  img.set(img.index(2, 2), 255);
  const auto lap = laplacian_magnitude(img);
  EXPECT_FLOAT_EQ(lap.at(2, 2, 0), 4.0f);
  for (auto [x, y] : {std::pair{2, 1}, {1, 2}, {3, 2}, {2, 3}}) EXPECT_FLOAT_EQ(lap.at(x, y, 0), 1.0f);
  for (auto [x, y] : {std::pair{1, 1}, {3, 1}, {1, 3}, {3, 3}, {0, 0}}) EXPECT_EQ(lap.at(x, y, 0), 0.0f);
}

TEST(Laplacian, VerticalStepTouchesOnlyAdjacentColumns) {
  ImageBuffer img(12, 6, Layout::Luma, Depth::U8);
  for (std::size_t y = 0; y < 6; ++y)
    for (std::size_t x = 6; x < 12; ++x) img.set(img.index(x, y), 200);
  const auto lap = laplacian_magnitude(img);
  for (std::size_t y = 0; y < 6; ++y) {
    for (std::size_t x = 0; x < 12; ++x) {
      if (x == 5 || x == 6) EXPECT_GT(lap.at(x, y, 0), 0.0);
      else EXPECT_EQ(lap.at(x, y, 0), 0.0);
    }
  }
}

TEST(Laplacian, EqualsBruteForceConvolutionExactly) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t w = 1 + seed * 3 % 64, h = 1 + seed * 7 % 64;
    const auto img = random_image(w, h, seed % 2 ? Layout::RGB : Layout::Luma, Depth::U8, seed);
    const auto lap = laplacian_magnitude(img);
    const auto want = brute_laplacian(luma_f32(img), w, h);
    for (std::size_t i = 0; i < want.size(); ++i) ASSERT_EQ(lap.samples<float>()[i], want[i]);
  }
}

TEST(Luma, Rec709Weights) {
  ImageBuffer white(1, 1, Layout::RGB, Depth::U8);
  for (int c = 0; c < 3; ++c) white.set(c, 255);
  EXPECT_EQ(to_luma(white).get(0), 255);
  ImageBuffer green(1, 1, Layout::RGB, Depth::F32);
  green.set(1, 1.0);
  EXPECT_NEAR(to_luma(green).get(0), 0.7152, 1e-7);
  const auto luma = random_image(5, 5, Layout::Luma, Depth::U16, 8);
  EXPECT_EQ(to_luma(luma), luma);
}

TEST(Crop, FullCropAndBounds) {
  const auto img = random_image(30, 20, Layout::RGBA, Depth::U16, 9);
  EXPECT_EQ(crop(img, 0, 0, 30, 20), img);
  try {
    crop(img, 1, 0, 30, 20);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfBounds);
  }
  const auto part = crop(img, 5, 6, 7, 8);
  EXPECT_EQ(part.at(0, 0, 2), img.at(5, 6, 2));
  EXPECT_EQ(part.at(6, 7, 3), img.at(11, 13, 3));
}

TEST(Crop, PasteThenCropIsIdentityOnFootprint) {
  auto dst = random_image(40, 40, Layout::RGB, Depth::U8, 10);
  const auto src = random_image(9, 11, Layout::RGB, Depth::U8, 11);
  paste(dst, src, 13, 17);
  EXPECT_EQ(crop(dst, 13, 17, 9, 11), src);
}

TEST(Composite, TransparentSourceLeavesDestination) {
  const auto dst = random_image(16, 16, Layout::RGBA, Depth::U8, 12);
  auto src = random_image(8, 8, Layout::RGBA, Depth::U8, 13);
  for (std::size_t p = 0; p < 64; ++p) src.set(p * 4 + 3, 0);
  EXPECT_EQ(composite_over(dst, src, 4, 4), dst);
}

TEST(Composite, OpaqueSourceReplacesFootprint) {
  const auto dst = random_image(16, 16, Layout::RGBA, Depth::U8, 14);
  auto src = random_image(8, 8, Layout::RGBA, Depth::U8, 15);
  for (std::size_t p = 0; p < 64; ++p) src.set(p * 4 + 3, 255);
  const auto out = composite_over(dst, src, 6, -2);
  for (std::size_t y = 0; y < 16; ++y) {
    for (std::size_t x = 0; x < 16; ++x) {
      const bool inside = x >= 6 && x < 14 && y < 6;
      for (std::size_t c = 0; c < 4; ++c) {
        const double want = inside ? src.at(x - 6, y + 2, c) : dst.at(x, y, c);
        ASSERT_EQ(out.at(x, y, c), want);
      }
    }
  }
}

TEST(Composite, HalfAlphaOverOpaqueIsAverage) {
  const auto dst_rgb = random_image(10, 10, Layout::RGB, Depth::U8, 16);
  const auto dst = convert_layout(dst_rgb, Layout::RGBA);
  auto src = random_image(10, 10, Layout::RGBA, Depth::U8, 17);
  for (std::size_t p = 0; p < 100; ++p) src.set(p * 4 + 3, 127.5);  // stores 128
  const auto out = composite_over(dst, src, 0, 0);
  for (std::size_t p = 0; p < 100; ++p) {
    const double a = src.get(p * 4 + 3) / 255.0;
    for (std::size_t c = 0; c < 3; ++c) {
      const double want = a * src.get(p * 4 + c) + (1 - a) * dst.get(p * 4 + c);
      ASSERT_LE(std::abs(out.get(p * 4 + c) - want), 1.0);
    }
    ASSERT_EQ(out.get(p * 4 + 3), 255);
  }
}

TEST(Composite, LayoutMismatchRejected) {
  const auto dst = random_image(4, 4, Layout::RGB, Depth::U8, 18);
  const auto src = random_image(4, 4, Layout::RGBA, Depth::U8, 19);
  try {
    composite_over(dst, src, 0, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LayoutMismatch);
  }
}

TEST(Composite, AssociativeWithinOneLsbOnFloatStacks) {
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto a = random_image(16, 16, Layout::RGBA, Depth::F32, 100 + seed);
    const auto b = random_image(16, 16, Layout::RGBA, Depth::F32, 20000 + seed);
    const auto c = random_image(16, 16, Layout::RGBA, Depth::F32, 30000 + seed);
    const auto left = composite_over(composite_over(a, b, 0, 0), c, 0, 0);
    const auto right = composite_over(a, composite_over(b, c, 0, 0), 0, 0);
    worst = std::max(worst, max_abs_diff(left, right));
  }
  EXPECT_LE(worst, 1.0 / 255.0);
}

// Stored 8-bit intermediates add one rounding per fold; the stacks differ by
// at most 1 LSB except for a rare 2 LSB case.
TEST(Composite, AssociativeOnByteStacks) {
  std::size_t over_one = 0, total = 0;
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    const auto a = random_image(16, 16, Layout::RGBA, Depth::U8, 100 + seed);
    const auto b = random_image(16, 16, Layout::RGBA, Depth::U8, 20000 + seed);
    const auto c = random_image(16, 16, Layout::RGBA, Depth::U8, 30000 + seed);
    const auto left = composite_over(composite_over(a, b, 0, 0), c, 0, 0);
    const auto right = composite_over(a, composite_over(b, c, 0, 0), 0, 0);
    for (std::size_t i = 0; i < left.sample_count(); ++i) {
      const double d = std::abs(left.get(i) - right.get(i));
      worst = std::max(worst, d);
      over_one += d > 1;
      ++total;
    }
  }
  EXPECT_LE(worst, 2.0);
  EXPECT_LE(static_cast<double>(over_one) / static_cast<double>(total), 1e-4);
}

TEST(Flip, InvolutionsAndRotationCycle) {
  const auto img = random_image(13, 7, Layout::RGBA, Depth::U8, 20);
  EXPECT_EQ(flip_horizontal(flip_horizontal(img)), img);
  EXPECT_EQ(flip_vertical(flip_vertical(img)), img);
  EXPECT_EQ(rotate90(img, 4), img);
  const auto r = rotate90(img, 1);
  EXPECT_EQ(r.width(), 7u);
  EXPECT_EQ(r.height(), 13u);
  EXPECT_EQ(rotate90(rotate90(img, 1), 3), img);
  EXPECT_EQ(rotate90(img, 2), flip_vertical(flip_horizontal(img)));
}

TEST(Premultiply, RoundTripOpaqueIsExact) {
  auto img = random_image(10, 10, Layout::RGBA, Depth::U8, 21);
  for (std::size_t p = 0; p < 100; ++p) img.set(p * 4 + 3, 255);
  EXPECT_EQ(unpremultiply(premultiply(img)), img);
}

TEST(Premultiply, TinyAlphaUnpremultipliesToBlack) {
  ImageBuffer img(1, 1, Layout::RGBA, Depth::U8, AlphaMode::Premultiplied);
  img.set(0, 1);
  img.set(3, 1);
  const auto out = unpremultiply(img);
  EXPECT_EQ(out.get(0), 0);
  EXPECT_EQ(out.get(3), 1);
}

TEST(ConvertDepth, U8ToU16AndBack) {
  const auto img = random_image(9, 9, Layout::RGB, Depth::U8, 22);
  EXPECT_EQ(convert_depth(convert_depth(img, Depth::U16), Depth::U8), img);
  EXPECT_EQ(convert_depth(convert_depth(img, Depth::F32), Depth::U8), img);
}

TEST(GaussianBlur, PreservesConstantsAndZeroSigmaCopies) {
  const auto c = constant_image(20, 20, Layout::RGB, Depth::U8, 99);
  EXPECT_EQ(gaussian_blur(c, 2.5), c);
  const auto img = random_image(20, 20, Layout::RGB, Depth::U8, 23);
  EXPECT_EQ(gaussian_blur(img, 0.0), img);
}
