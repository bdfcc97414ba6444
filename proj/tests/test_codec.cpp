#include <gtest/gtest.h>

#include "atelier/codec.hpp"
#include "support.hpp"

using namespace atelier;
using namespace testing_support;

TEST(Png, RoundTripIsBitExactForIntegerDepths) {
  std::uint64_t seed = 0;
  for (auto layout : {Layout::Luma, Layout::RGB, Layout::RGBA}) {
    for (auto depth : {Depth::U8, Depth::U16}) {
      const auto img = random_image(37, 21, layout, depth, ++seed);
      EXPECT_EQ(decode_png(encode_png(img)), img);
    }
  }
}

TEST(Png, RowStreamingMatchesWholeFile) {
  TempDir dir("png");
  const auto img = random_image(50, 40, Layout::RGBA, Depth::U16, 7);
  write_png(dir / "a.png", img);
  EXPECT_EQ(read_png_info(dir / "a.png"), img.info());

  PngRowReader reader(dir / "a.png");
  ImageBuffer rows(img.info());
  reader.read_rows(rows, 0, 13);
  reader.read_rows(rows, 13, 27);
  EXPECT_EQ(rows, img);

  {
    PngRowWriter writer(dir / "b.png", img.info());
    writer.write_rows(img, 0, 15);
    writer.write_rows(img, 15, 25);
    writer.finish();
  }
  EXPECT_EQ(read_png(dir / "b.png"), img);
}

TEST(Png, WriterRejectsShortImages) {
  TempDir dir("png");
  const auto img = random_image(8, 8, Layout::RGB, Depth::U8, 8);
  PngRowWriter writer(dir / "c.png", img.info());
  writer.write_rows(img, 0, 4);
  EXPECT_THROW(writer.finish(), Error);
}

TEST(Png, PremultipliedBuffersAreStoredStraight) {
  auto img = random_image(6, 6, Layout::RGBA, Depth::U8, 9);
  for (std::size_t p = 0; p < 36; ++p) img.set(p * 4 + 3, 255);
  auto pre = imaging::premultiply(img);
  const auto back = decode_png(encode_png(pre));
  EXPECT_EQ(back.alpha_mode(), AlphaMode::Straight);
  EXPECT_EQ(back, img);
}

TEST(Png, MissingFileIsIOError) {
  try {
    read_png("/nonexistent/definitely/missing.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IOError);
  }
}

TEST(Png, GarbageIsCodecError) {
  std::vector<std::uint8_t> junk(100, 7);
  try {
    decode_png(junk);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CodecError);
  }
}

TEST(Jpeg, RoundTripKeepsGeometryAndIsCloseAtHighQuality) {
  const auto img = imaging::gaussian_blur(random_image(64, 48, Layout::RGB, Depth::U8, 10), 1.5);
  const auto out = jpeg_roundtrip(img, 100);
  EXPECT_EQ(out.info(), img.info());
  EXPECT_LT(mean_abs_diff(out, img), 1.0);
  const auto low = jpeg_roundtrip(img, 30);
  EXPECT_GT(mean_abs_diff(low, img), mean_abs_diff(out, img));
}

TEST(Jpeg, NonByteDepthsRoundTripThroughU8) {
  const auto img = random_image(16, 16, Layout::Luma, Depth::F32, 11);
  const auto out = jpeg_roundtrip(img, 95);
  EXPECT_EQ(out.depth(), Depth::F32);
  EXPECT_EQ(out.width(), 16u);
}

TEST(Jpeg, DeterministicBytes) {
  const auto img = random_image(32, 32, Layout::RGB, Depth::U8, 12);
  EXPECT_EQ(encode_jpeg(img, 77), encode_jpeg(img, 77));
}
