#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>

#include "atelier/codec.hpp"
#include "atelier/stencil.hpp"
#include "support.hpp"

using namespace atelier;
using namespace atelier::stencil;
using namespace testing_support;

namespace {

std::vector<double> alpha_of(const ImageBuffer& img) {
  std::vector<double> a;
  for (std::size_t p = 0; p < img.width() * img.height(); ++p) a.push_back(img.get(p * 4 + 3));
  return a;
}

StencilAsset asset_of(ImageBuffer img, ZRole role) {
  StencilAsset a;
  a.image = std::move(img);
  a.z_role = role;
  return a;
}

ImageBuffer solid(std::size_t w, std::size_t h, double r, double g, double b, double a) {
  ImageBuffer img(w, h, Layout::RGBA, Depth::U8, AlphaMode::Straight);
  for (std::size_t p = 0; p < w * h; ++p) {
    img.set(p * 4, r);
    img.set(p * 4 + 1, g);
    img.set(p * 4 + 2, b);
    img.set(p * 4 + 3, a);
  }
  return img;
}

AugmentSpec random_photometric(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> j(-0.1, 0.1), g(0.0, 12.0);
  AugmentSpec s;
  s.brightness = j(gen);
  s.contrast = j(gen);
  s.grain_sigma = g(gen);
  s.seed = seed;
  return s;
}

}  // namespace

TEST(Taxonomy, ParsesRoleCategoryWeight) {
  const auto t = parse_taxonomy("root/fg/cube/thin/a.png");
  EXPECT_EQ(t.z_role, ZRole::FG);
  EXPECT_EQ(t.category, "cube");
  EXPECT_EQ(t.line_weight, LineWeight::Thin);
  EXPECT_EQ(parse_taxonomy("x/bg-overlay/rain/thick/b.png").z_role, ZRole::BGOverlay);
  EXPECT_EQ(parse_taxonomy("x/MG/rain/Medium/b.png").line_weight, LineWeight::Medium);
  try {
    parse_taxonomy("x/back/rain/thick/b.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownZRole);
  }
  try {
    parse_taxonomy("x/fg/rain/bold/b.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownLineWeight);
  }
}

TEST(AugmentSpec, BoundsInclusiveAndReported) {
  AugmentSpec ok;
  ok.rotation_deg = -15;
  ok.scale_factor = 1.15;
  ok.brightness = 0.1;
  ok.contrast = -0.1;
  EXPECT_NO_THROW(ok.validate());
  AugmentSpec bad;
  bad.rotation_deg = 15.5;
  bad.scale_factor = 0.8;
  bad.grain_sigma = -1;
  try {
    bad.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SpecOutOfBounds);
    const std::string m = e.what();
    EXPECT_NE(m.find("rotation"), std::string::npos);
    EXPECT_NE(m.find("scale"), std::string::npos);
    EXPECT_NE(m.find("grain"), std::string::npos);
  }
}

TEST(AlphaSafe, IdentitySpecIsBitIdentical) {
  const auto img = sprite(33, 21, 1);
  EXPECT_EQ(alpha_safe_transform(img, AugmentSpec{}), img);
}

TEST(AlphaSafe, GrainLeavesAlphaUntouched) {
  const auto img = sprite(40, 40, 2);
  AugmentSpec s;
  s.grain_sigma = 5;
  s.seed = 3;
  const auto out = alpha_safe_transform(img, s);
  EXPECT_EQ(alpha_of(out), alpha_of(img));
  EXPECT_NE(out, img);
}

TEST(AlphaSafe, PhotometricNeverChangesAlpha) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Depth d = seed % 3 == 0 ? Depth::U16 : (seed % 3 == 1 ? Depth::U8 : Depth::F32);
    const auto img = sprite(24 + seed, 17, seed, d);
    const auto out = alpha_safe_transform(img, random_photometric(seed));
    ASSERT_EQ(alpha_of(out), alpha_of(img)) << seed;
  }
}

TEST(AlphaSafe, HflipAlphaIsExactMirror) {
  const auto img = sprite(31, 19, 4);
  AugmentSpec s;
  s.hflip = true;
  const auto out = alpha_safe_transform(img, s);
  ASSERT_EQ(out.width(), img.width());
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x)
      for (std::size_t c = 0; c < 4; ++c)
        ASSERT_EQ(out.at(img.width() - 1 - x, y, c), img.at(x, y, c));
}

TEST(AlphaSafe, PermutationsPreserveAlphaMultiset) {
  for (int k = 0; k < 16; ++k) {
    const auto img = sprite(20 + k, 13, 50 + k);
    AugmentSpec s;
    s.hflip = k & 1;
    s.vflip = k & 2;
    s.quarter_turns = k / 4;
    auto before = alpha_of(img), after = alpha_of(alpha_safe_transform(img, s));
    std::sort(before.begin(), before.end());
    std::sort(after.begin(), after.end());
    ASSERT_EQ(before, after) << k;
  }
}

TEST(AlphaSafe, RotationNeverCreatesAlphaAndNeverClips) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> rot(-15, 15), sc(0.85, 1.15);
  for (int i = 0; i < 40; ++i) {
    const auto img = sprite(30 + i, 45 - i / 2, 100 + i);
    AugmentSpec s;
    s.rotation_deg = rot(gen);
    s.scale_factor = sc(gen);
    const auto out = alpha_safe_transform(img, s);
    ASSERT_EQ(alpha_from_nothing(img, out, s.rotation_deg, s.scale_factor), 0u) << i;
    // Every input pixel centre lands inside the canvas.
    const double t = s.rotation_deg * std::numbers::pi / 180.0;
    for (double cy : {0.5, img.height() - 0.5}) {
      for (double cx : {0.5, img.width() - 0.5}) {
        const double px = cx - img.width() / 2.0, py = cy - img.height() / 2.0;
        const double ox = s.scale_factor * (std::cos(t) * px - std::sin(t) * py) + out.width() / 2.0;
        const double oy = s.scale_factor * (std::sin(t) * px + std::cos(t) * py) + out.height() / 2.0;
        ASSERT_GE(ox, 0.0);
        ASSERT_LE(ox, static_cast<double>(out.width()));
        ASSERT_GE(oy, 0.0);
        ASSERT_LE(oy, static_cast<double>(out.height()));
      }
    }
  }
}

TEST(AlphaSafe, RotationOfOpaqueSolidKeepsColorAndTransparentRgbIsZero) {
  const auto img = solid(20, 20, 200, 40, 90, 255);
  AugmentSpec s;
  s.rotation_deg = 10;
  const auto out = alpha_safe_transform(img, s);
  for (std::size_t p = 0; p < out.width() * out.height(); ++p) {
    const double a = out.get(p * 4 + 3);
    if (a <= 1) {
      ASSERT_EQ(out.get(p * 4), 0.0);
    } else {
      // Premultiplied interpolation of a constant color stays that color.
      ASSERT_NEAR(out.get(p * 4), 200, 1);
      ASSERT_NEAR(out.get(p * 4 + 1), 40, 1);
      ASSERT_NEAR(out.get(p * 4 + 2), 90, 1);
    }
  }
}

TEST(AlphaSafe, RejectsNonRgba) {
  EXPECT_THROW(alpha_safe_transform(random_image(8, 8, Layout::RGB, Depth::U8, 1), AugmentSpec{}), Error);
}

TEST(Composite, SingleAssetAtOriginIsTheAsset) {
  const auto img = sprite(25, 18, 7);
  EXPECT_EQ(composite_assets({{asset_of(img, ZRole::FG), 0, 0, 1.0}}, 25, 18), img);
}

TEST(Composite, OpaqueForegroundWins) {
  const auto fg = solid(4, 4, 10, 20, 30, 255);
  const auto mg = sprite(10, 10, 8);
  const auto bg = solid(10, 10, 250, 250, 250, 128);
  // List order puts FG first; draw order must still put it on top.
  const auto out = composite_assets({{asset_of(fg, ZRole::FG), 3, 3, 1.0},
                                     {asset_of(mg, ZRole::MG), 0, 0, 1.0},
                                     {asset_of(bg, ZRole::BGOverlay), 0, 0, 1.0}},
                                    10, 10);
  for (std::size_t y = 3; y < 7; ++y) {
    for (std::size_t x = 3; x < 7; ++x) {
      EXPECT_EQ(out.at(x, y, 0), 10);
      EXPECT_EQ(out.at(x, y, 3), 255);
    }
  }
}

TEST(Composite, AllTransparentGivesTransparentCanvas) {
  const auto clear = solid(6, 6, 99, 99, 99, 0);
  const auto out = composite_assets({{asset_of(clear, ZRole::MG), 1, 2, 1.0},
                                     {asset_of(clear, ZRole::FG), -3, 4, 1.0}},
                                    12, 9);
  for (std::size_t i = 0; i < out.sample_count(); ++i) ASSERT_EQ(out.get(i), 0.0);
}

TEST(Composite, PermutingWithinRoleIsInvariant) {
  std::vector<Placement> list = {{asset_of(sprite(10, 10, 1), ZRole::MG), 0, 0, 1.0},
                                 {asset_of(sprite(10, 10, 2), ZRole::MG), 12, 0, 1.0},
                                 {asset_of(sprite(10, 10, 3), ZRole::MG), 0, 12, 1.0},
                                 {asset_of(sprite(30, 30, 4), ZRole::BGOverlay), 0, 0, 1.0}};
  const auto ref = composite_assets(list, 30, 30);
  std::vector<Placement> permuted = {list[2], list[3], list[0], list[1]};
  EXPECT_EQ(composite_assets(permuted, 30, 30), ref);
}

TEST(Composite, PairsAndTriplesOfSolids) {
  const auto red = solid(8, 8, 255, 0, 0, 255);
  const auto green = solid(8, 8, 0, 255, 0, 255);
  const auto blue = solid(8, 8, 0, 0, 255, 255);
  const auto pair = composite_assets({{asset_of(red, ZRole::FG), 0, 0, 1.0},
                                      {asset_of(green, ZRole::MG), 4, 0, 1.0}},
                                     12, 8);
  EXPECT_EQ(pair.at(2, 2, 0), 255);
  EXPECT_EQ(pair.at(6, 2, 0), 255);  // FG covers the overlap
  EXPECT_EQ(pair.at(10, 2, 1), 255);
  const auto triple = composite_assets({{asset_of(red, ZRole::FG), 0, 0, 1.0},
                                        {asset_of(green, ZRole::MG), 4, 0, 1.0},
                                        {asset_of(blue, ZRole::BGOverlay), 8, 0, 1.0}},
                                       16, 8);
  EXPECT_EQ(triple.at(10, 1, 1), 255);
  EXPECT_EQ(triple.at(14, 1, 2), 255);
  EXPECT_EQ(triple.at(1, 1, 0), 255);
  EXPECT_EQ(triple.at(15, 7, 3), 255);
}

TEST(Composite, EmptyListRejected) {
  try {
    composite_assets({}, 4, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyAssetList);
  }
}

TEST(Composite, ScaledPlacement) {
  const auto out = composite_assets({{asset_of(solid(10, 10, 50, 60, 70, 255), ZRole::FG), 0, 0, 0.5}}, 10, 10);
  EXPECT_EQ(out.at(2, 2, 0), 50);
  EXPECT_EQ(out.at(2, 2, 3), 255);
  EXPECT_EQ(out.at(7, 7, 3), 0);
}

TEST(ValidateAsset, TaxonomyTreeAndErrors) {
  TempDir dir("stencil");
  const auto p = dir.path() / "fg" / "cube" / "thin";
  std::filesystem::create_directories(p);
  write_png(p / "a.png", sprite(9, 9, 1));
  std::ofstream(p / "a.txt") << "a cube, thin lines\n";
  const auto asset = validate_asset(p / "a.png");
  EXPECT_EQ(asset.z_role, ZRole::FG);
  EXPECT_EQ(asset.line_weight, LineWeight::Thin);
  EXPECT_EQ(asset.category, "cube");
  EXPECT_EQ(asset.caption, "a cube, thin lines");
  ASSERT_TRUE(asset.caption_path.has_value());

  write_png(p / "opaque.png", solid(5, 5, 1, 2, 3, 255));
  EXPECT_NO_THROW(validate_asset(p / "opaque.png"));
  EXPECT_FALSE(validate_asset(p / "opaque.png").caption_path.has_value());

  write_png(p / "rgb.png", random_image(5, 5, Layout::RGB, Depth::U8, 1));
  try {
    validate_asset(p / "rgb.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingAlphaChannel);
  }
  try {
    validate_asset(p / "missing.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnreadableFile);
  }
  const auto q = dir.path() / "sky" / "cube" / "thin";
  std::filesystem::create_directories(q);
  write_png(q / "b.png", sprite(5, 5, 2));
  try {
    validate_asset(q / "b.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownZRole);
  }
}

TEST(ValidateAsset, AlphaSurvivesSave) {
  TempDir dir("stencil_save");
  const auto img = sprite(12, 12, 5, Depth::U16);
  AugmentSpec s;
  s.rotation_deg = 7;
  s.grain_sigma = 2;
  const auto out = alpha_safe_transform(img, s);
  write_png(dir / "o.png", out);
  const auto back = read_png(dir / "o.png");
  EXPECT_EQ(back.layout(), Layout::RGBA);
  EXPECT_EQ(back, out);
}
