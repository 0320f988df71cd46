// Rasterization: canvas geometry, shade/size lookup tables, object count and
// placement, supersampling value set, and determinism.

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <set>
#include <vector>

#include "sce/sce.hpp"

using namespace sce;

namespace {

FeatureVector base_fv() {
  FeatureVector fv;
  fv.number = 1;
  fv.shade_idx = 0;
  fv.shape = Shape::circle;
  fv.size_idx = 3;
  fv.positions = {4, 0, 1, 2, 3, 5, 6, 7, 8};  // first object in the center cell
  return fv;
}

// Count of connected components of non-background pixels (4-connectivity).
int component_count(const Image& img, std::uint8_t background) {
  std::vector<char> seen(img.pixels.size(), 0);
  int comps = 0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (img.at(x, y) == background || seen[static_cast<size_t>(y) * img.width + x]) continue;
      ++comps;
      std::vector<std::pair<int, int>> stack{{x, y}};
      seen[static_cast<size_t>(y) * img.width + x] = 1;
      while (!stack.empty()) {
        auto [cx, cy] = stack.back();
        stack.pop_back();
        const int dx[] = {1, -1, 0, 0}, dy[] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          const int nx = cx + dx[k], ny = cy + dy[k];
          if (nx < 0 || ny < 0 || nx >= img.width || ny >= img.height) continue;
          if (img.at(nx, ny) == background) continue;
          if (seen[static_cast<size_t>(ny) * img.width + nx]) continue;
          seen[static_cast<size_t>(ny) * img.width + nx] = 1;
          stack.push_back({nx, ny});
        }
      }
    }
  }
  return comps;
}

int ink_pixels(const Image& img, std::uint8_t background) {
  return static_cast<int>(std::count_if(img.pixels.begin(), img.pixels.end(),
                                        [&](std::uint8_t p) { return p != background; }));
}

}  // namespace

TEST(Render, CanvasSizeAndBackground) {
  const RenderConfig cfg;
  EXPECT_EQ(cfg.width, 64);
  EXPECT_EQ(cfg.height, 64);
  FeatureVector fv = base_fv();
  const Image img = render(fv, cfg);
  EXPECT_EQ(img.width, 64);
  EXPECT_EQ(img.height, 64);
  EXPECT_EQ(img.pixels.size(), 64u * 64u);
  // Corners stay background: the widest object (diameter 16) in a corner cell
  // still fits within its ~21px cell.
  EXPECT_EQ(img.at(0, 0), cfg.background);
  EXPECT_EQ(img.at(63, 63), cfg.background);
}

TEST(Render, ObjectCountMatchesNumber) {
  const RenderConfig cfg;
  for (int n = 1; n <= 9; ++n) {
    FeatureVector fv = base_fv();
    fv.number = n;
    fv.size_idx = 2;  // moderate diameter keeps objects in separate cells
    const Image img = render(fv, cfg);
    EXPECT_EQ(component_count(img, cfg.background), n) << "number " << n;
  }
}

TEST(Render, ShadeLutExactUnderSupersampling) {
  // Fully covered interior pixels average 4 samples of the same shade, and
  // (4*s + 2) / 4 == s in integer math, so the LUT value appears verbatim.
  const RenderConfig cfg;
  ASSERT_EQ(cfg.shade_lut.size(), 6u);
  const std::array<int, 6> expected_lut = {0, 42, 84, 126, 168, 210};
  for (int s = 0; s < 6; ++s) {
    EXPECT_EQ(cfg.shade_lut[static_cast<size_t>(s)], expected_lut[static_cast<size_t>(s)]);
    FeatureVector fv = base_fv();
    fv.shade_idx = s;
    fv.size_idx = 5;
    const Image img = render(fv, cfg);
    // Center of the middle cell is deep inside the object.
    EXPECT_EQ(img.at(32, 32), expected_lut[static_cast<size_t>(s)]);
    // Every non-background pixel lies between the shade and the background:
    // v = (c*s + (4-c)*255 + 2) / 4 for coverage c in 1..4.
    std::set<int> values;
    for (std::uint8_t p : img.pixels)
      if (p != cfg.background) values.insert(p);
    const int sh = expected_lut[static_cast<size_t>(s)];
    for (int v : values) {
      bool ok = false;
      for (int c = 1; c <= 4; ++c)
        if (v == (c * sh + (4 - c) * 255 + 2) / 4) ok = true;
      EXPECT_TRUE(ok) << "value " << v << " not a 2x2 coverage mix of shade " << sh;
    }
    // Anti-aliased edges exist: at least one partial-coverage value.
    EXPECT_GT(values.size(), 1u);
  }
}

TEST(Render, SizeLutDiameterWithinOnePixel) {
  const RenderConfig cfg;
  const std::array<double, 6> lut = {6, 8, 10, 12, 14, 16};
  ASSERT_EQ(cfg.size_lut.size(), 6u);
  std::array<int, 6> ink{};
  for (int s = 0; s < 6; ++s) {
    EXPECT_DOUBLE_EQ(cfg.size_lut[static_cast<size_t>(s)], lut[static_cast<size_t>(s)]);
    FeatureVector fv = base_fv();
    fv.shade_idx = 0;
    fv.size_idx = s;
    const Image img = render(fv, cfg);
    // Horizontal extent of the centered circle along its center row.
    int lo = img.width, hi = -1;
    for (int x = 0; x < img.width; ++x) {
      if (img.at(x, 32) != cfg.background) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
    }
    ASSERT_LE(lo, hi) << "no ink on center row for size " << s;
    const int extent = hi - lo + 1;
    EXPECT_NEAR(extent, lut[static_cast<size_t>(s)], 1.0) << "size " << s;
    ink[static_cast<size_t>(s)] = ink_pixels(img, cfg.background);
  }
  for (int s = 1; s < 6; ++s) EXPECT_GT(ink[static_cast<size_t>(s)], ink[static_cast<size_t>(s - 1)]);
}

TEST(Render, PositionsPlaceObjectsInGridCells) {
  const RenderConfig cfg;
  // One object per corner cell and center; the ink centroid of each component
  // must sit within 2px of the cell center ((cell%3+0.5)*64/3, (cell/3+0.5)*64/3).
  for (int cell = 0; cell < 9; ++cell) {
    FeatureVector fv = base_fv();
    fv.number = 1;
    std::array<int, 9> perm = {0, 1, 2, 3, 4, 5, 6, 7, 8};
    std::swap(perm[0], perm[static_cast<size_t>(cell)]);
    fv.positions = perm;
    const Image img = render(fv, cfg);
    double sx = 0, sy = 0;
    int count = 0;
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        if (img.at(x, y) != cfg.background) {
          sx += x + 0.5;
          sy += y + 0.5;
          ++count;
        }
    ASSERT_GT(count, 0);
    const double cx = (cell % 3 + 0.5) * cfg.width / 3.0;
    const double cy = (cell / 3 + 0.5) * cfg.height / 3.0;
    EXPECT_NEAR(sx / count, cx, 2.0) << "cell " << cell;
    EXPECT_NEAR(sy / count, cy, 2.0) << "cell " << cell;
  }
}

TEST(Render, ShapesAreDistinctAndDeterministic) {
  const RenderConfig cfg;
  std::vector<Image> imgs;
  for (int s = 0; s < kNumShapes; ++s) {
    FeatureVector fv = base_fv();
    fv.shape = static_cast<Shape>(s);
    fv.size_idx = 5;
    imgs.push_back(render(fv, cfg));
    EXPECT_EQ(render(fv, cfg), imgs.back());  // bit-identical re-render
  }
  for (size_t a = 0; a < imgs.size(); ++a)
    for (size_t b = a + 1; b < imgs.size(); ++b)
      EXPECT_NE(imgs[a], imgs[b]) << to_string(static_cast<Shape>(a)) << " vs "
                                  << to_string(static_cast<Shape>(b));
}

TEST(Render, TriangleUpVsSquareProfile) {
  // A triangle (point up) has more ink in its bottom half than its top half;
  // the square is axis-aligned, so its row width is constant while the
  // circle's peaks at the center row.
  const RenderConfig cfg;
  FeatureVector fv = base_fv();
  fv.size_idx = 5;
  fv.shape = Shape::triangle;
  const Image tri = render(fv, cfg);
  int top = 0, bottom = 0;
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 64; ++x)
      if (tri.at(x, y) != cfg.background) ++top;
  for (int y = 32; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      if (tri.at(x, y) != cfg.background) ++bottom;
  EXPECT_GT(bottom, top);

  fv.shape = Shape::square;
  const Image sq = render(fv, cfg);
  auto row_ink = [&](const Image& img, int y) {
    int c = 0;
    for (int x = 0; x < 64; ++x)
      if (img.at(x, y) != cfg.background) ++c;
    return c;
  };
  // Side = 16/sqrt(2) ~ 11.3 px: rows 26..37 carry equal ink, row 38 none.
  EXPECT_GT(row_ink(sq, 32), 0);
  EXPECT_EQ(row_ink(sq, 32), row_ink(sq, 27));
  EXPECT_EQ(row_ink(sq, 38), 0);

  fv.shape = Shape::circle;
  const Image circ = render(fv, cfg);
  EXPECT_GT(row_ink(circ, 27), 0);
  EXPECT_GT(row_ink(circ, 32), row_ink(circ, 27));
}

TEST(Render, TestImagesRenderedForAllNineImages) {
  const SCETest t = make_test(TestSpec::make(Feature::shade, {Feature::positions}, 5));
  ASSERT_EQ(t.sequence_images.size(), 5u);
  ASSERT_EQ(t.choice_images.size(), 4u);
  const RenderConfig cfg;
  for (size_t i = 0; i < t.sequence_images.size(); ++i) {
    EXPECT_EQ(t.sequence_images[i], render(t.sequence_features[i], cfg));
  }
  for (size_t i = 0; i < t.choice_images.size(); ++i) {
    EXPECT_EQ(t.choice_images[i], render(t.choice_features[i], cfg));
  }
}
