// Frame preprocessing, the z-scored anomaly statistic, Gaussian smoothing,
// and video scoring end to end on synthetic frame sequences.

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "sce/sce.hpp"

using namespace sce;

namespace {

FrameBuffer solid_frame(int w, int h, int channels, std::uint8_t r, std::uint8_t g,
                        std::uint8_t b) {
  FrameBuffer f;
  f.width = w;
  f.height = h;
  f.channels = channels;
  f.data.resize(static_cast<size_t>(w) * h * channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        f.data[(static_cast<size_t>(y) * w + x) * channels + c] = (c == 0 ? r : c == 1 ? g : b);
  return f;
}

FeatureVector scene_features(std::uint64_t layout_seed) {
  Rng rng(layout_seed);
  FeatureVector fv;
  fv.number = 3;
  fv.shape = Shape::circle;
  fv.size_idx = 3;
  std::array<int, 9> perm = {0, 1, 2, 3, 4, 5, 6, 7, 8};
  rng.shuffle(perm.begin(), perm.end());
  fv.positions = perm;
  return fv;
}

// Cyclic shade progression; every frame differs from its neighbors.
std::vector<Image> cycling_video(int n, std::uint64_t layout_seed) {
  FeatureVector fv = scene_features(layout_seed);
  std::vector<Image> frames;
  for (int t = 0; t < n; ++t) {
    fv.shade_idx = t % 6;
    frames.push_back(render(fv));
  }
  return frames;
}

// Static scene A for t < t_star, static scene B (shade shifted) afterwards:
// windows fully inside one scene score exactly 0, so the score must spike
// exactly where the scene changes.
std::vector<Image> two_scene_video(int n, int t_star, std::uint64_t layout_seed) {
  FeatureVector fv = scene_features(layout_seed);
  fv.shade_idx = 1;
  const Image a = render(fv);
  fv.shade_idx = 4;
  const Image b = render(fv);
  std::vector<Image> frames;
  for (int t = 0; t < n; ++t) frames.push_back(t < t_star ? a : b);
  return frames;
}

}  // namespace

TEST(Anomaly, PreprocessLumaCropAndAverage) {
  // 4x(4+crop) RGB frame: rows above crop_top are garbage that must not leak.
  const int crop = 2;
  FrameBuffer f = solid_frame(4, 4 + crop, 3, 200, 100, 50);
  for (int y = 0; y < crop; ++y)
    for (int x = 0; x < 4; ++x)
      for (int c = 0; c < 3; ++c) f.data[(static_cast<size_t>(y) * 4 + x) * 3 + c] = 255;
  const Image img = preprocess_frame(f, crop, 2);
  const double luma = 0.299 * 200 + 0.587 * 100 + 0.114 * 50;
  const auto expect = static_cast<std::uint8_t>(std::lround(luma));
  EXPECT_EQ(img.width, 2);
  EXPECT_EQ(img.height, 2);
  for (std::uint8_t p : img.pixels) EXPECT_EQ(p, expect);

  // Grayscale passthrough at equal size: exact box average of a 2x2 block.
  FrameBuffer g;
  g.width = 2;
  g.height = 2;
  g.channels = 1;
  g.data = {10, 20, 30, 40};
  const Image one = preprocess_frame(g, 0, 1);
  EXPECT_EQ(one.pixels[0], 25);

  // Fractional coverage: 3 source columns onto 2 targets, the middle pixel
  // split half-and-half. Target 0 = (0*1 + 90*0.5)/1.5, target 1 =
  // (90*0.5 + 240*1)/1.5; source height 1 maps onto both target rows whole.
  FrameBuffer h;
  h.width = 3;
  h.height = 1;
  h.channels = 1;
  h.data = {0, 90, 240};
  const Image frac = preprocess_frame(h, 0, 2);
  EXPECT_EQ(frac.pixels[0], 30);
  EXPECT_EQ(frac.pixels[1], 190);
  EXPECT_EQ(frac.pixels[2], 30);  // second row repeats the single source row
  EXPECT_EQ(frac.pixels[3], 190);

  EXPECT_THROW(preprocess_frame(solid_frame(4, 4, 1, 0, 0, 0), 4, 2), Error);
}

TEST(Anomaly, ScoreIsZScoreAgainstWindowErrors) {
  // Hand arithmetic: mean 2.5, population stddev sqrt(1.25).
  const std::vector<double> eps = {1.0, 2.0, 3.0, 4.0};
  const double expect = (5.0 - 2.5) / (std::sqrt(1.25) + 1e-12);
  EXPECT_NEAR(anomaly_score(eps, 5.0), expect, 1e-12);
  EXPECT_NEAR(anomaly_score(eps, 5.0), 2.23607, 1e-5);
  // Identical window errors: numerator cancels exactly, score is exactly 0.
  const std::vector<double> same = {0.7, 0.7, 0.7, 0.7};
  EXPECT_EQ(anomaly_score(same, 0.7), 0.0);
  // Affine invariance: scaling and shifting all errors together is absorbed
  // by the standardization (up to the stddev floor).
  const std::vector<double> scaled = {3.0, 5.0, 7.0, 9.0};  // 2*eps + 1
  EXPECT_NEAR(anomaly_score(scaled, 11.0), anomaly_score(eps, 5.0), 1e-9);
  EXPECT_THROW(anomaly_score(std::span<const double>{}, 1.0), Error);
}

TEST(Anomaly, GaussianSmoothIdentityEdgesAndImpulse) {
  const std::vector<double> xs = {3.0, -1.0, 2.0, 8.0};
  EXPECT_EQ(gaussian_smooth(xs, 0.0), xs);  // sigma 0 is the identity
  // Constant signals are fixed points for any sigma (edge renormalization).
  const std::vector<double> flat(50, 1.25);
  for (double v : gaussian_smooth(flat, 10.0)) EXPECT_NEAR(v, 1.25, 1e-12);
  // Unit impulse at the center of a long signal: the center keeps weight
  // w0 / sum(kernel), computed here directly from the kernel definition.
  std::vector<double> impulse(201, 0.0);
  impulse[100] = 1.0;
  const auto sm = gaussian_smooth(impulse, 10.0);
  double norm = 0.0;
  for (int k = -40; k <= 40; ++k) norm += std::exp(-0.5 * (k / 10.0) * (k / 10.0));
  EXPECT_NEAR(sm[100], 1.0 / norm, 1e-12);
  EXPECT_NEAR(sm[100], 0.03989, 1e-4);
  // Smoothing preserves total mass away from the edges.
  const double mass = std::accumulate(sm.begin() + 45, sm.end() - 45, 0.0);
  EXPECT_NEAR(mass, 1.0, 1e-9);
  EXPECT_THROW(gaussian_smooth(xs, -1.0), Error);
}

TEST(Anomaly, IdenticalFramesScoreExactlyZero) {
  const std::vector<Image> frames(8, Image(64, 64, 128));
  AnomalyConfig cfg;
  cfg.runs = 2;
  const AnomalyReport rep = score_video<float>(frames, cfg);
  ASSERT_EQ(rep.rows.size(), 3u);
  for (const auto& row : rep.rows) {
    for (double s : row.run_scores) EXPECT_EQ(s, 0.0);
    EXPECT_EQ(row.mean_score, 0.0);
    EXPECT_EQ(row.smoothed_score, 0.0);
  }
}

TEST(Anomaly, VideoScoringDeterministicAndThreadInvariant) {
  const std::vector<Image> frames = cycling_video(12, 4);
  AnomalyConfig cfg;
  cfg.runs = 2;
  cfg.sigma = 1.0;
  const AnomalyReport a = score_video<float>(frames, cfg);
  const AnomalyReport b = score_video<float>(frames, cfg);
  AnomalyConfig cfg4 = cfg;
  cfg4.threads = 4;
  const AnomalyReport c = score_video<float>(frames, cfg4);
  ASSERT_EQ(a.rows.size(), 7u);
  for (size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].frame_idx, static_cast<int>(i) + 5);
    EXPECT_EQ(a.rows[i].run_scores, b.rows[i].run_scores);
    EXPECT_EQ(a.rows[i].run_scores, c.rows[i].run_scores);
    EXPECT_EQ(a.rows[i].smoothed_score, c.rows[i].smoothed_score);
  }
  // Different seeds give different runs.
  AnomalyConfig cfg2 = cfg;
  cfg2.seed = 99;
  const AnomalyReport d = score_video<float>(frames, cfg2);
  EXPECT_NE(a.rows[0].run_scores, d.rows[0].run_scores);
}

TEST(Anomaly, SceneChangeSpikesExactlyAtTheBoundary) {
  // Static scene until t*=12, a different static scene afterwards. Windows
  // fully inside one scene have zero variance AND zero deviation, scoring
  // exactly 0; frame 12 scored against an all-A window hits the stddev floor
  // and dwarfs every other row, so the smoothed argmax is exact.
  const std::vector<Image> frames = two_scene_video(24, 12, 21);
  AnomalyConfig cfg;
  cfg.runs = 2;
  cfg.sigma = 1.0;
  cfg.seed = 5;
  const AnomalyReport rep = score_video<float>(frames, cfg);
  int best = 0;
  for (size_t i = 1; i < rep.rows.size(); ++i)
    if (rep.rows[i].smoothed_score > rep.rows[static_cast<size_t>(best)].smoothed_score)
      best = static_cast<int>(i);
  EXPECT_EQ(rep.rows[static_cast<size_t>(best)].frame_idx, 12);
  // Rows strictly before the straddling windows are exactly zero.
  for (const auto& row : rep.rows) {
    if (row.frame_idx < 12) {
      for (double s : row.run_scores) EXPECT_EQ(s, 0.0) << "frame " << row.frame_idx;
    }
  }
  // Far past the boundary (window fully inside scene B) scores return to 0.
  for (double s : rep.rows.back().run_scores) EXPECT_EQ(s, 0.0);
}

TEST(Anomaly, ErrorPaths) {
  const std::vector<Image> few(5, Image(64, 64, 0));
  AnomalyConfig cfg;
  EXPECT_THROW(
      {
        try {
          score_video<float>(few, cfg);
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), Errc::insufficient_frames);
          throw;
        }
      },
      Error);
  const std::vector<Image> enough(8, Image(64, 64, 0));
  AnomalyConfig rn_cfg;
  rn_cfg.variant = "rn";
  EXPECT_THROW(score_video<float>(enough, rn_cfg), Error);
  AnomalyConfig chance_cfg;
  chance_cfg.variant = "chance";
  EXPECT_THROW(score_video<float>(enough, chance_cfg), Error);
  AnomalyConfig bad_window;
  bad_window.window = 1;
  EXPECT_THROW(score_video<float>(enough, bad_window), Error);
}
