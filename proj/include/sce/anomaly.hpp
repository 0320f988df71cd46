#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sce/frame_io.hpp"
#include "sce/image.hpp"
#include "sce/models.hpp"
#include "sce/nn.hpp"
#include "sce/solver.hpp"
#include "sce/stats.hpp"
#include "sce/threads.hpp"

namespace sce {

// Crop the top rows (timestamp overlay region), convert to luma, and
// area-average down to model resolution.
inline Image preprocess_frame(const FrameBuffer& f, int crop_top = 30, int out_hw = 64) {
  if (f.width <= 0 || f.height - crop_top <= 0)
    fail(Errc::too_small, "frame too small for crop_top=" + std::to_string(crop_top));
  const int sh = f.height - crop_top;
  const int sw = f.width;

  // Luma plane of the cropped region.
  std::vector<double> luma(static_cast<size_t>(sh) * sw);
  for (int y = 0; y < sh; ++y) {
    for (int x = 0; x < sw; ++x) {
      double v;
      if (f.channels >= 3) {
        v = 0.299 * f.at(x, y + crop_top, 0) + 0.587 * f.at(x, y + crop_top, 1) +
            0.114 * f.at(x, y + crop_top, 2);
      } else {
        v = f.at(x, y + crop_top, 0);
      }
      luma[static_cast<size_t>(y) * sw + x] = v;
    }
  }

  // Exact box average over the source rectangle of each target pixel,
  // with fractional coverage at the edges.
  Image img(out_hw, out_hw);
  const double fx = static_cast<double>(sw) / out_hw;
  const double fy = static_cast<double>(sh) / out_hw;
  for (int ty = 0; ty < out_hw; ++ty) {
    const double y0 = ty * fy, y1 = (ty + 1) * fy;
    const int iy0 = static_cast<int>(std::floor(y0));
    const int iy1 = std::min(sh - 1, static_cast<int>(std::ceil(y1)) - 1);
    for (int tx = 0; tx < out_hw; ++tx) {
      const double x0 = tx * fx, x1 = (tx + 1) * fx;
      const int ix0 = static_cast<int>(std::floor(x0));
      const int ix1 = std::min(sw - 1, static_cast<int>(std::ceil(x1)) - 1);
      double acc = 0.0, area = 0.0;
      for (int sy = iy0; sy <= iy1; ++sy) {
        const double wy = std::min<double>(sy + 1, y1) - std::max<double>(sy, y0);
        if (wy <= 0.0) continue;
        for (int sx = ix0; sx <= ix1; ++sx) {
          const double wx = std::min<double>(sx + 1, x1) - std::max<double>(sx, x0);
          if (wx <= 0.0) continue;
          acc += wx * wy * luma[static_cast<size_t>(sy) * sw + sx];
          area += wx * wy;
        }
      }
      const double v = acc / area;
      img.at(tx, ty) = static_cast<std::uint8_t>(std::lround(std::min(255.0, std::max(0.0, v))));
    }
  }
  return img;
}

// s_c = (eps_c - <eps_p>) / (std(eps_p) + 1e-12), population std. The mean is
// pairwise-summed so that identical eps values give a numerator of exactly 0.
inline double anomaly_score(std::span<const double> eps_p, double eps_c) {
  if (eps_p.empty()) fail(Errc::bad_argument, "anomaly_score needs at least one pair error");
  const double mean = pairwise_mean(eps_p);
  const double sd = pop_stddev(eps_p);
  return (eps_c - mean) / (sd + 1e-12);
}

// Gaussian kernel smoothing, truncated at ceil(4*sigma), renormalized over the
// in-range taps so the edges keep unit total weight. sigma = 0 is the identity.
inline std::vector<double> gaussian_smooth(std::span<const double> scores, double sigma) {
  if (sigma < 0.0) fail(Errc::bad_argument, "gaussian_smooth needs sigma >= 0");
  std::vector<double> out(scores.begin(), scores.end());
  if (sigma == 0.0 || scores.size() < 2) return out;
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> w(static_cast<size_t>(2 * radius + 1));
  for (int k = -radius; k <= radius; ++k) {
    w[static_cast<size_t>(k + radius)] = std::exp(-0.5 * (k / sigma) * (k / sigma));
  }
  const int n = static_cast<int>(scores.size());
  for (int i = 0; i < n; ++i) {
    double acc = 0.0, norm = 0.0;
    const int lo = std::max(-radius, -i);
    const int hi = std::min(radius, n - 1 - i);
    for (int k = lo; k <= hi; ++k) {
      const double wk = w[static_cast<size_t>(k + radius)];
      acc += wk * scores[static_cast<size_t>(i + k)];
      norm += wk;
    }
    out[static_cast<size_t>(i)] = acc / norm;
  }
  return out;
}

struct AnomalyConfig {
  std::string variant = "mcpc-d1";  // d=1 suffices for scalar anomaly scores
  int window = 5;  // K: frames preceding the candidate
  int runs = 5;
  double sigma = 10.0;
  Negatives negatives = Negatives::all;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct AnomalyRow {
  int frame_idx = 0;  // candidate frame, 0-based in the input order
  std::vector<double> run_scores;
  double mean_score = 0.0;
  double smoothed_score = 0.0;
};

struct AnomalyReport {
  AnomalyConfig config;
  std::vector<std::string> frame_files;  // empty when frames came from memory
  std::vector<AnomalyRow> rows;          // one per candidate frame index K..N-1
};

// Scores each frame c >= K against its K predecessors: a fresh bundle seeded
// from mix(seed, c, r) takes one optimizer step of the variant's loss on
// frames c-K..c-1, then s = z-score of eps_{K,c} against the K-1 consecutive
// pair errors, averaged over runs. Frames must already be preprocessed to the
// encoder resolution.
template <typename T>
AnomalyReport score_video(std::span<const Image> frames, const AnomalyConfig& cfg) {
  const int K = cfg.window;
  if (K < 2) fail(Errc::bad_argument, "anomaly window must be >= 2");
  if (cfg.runs < 1) fail(Errc::bad_argument, "anomaly runs must be >= 1");
  const int n = static_cast<int>(frames.size());
  if (n <= K)
    fail(Errc::insufficient_frames,
         "need more than " + std::to_string(K) + " frames, got " + std::to_string(n));
  const VariantConfig& variant = find_variant(cfg.variant);
  if (variant.loss == LossKind::relation || variant.chance_baseline)
    fail(Errc::bad_argument, "anomaly scoring needs a prediction-based variant");

  AnomalyReport rep;
  rep.config = cfg;
  rep.rows.resize(static_cast<size_t>(n - K));

  parallel_for(rep.rows.size(), cfg.threads, [&](size_t row) {
    const int c = K + static_cast<int>(row);
    AnomalyRow& r = rep.rows[row];
    r.frame_idx = c;
    r.run_scores.resize(static_cast<size_t>(cfg.runs));
    for (int run = 0; run < cfg.runs; ++run) {
      const std::uint64_t seed = seed_mix({cfg.seed, static_cast<std::uint64_t>(c),
                                           static_cast<std::uint64_t>(run)});
      ModelBundle<T> bundle = ModelBundle<T>::init(variant, seed);
      const std::span<const Image> window = frames.subspan(static_cast<size_t>(c - K),
                                                           static_cast<size_t>(K));
      {
        Tape<T> tape;
        ModelRunner<T> runner(tape, bundle, true);
        const auto loss = sequence_loss(runner, window, cfg.negatives);
        tape.backward(loss);
        runner.apply_step(bundle);
      }
      Tape<T> tape;
      ModelRunner<T> runner(tape, bundle, false);
      const EncodedSeq<T> enc = encode_sequence(runner, window);
      std::vector<double> eps_p(static_cast<size_t>(K - 1));
      for (int j = 0; j + 1 < K; ++j) {
        eps_p[static_cast<size_t>(j)] = static_cast<double>(tape.scalar(
            prediction_error(tape, runner.predict(enc.src[static_cast<size_t>(j)]),
                             enc.z[static_cast<size_t>(j + 1)])));
      }
      const auto zc = runner.encode_image(frames[static_cast<size_t>(c)]);
      const double eps_c = static_cast<double>(
          tape.scalar(prediction_error(tape, runner.predict(enc.src.back()), zc)));
      r.run_scores[static_cast<size_t>(run)] = anomaly_score(eps_p, eps_c);
    }
    r.mean_score = pairwise_mean(r.run_scores);
  });

  std::vector<double> means;
  means.reserve(rep.rows.size());
  for (const auto& r : rep.rows) means.push_back(r.mean_score);
  const std::vector<double> sm = gaussian_smooth(means, cfg.sigma);
  for (size_t i = 0; i < rep.rows.size(); ++i) rep.rows[i].smoothed_score = sm[i];
  return rep;
}

}  // namespace sce
