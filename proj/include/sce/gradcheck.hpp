#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sce/models.hpp"
#include "sce/nn.hpp"
#include "sce/rng.hpp"

namespace sce {

struct GradCheckResult {
  std::string name;
  int coords = 0;  // parameter coordinates compared
  double max_rel_err = 0.0;
};

// |ad - fd| / max(|ad| + |fd|, 1e-6). The floor keeps near-zero gradients
// (dead relu paths) from dividing FD round-off noise by itself.
inline double grad_rel_err(double ad, double fd) {
  const double denom = std::max(std::abs(ad) + std::abs(fd), 1e-6);
  return std::abs(ad - fd) / denom;
}

// Central-difference check of every parameter coordinate of one model against
// the tape's reverse-mode gradients, in 64-bit. Geometries stay under 5000
// parameters so the suite fits its runtime budget; the seeds used by the
// canonical suite are fixed ones whose preactivations sit clear of relu kinks
// (a central difference straddling a kink is wrong by construction, not a
// gradient bug).
inline GradCheckResult grad_check_bundle(const std::string& name, const VariantConfig& cfg,
                                         const EncoderGeometry& geom, int m_images,
                                         Negatives negatives, std::uint64_t seed) {
  ModelBundle<double> b = ModelBundle<double>::init(cfg, seed, geom);
  Rng rng(seed_mix({seed, 0xF00Dull}));
  std::vector<Image> imgs;
  for (int j = 0; j < m_images; ++j) {
    Image img(geom.input_hw, geom.input_hw);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
    imgs.push_back(img);
  }
  const std::span<const Image> span(imgs);

  std::vector<std::vector<double>> analytic;
  {
    Tape<double> tape;
    ModelRunner<double> r(tape, b, true);
    tape.backward(sequence_loss(r, span, negatives));
    for (size_t i = 0; i < b.params.count(); ++i) analytic.push_back(tape.grad(r.pid(static_cast<int>(i))));
  }

  const auto eval = [&]() {
    Tape<double> tape;
    ModelRunner<double> r(tape, b, false);
    return tape.scalar(sequence_loss(r, span, negatives));
  };

  GradCheckResult res;
  res.name = name;
  const double h = 1e-5;
  for (size_t i = 0; i < b.params.count(); ++i) {
    auto& data = b.params.tensors[i].data;
    for (size_t k = 0; k < data.size(); ++k) {
      const double keep = data[k];
      data[k] = keep + h;
      const double fp = eval();
      data[k] = keep - h;
      const double fm = eval();
      data[k] = keep;
      const double fd = (fp - fm) / (2.0 * h);
      res.max_rel_err = std::max(res.max_rel_err, grad_rel_err(analytic[i][k], fd));
      ++res.coords;
    }
  }
  return res;
}

// One case per layer type and loss family: conv/linear/relu via every encoder,
// tanh via the rnn context, sigmoid via lstm gates and the relation head,
// the two-fc deep-style tail, and all three losses plus both negative sets.
inline std::vector<GradCheckResult> run_gradcheck_suite(std::uint64_t seed = 17) {
  const EncoderGeometry tiny = EncoderGeometry::custom(8, {2, 3}, {});
  const EncoderGeometry tiny_deep = EncoderGeometry::custom(8, {2, 3}, {5});
  const auto cfg = [](LossKind loss, ContextKind ctx, PredictorKind pred) {
    VariantConfig c;
    c.id = "gradcheck";
    c.latent_dim = 2;
    c.loss = loss;
    c.context = ctx;
    c.predictor = pred;
    return c;
  };
  const auto s = [seed](std::uint64_t i) { return seed_mix({seed, i}); };

  std::vector<GradCheckResult> out;
  out.push_back(grad_check_bundle(
      "infonce", cfg(LossKind::infonce, ContextKind::markov, PredictorKind::residual), tiny, 5,
      Negatives::all, s(1)));
  out.push_back(grad_check_bundle(
      "infonce-exself", cfg(LossKind::infonce, ContextKind::markov, PredictorKind::residual), tiny,
      5, Negatives::exclude_self, s(2)));
  out.push_back(grad_check_bundle(
      "infonce-nonres", cfg(LossKind::infonce, ContextKind::markov, PredictorKind::plain), tiny, 5,
      Negatives::all, s(3)));
  out.push_back(grad_check_bundle(
      "infonce-deep-fc", cfg(LossKind::infonce, ContextKind::markov, PredictorKind::residual),
      tiny_deep, 5, Negatives::all, s(4)));
  out.push_back(grad_check_bundle(
      "nocontrast", cfg(LossKind::nocontrast, ContextKind::markov, PredictorKind::residual), tiny,
      5, Negatives::all, s(5)));
  out.push_back(grad_check_bundle(
      "relation", cfg(LossKind::relation, ContextKind::markov, PredictorKind::residual), tiny, 5,
      Negatives::all, s(6)));
  out.push_back(grad_check_bundle(
      "rnn-infonce", cfg(LossKind::infonce, ContextKind::rnn, PredictorKind::residual), tiny, 5,
      Negatives::all, s(7)));
  out.push_back(grad_check_bundle(
      "lstm-infonce", cfg(LossKind::infonce, ContextKind::lstm, PredictorKind::residual), tiny, 5,
      Negatives::all, s(8)));
  return out;
}

}  // namespace sce
