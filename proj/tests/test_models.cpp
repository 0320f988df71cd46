// Loss identities with hand-derivable values, context causality, and input
// normalization. Derived expectations are recomputed in this file with plain
// double arithmetic rather than copied as constants.

#include <gtest/gtest.h>

#include <cmath>
#include <span>
#include <vector>

#include "sce/sce.hpp"

using namespace sce;
using TapeD = Tape<double>;
using Id = TapeD::Id;

namespace {

VariantConfig base_cfg(LossKind loss, ContextKind ctx = ContextKind::markov,
                       PredictorKind pred = PredictorKind::residual) {
  VariantConfig c;
  c.id = "test";
  c.latent_dim = 1;
  c.loss = loss;
  c.context = ctx;
  c.predictor = pred;
  return c;
}

// Residual predictor forced to T(z) = z + c: the delta network's output layer
// gets zero weights and bias c.
void force_predictor_offset(ModelBundle<double>& b, double c) {
  auto& w = b.params.tensors[static_cast<size_t>(b.ids.pred_fc2_w)].data;
  auto& bias = b.params.tensors[static_cast<size_t>(b.ids.pred_fc2_b)].data;
  std::fill(w.begin(), w.end(), 0.0);
  std::fill(bias.begin(), bias.end(), c);
}

// Relation head forced to a constant: sigmoid(+-40) is 0/1 to ~1e-18.
void force_relation_constant(ModelBundle<double>& b, bool one) {
  auto& w = b.params.tensors[static_cast<size_t>(b.ids.head_fc2_w)].data;
  auto& bias = b.params.tensors[static_cast<size_t>(b.ids.head_fc2_b)].data;
  std::fill(w.begin(), w.end(), 0.0);
  bias[0] = one ? 40.0 : -40.0;
}

std::vector<Id> leaf_latents(TapeD& t, const std::vector<double>& vals) {
  std::vector<Id> out;
  for (double v : vals) out.push_back(t.leaf({1}, std::vector<double>{v}));
  return out;
}

const EncoderGeometry kTiny = EncoderGeometry::custom(8, {2}, {});

}  // namespace

TEST(Models, PredictionErrorArithmetic) {
  TapeD t;
  const auto a = t.leaf({1}, std::vector<double>{2.0});
  const auto b = t.leaf({1}, std::vector<double>{0.5});
  EXPECT_DOUBLE_EQ(t.scalar(prediction_error(t, a, b)), 2.25);
  EXPECT_DOUBLE_EQ(t.scalar(prediction_error(t, b, a)), 2.25);  // sign-symmetric
  EXPECT_DOUBLE_EQ(t.scalar(prediction_error(t, a, a)), 0.0);
  const auto v = t.leaf({2}, std::vector<double>{1.0, 2.0});
  const auto z = t.leaf({2}, std::vector<double>{0.0, 0.0});
  EXPECT_DOUBLE_EQ(t.scalar(prediction_error(t, v, z)), 5.0);
  const auto w = t.leaf({3}, std::vector<double>{0.0, 0.0, 0.0});
  EXPECT_THROW(prediction_error(t, v, w), Error);
}

TEST(Models, InfonceEqualScoresGiveLogM) {
  auto b = ModelBundle<double>::init(base_cfg(LossKind::infonce), 3, kTiny);
  force_predictor_offset(b, 0.0);  // T(z) = z
  for (size_t m : {2u, 5u, 6u}) {
    TapeD t;
    ModelRunner<double> r(t, b, false);
    const auto z = leaf_latents(t, std::vector<double>(m, 0.25));  // identical latents
    const auto loss = infonce_from_latents(r, std::span<const Id>(z), std::span<const Id>(z),
                                           Negatives::all);
    EXPECT_NEAR(t.scalar(loss), std::log(static_cast<double>(m)), 1e-12) << "m=" << m;
  }
}

TEST(Models, InfonceTwoFrameDerivedValues) {
  auto b = ModelBundle<double>::init(base_cfg(LossKind::infonce), 3, kTiny);
  // eps_{1,1}=0, eps_{1,2}=1: L = 1 + ln(1 + e^-1).
  force_predictor_offset(b, 0.0);
  {
    TapeD t;
    ModelRunner<double> r(t, b, false);
    const auto z = leaf_latents(t, {0.0, 1.0});
    const double L =
        t.scalar(infonce_from_latents(r, std::span<const Id>(z), std::span<const Id>(z), Negatives::all));
    EXPECT_NEAR(L, 1.0 + std::log(1.0 + std::exp(-1.0)), 1e-12);
    EXPECT_NEAR(L, 1.31326, 1e-5);
  }
  // Perfect offset predictor, eps_{1,2}=0, eps_{1,1}=c^2=10: L = log1p(e^-10).
  const double c = std::sqrt(10.0);
  force_predictor_offset(b, c);
  {
    TapeD t;
    ModelRunner<double> r(t, b, false);
    const auto z = leaf_latents(t, {0.0, c});
    const double L =
        t.scalar(infonce_from_latents(r, std::span<const Id>(z), std::span<const Id>(z), Negatives::all));
    EXPECT_NEAR(L, std::log1p(std::exp(-10.0)), 1e-12);
    EXPECT_NEAR(L, 4.54e-5, 1e-7);
  }
  // exclude-self drops eps_{1,1} from the denominator: with T(z)=z and
  // z=[0,1] the j=1 term is eps + ln(e^-eps) = 0.
  force_predictor_offset(b, 0.0);
  {
    TapeD t;
    ModelRunner<double> r(t, b, false);
    const auto z = leaf_latents(t, {0.0, 1.0});
    EXPECT_NEAR(t.scalar(infonce_from_latents(r, std::span<const Id>(z), std::span<const Id>(z),
                                              Negatives::exclude_self)),
                0.0, 1e-12);
  }
}

TEST(Models, NocontrastMeanOfConsecutiveErrors) {
  auto b = ModelBundle<double>::init(base_cfg(LossKind::nocontrast), 3, kTiny);
  force_predictor_offset(b, 1.0);  // T(z) = z + 1
  {
    // eps sequence [1, 3]: z steps of 0 and 1 - sqrt(3) under offset 1.
    TapeD t;
    ModelRunner<double> r(t, b, false);
    const auto z = leaf_latents(t, {0.0, 0.0, 1.0 - std::sqrt(3.0)});
    EXPECT_NEAR(t.scalar(nocontrast_from_latents(r, std::span<const Id>(z), std::span<const Id>(z))),
                2.0, 1e-12);
  }
  {
    // Perfect predictor: consecutive steps of exactly 1.
    TapeD t;
    ModelRunner<double> r(t, b, false);
    const auto z = leaf_latents(t, {0.0, 1.0, 2.0, 3.0});
    EXPECT_NEAR(t.scalar(nocontrast_from_latents(r, std::span<const Id>(z), std::span<const Id>(z))),
                0.0, 1e-12);
  }
  {
    // Nonnegative on arbitrary latents.
    TapeD t;
    ModelRunner<double> r(t, b, false);
    const auto z = leaf_latents(t, {0.3, -0.9, 2.7, 0.1});
    EXPECT_GE(t.scalar(nocontrast_from_latents(r, std::span<const Id>(z), std::span<const Id>(z))),
              0.0);
  }
}

TEST(Models, RelationLossPairCounting) {
  VariantConfig cfg = base_cfg(LossKind::relation);
  cfg.id = "rn";  // relation variants carry the head
  auto b = ModelBundle<double>::init(cfg, 3, kTiny);
  ASSERT_GE(b.ids.head_fc2_b, 0);
  force_relation_constant(b, false);  // g == 0
  {
    TapeD t;
    ModelRunner<double> r(t, b, false);
    const auto z = leaf_latents(t, {0.1, 0.2, 0.3, 0.4, 0.5});
    // 4 positive pairs of 20 score (0-1)^2 each.
    EXPECT_NEAR(t.scalar(relation_from_latents(r, std::span<const Id>(z))), 4.0 / 20.0, 1e-12);
  }
  {
    // m=6: exactly 30 ordered pairs, 5 positives.
    TapeD t;
    ModelRunner<double> r(t, b, false);
    const auto z = leaf_latents(t, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6});
    EXPECT_NEAR(t.scalar(relation_from_latents(r, std::span<const Id>(z))), 5.0 / 30.0, 1e-12);
  }
  force_relation_constant(b, true);  // g == 1
  {
    TapeD t;
    ModelRunner<double> r(t, b, false);
    const auto z = leaf_latents(t, {0.1, 0.2, 0.3, 0.4, 0.5});
    EXPECT_NEAR(t.scalar(relation_from_latents(r, std::span<const Id>(z))), 16.0 / 20.0, 1e-12);
  }
}

TEST(Models, RelationHeadOutputInUnitInterval) {
  VariantConfig cfg = base_cfg(LossKind::relation);
  cfg.id = "rn";
  auto b = ModelBundle<double>::init(cfg, 11, kTiny);
  TapeD t;
  ModelRunner<double> r(t, b, false);
  for (double a : {-3.0, 0.0, 2.5}) {
    for (double z2 : {-1.0, 4.0}) {
      const auto za = t.leaf({1}, std::vector<double>{a});
      const auto zb = t.leaf({1}, std::vector<double>{z2});
      const double g = t.scalar(r.relation(za, zb));
      EXPECT_GT(g, 0.0);
      EXPECT_LT(g, 1.0);
    }
  }
}

TEST(Models, InputNormalizationThroughTrivialEncoder) {
  // 2x2 input, one conv channel with only the center tap set, then fc weight 1:
  // the latent equals the normalized top-left pixel 2*(v/255) - 1.
  const EncoderGeometry g = EncoderGeometry::custom(2, {1}, {});
  auto b = ModelBundle<double>::init(base_cfg(LossKind::infonce), 5, g);
  auto& conv_w = b.params.tensors[static_cast<size_t>(b.ids.enc_convs[0].first)].data;
  auto& conv_b = b.params.tensors[static_cast<size_t>(b.ids.enc_convs[0].second)].data;
  ASSERT_EQ(conv_w.size(), 9u);
  std::fill(conv_w.begin(), conv_w.end(), 0.0);
  conv_w[4] = 1.0;  // center of the 3x3 kernel
  conv_b[0] = 1.0;  // shifts the relu input positive for any pixel
  auto& fc_w = b.params.tensors[static_cast<size_t>(b.ids.enc_fcs.back().first)].data;
  auto& fc_b = b.params.tensors[static_cast<size_t>(b.ids.enc_fcs.back().second)].data;
  ASSERT_EQ(fc_w.size(), 1u);
  fc_w[0] = 1.0;
  fc_b[0] = -1.0;  // undo the conv bias shift
  for (int v : {0, 51, 128, 255}) {
    Image img(2, 2, static_cast<std::uint8_t>(v));
    TapeD t;
    ModelRunner<double> r(t, b, false);
    const auto z = r.encode_image(img);
    EXPECT_EQ(t.shape(z), (std::vector<int>{1}));  // d=1 latents are scalars
    EXPECT_NEAR(t.val(z)[0], 2.0 * (v / 255.0) - 1.0, 1e-12) << "pixel " << v;
  }
}

TEST(Models, IdenticalImagesGiveIdenticalLatents) {
  auto b = ModelBundle<double>::init(base_cfg(LossKind::infonce), 21, kTiny);
  Image img(8, 8);
  Rng rng(9);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  TapeD t;
  ModelRunner<double> r(t, b, false);
  const std::vector<Image> imgs = {img, img};
  const auto e = encode_sequence(r, std::span<const Image>(imgs));
  EXPECT_EQ(t.val(e.z[0]), t.val(e.z[1]));
}

TEST(Models, RnnSingleStepMatchesManualFormula) {
  auto b = ModelBundle<double>::init(base_cfg(LossKind::infonce, ContextKind::rnn), 31, kTiny);
  Image img(8, 8, 77);
  TapeD t;
  ModelRunner<double> r(t, b, false);
  const std::vector<Image> one = {img};
  const auto e = encode_sequence(r, std::span<const Image>(one));
  ASSERT_EQ(e.src.size(), 1u);
  const double z = t.val(e.z[0])[0];
  const double wz = b.params.tensors[static_cast<size_t>(b.ids.rnn_wz)].data[0];
  const double bias = b.params.tensors[static_cast<size_t>(b.ids.rnn_b)].data[0];
  // c_0 = 0, so the W_c term drops out of the first step.
  EXPECT_NEAR(t.val(e.src[0])[0], std::tanh(wz * z + bias), 1e-12);
}

TEST(Models, MarkovEncodingHasNoTemporalLeakage) {
  auto b = ModelBundle<double>::init(base_cfg(LossKind::infonce), 41, kTiny);
  Rng rng(13);
  std::vector<Image> imgs;
  for (int i = 0; i < 3; ++i) {
    Image img(8, 8);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
    imgs.push_back(img);
  }
  std::vector<double> z0, z1;
  {
    TapeD t;
    ModelRunner<double> r(t, b, false);
    const auto e = encode_sequence(r, std::span<const Image>(imgs));
    z0 = t.val(e.z[0]);
    z1 = t.val(e.z[1]);
  }
  std::swap(imgs[1], imgs[2]);  // permute images after position 0
  {
    TapeD t;
    ModelRunner<double> r(t, b, false);
    const auto e = encode_sequence(r, std::span<const Image>(imgs));
    EXPECT_EQ(t.val(e.z[0]), z0);     // unchanged
    EXPECT_NE(t.val(e.z[1]), z1);     // genuinely permuted input
  }
}

TEST(Models, RecurrentContextIsCausal) {
  for (ContextKind ctx : {ContextKind::rnn, ContextKind::lstm}) {
    auto b = ModelBundle<double>::init(base_cfg(LossKind::infonce, ctx), 51, kTiny);
    Rng rng(14);
    std::vector<Image> imgs;
    for (int i = 0; i < 3; ++i) {
      Image img(8, 8);
      for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
      imgs.push_back(img);
    }
    std::vector<std::vector<double>> src_before;
    {
      TapeD t;
      ModelRunner<double> r(t, b, false);
      const auto e = encode_sequence(r, std::span<const Image>(imgs));
      for (auto id : e.src) src_before.push_back(t.val(id));
    }
    // Change only the last image: earlier contexts must be bit-identical.
    for (auto& p : imgs[2].pixels) p = static_cast<std::uint8_t>(255 - p);
    {
      TapeD t;
      ModelRunner<double> r(t, b, false);
      const auto e = encode_sequence(r, std::span<const Image>(imgs));
      EXPECT_EQ(t.val(e.src[0]), src_before[0]);
      EXPECT_EQ(t.val(e.src[1]), src_before[1]);
      EXPECT_NE(t.val(e.src[2]), src_before[2]);
    }
  }
}

TEST(Models, SequenceLossErrorPaths) {
  auto b = ModelBundle<double>::init(base_cfg(LossKind::infonce), 61, kTiny);
  TapeD t;
  ModelRunner<double> r(t, b, false);
  const std::vector<Image> one = {Image(8, 8, 0)};
  EXPECT_THROW(
      {
        try {
          sequence_loss(r, std::span<const Image>(one), Negatives::all);
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), Errc::too_short);
          throw;
        }
      },
      Error);
  // Relation scoring on a bundle built without a head (infonce config).
  auto nb = ModelBundle<double>::init(base_cfg(LossKind::infonce), 62, kTiny);
  ASSERT_LT(nb.ids.head_fc1_w, 0);
  TapeD t2;
  ModelRunner<double> r2(t2, nb, false);
  const auto z = leaf_latents(t2, {0.0, 1.0});
  EXPECT_THROW(
      {
        try {
          relation_from_latents(r2, std::span<const Id>(z));
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), Errc::missing_head);
          throw;
        }
      },
      Error);
  // Wrong image size for the encoder geometry.
  const std::vector<Image> wrong = {Image(4, 4, 0), Image(4, 4, 0)};
  EXPECT_THROW(sequence_loss(r, std::span<const Image>(wrong), Negatives::all), Error);
}
