#pragma once

#include <string>
#include <vector>

#include "sce/errors.hpp"
#include "sce/optim.hpp"

namespace sce {

enum class EncoderKind { simple, deep };
enum class PredictorKind { residual, plain };
enum class ContextKind { markov, rnn, lstm };
enum class LossKind { infonce, nocontrast, relation };

// Which images feed the softmax denominator of the contrastive loss.
enum class Negatives { all, exclude_self };

struct VariantConfig {
  std::string id;
  EncoderKind encoder = EncoderKind::simple;
  int latent_dim = 1;
  PredictorKind predictor = PredictorKind::residual;
  ContextKind context = ContextKind::markov;
  LossKind loss = LossKind::infonce;
  OptimizerConfig optim{};
  bool has_relation_head() const { return loss == LossKind::relation; }
  bool chance_baseline = false;  // diagnostic: scores every choice 0
};

inline const std::vector<VariantConfig>& variant_registry() {
  static const std::vector<VariantConfig> reg = [] {
    std::vector<VariantConfig> v;
    auto mcpc = [](const std::string& id, int d) {
      VariantConfig c;
      c.id = id;
      c.latent_dim = d;
      return c;
    };
    v.push_back(mcpc("mcpc", 1));
    v.push_back(mcpc("mcpc-d1", 1));
    v.push_back(mcpc("mcpc-d10", 10));
    v.push_back(mcpc("mcpc-d100", 100));
    v.push_back(mcpc("mcpc-d1000", 1000));
    {
      VariantConfig c = mcpc("mcpc-nonres", 1);
      c.predictor = PredictorKind::plain;
      v.push_back(c);
    }
    {
      VariantConfig c = mcpc("mcpc-nocontrast", 1);
      c.loss = LossKind::nocontrast;
      v.push_back(c);
    }
    {
      VariantConfig c = mcpc("mcpc-sgd", 1);
      c.optim.kind = OptKind::sgd;
      c.optim.lr = 40.0;
      v.push_back(c);
    }
    {
      VariantConfig c = mcpc("rnn-cpc", 1);
      c.context = ContextKind::rnn;
      v.push_back(c);
    }
    {
      VariantConfig c = mcpc("lstm-cpc", 1);
      c.context = ContextKind::lstm;
      v.push_back(c);
    }
    {
      VariantConfig c = mcpc("rn", 1);
      c.loss = LossKind::relation;
      v.push_back(c);
    }
    {
      VariantConfig c = mcpc("rn-deep", 1);
      c.loss = LossKind::relation;
      c.encoder = EncoderKind::deep;
      c.optim.lr = 4e-6;
      v.push_back(c);
    }
    {
      VariantConfig c = mcpc("chance", 1);
      c.chance_baseline = true;
      v.push_back(c);
    }
    return v;
  }();
  return reg;
}

inline const VariantConfig& find_variant(const std::string& id) {
  for (const auto& v : variant_registry()) {
    if (v.id == id) return v;
  }
  fail(Errc::bad_argument, "unknown model variant '" + id + "'");
}

}  // namespace sce
