#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sce/image.hpp"
#include "sce/model_config.hpp"
#include "sce/optim.hpp"
#include "sce/rng.hpp"
#include "sce/tensor.hpp"

namespace sce {

template <typename T>
struct ParamTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<T> data;

  bool operator==(const ParamTensor&) const = default;
};

template <typename T>
struct ParamStore {
  std::vector<ParamTensor<T>> tensors;

  // Weights and biases initialized uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)).
  int add(std::string name, std::vector<int> shape, int fan_in, Rng& rng) {
    ParamTensor<T> p;
    p.name = std::move(name);
    p.shape = std::move(shape);
    size_t n = 1;
    for (int d : p.shape) n *= static_cast<size_t>(d);
    p.data.resize(n);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : p.data) v = static_cast<T>(rng.uniform(-bound, bound));
    tensors.push_back(std::move(p));
    return static_cast<int>(tensors.size() - 1);
  }

  size_t count() const { return tensors.size(); }

  size_t total_scalars() const {
    size_t n = 0;
    for (const auto& t : tensors) n += t.data.size();
    return n;
  }

  bool operator==(const ParamStore&) const = default;
};

// Indices of the named layers inside a ParamStore, fixed by architecture.
struct LayerIds {
  std::vector<std::pair<int, int>> enc_convs;  // (w, b) per conv stage
  std::vector<std::pair<int, int>> enc_fcs;    // (w, b); last maps to latent_dim
  int pred_fc1_w = -1, pred_fc1_b = -1, pred_fc2_w = -1, pred_fc2_b = -1;
  int head_fc1_w = -1, head_fc1_b = -1, head_fc2_w = -1, head_fc2_b = -1;
  int rnn_wz = -1, rnn_wc = -1, rnn_b = -1;
  // LSTM gate order i, f, g, o.
  std::array<int, 4> lstm_wz{-1, -1, -1, -1};
  std::array<int, 4> lstm_wh{-1, -1, -1, -1};
  std::array<int, 4> lstm_b{-1, -1, -1, -1};
};

// Geometry of an encoder: conv channel progression and fully connected tail.
// 3x3 stride-2 pad-1 convs halve the spatial size at each stage.
struct EncoderGeometry {
  int input_hw = 64;
  std::vector<int> channels;   // per conv stage output channels
  std::vector<int> fc_hidden;  // hidden widths of extra fc layers before the latent
  int flat = 0;                // flattened conv output length

  static EncoderGeometry make(EncoderKind kind, int input_hw) {
    if (kind == EncoderKind::simple) return custom(input_hw, {8, 16, 32, 32}, {});
    return custom(input_hw, {16, 32, 64, 64, 64}, {128});
  }

  // Arbitrary stack; used by gradient checking, which needs sub-5000-parameter
  // nets that still exercise every layer type.
  static EncoderGeometry custom(int input_hw, std::vector<int> channels,
                                std::vector<int> fc_hidden) {
    EncoderGeometry g;
    g.input_hw = input_hw;
    g.channels = std::move(channels);
    g.fc_hidden = std::move(fc_hidden);
    int hw = input_hw;
    for (size_t i = 0; i < g.channels.size(); ++i) hw = (hw + 2 - 3) / 2 + 1;
    g.flat = g.channels.back() * hw * hw;
    return g;
  }
};

template <typename T>
struct ModelBundle {
  VariantConfig cfg;
  std::uint64_t seed = 0;
  EncoderGeometry geom;
  ParamStore<T> params;
  LayerIds ids;
  OptimizerState<T> opt;

  static ModelBundle init(const VariantConfig& cfg, std::uint64_t seed, int input_hw = 64) {
    return init(cfg, seed, EncoderGeometry::make(cfg.encoder, input_hw));
  }

  static ModelBundle init(const VariantConfig& cfg, std::uint64_t seed,
                          const EncoderGeometry& geom) {
    ModelBundle m;
    m.cfg = cfg;
    m.seed = seed;
    m.geom = geom;
    Rng rng(seed);
    auto& ps = m.params;
    const int d = cfg.latent_dim;

    int cin = 1;
    for (size_t i = 0; i < m.geom.channels.size(); ++i) {
      const int cout = m.geom.channels[i];
      const int fan = cin * 9;
      const std::string tag = "enc.conv" + std::to_string(i + 1);
      const int w = ps.add(tag + ".w", {cout, cin, 3, 3}, fan, rng);
      const int b = ps.add(tag + ".b", {cout}, fan, rng);
      m.ids.enc_convs.push_back({w, b});
      cin = cout;
    }
    int in = m.geom.flat;
    for (size_t i = 0; i < m.geom.fc_hidden.size(); ++i) {
      const int out = m.geom.fc_hidden[i];
      const std::string tag = "enc.fc" + std::to_string(i + 1);
      const int w = ps.add(tag + ".w", {out, in}, in, rng);
      const int b = ps.add(tag + ".b", {out}, in, rng);
      m.ids.enc_fcs.push_back({w, b});
      in = out;
    }
    {
      const std::string tag = "enc.fc" + std::to_string(m.geom.fc_hidden.size() + 1);
      const int w = ps.add(tag + ".w", {d, in}, in, rng);
      const int b = ps.add(tag + ".b", {d}, in, rng);
      m.ids.enc_fcs.push_back({w, b});
    }

    m.ids.pred_fc1_w = ps.add("pred.fc1.w", {32, d}, d, rng);
    m.ids.pred_fc1_b = ps.add("pred.fc1.b", {32}, d, rng);
    m.ids.pred_fc2_w = ps.add("pred.fc2.w", {d, 32}, 32, rng);
    m.ids.pred_fc2_b = ps.add("pred.fc2.b", {d}, 32, rng);

    if (cfg.context == ContextKind::rnn) {
      m.ids.rnn_wz = ps.add("ctx.wz", {d, d}, d, rng);
      m.ids.rnn_wc = ps.add("ctx.wc", {d, d}, d, rng);
      m.ids.rnn_b = ps.add("ctx.b", {d}, d, rng);
    } else if (cfg.context == ContextKind::lstm) {
      static constexpr const char* gates = "ifgo";
      for (int g = 0; g < 4; ++g) {
        const std::string tag = std::string("ctx.") + gates[g];
        m.ids.lstm_wz[g] = ps.add(tag + ".wz", {d, d}, d, rng);
        m.ids.lstm_wh[g] = ps.add(tag + ".wh", {d, d}, d, rng);
        m.ids.lstm_b[g] = ps.add(tag + ".b", {d}, d, rng);
      }
    }

    if (cfg.has_relation_head()) {
      m.ids.head_fc1_w = ps.add("head.fc1.w", {32, 2 * d}, 2 * d, rng);
      m.ids.head_fc1_b = ps.add("head.fc1.b", {32}, 2 * d, rng);
      m.ids.head_fc2_w = ps.add("head.fc2.w", {1, 32}, 32, rng);
      m.ids.head_fc2_b = ps.add("head.fc2.b", {1}, 32, rng);
    }
    return m;
  }
};

// Binds a bundle's parameters into a tape and assembles forward passes.
template <typename T>
class ModelRunner {
 public:
  using Id = typename Tape<T>::Id;

  ModelRunner(Tape<T>& tape, const ModelBundle<T>& bundle, bool requires_grad = true)
      : tape_(tape), bundle_(bundle) {
    pids_.reserve(bundle.params.count());
    for (const auto& p : bundle.params.tensors) {
      pids_.push_back(tape.leaf(p.shape, std::span<const T>(p.data), requires_grad));
    }
  }

  const ModelBundle<T>& bundle() const { return bundle_; }
  Tape<T>& tape() { return tape_; }
  Id pid(int idx) const { return pids_[static_cast<size_t>(idx)]; }

  // Pixels mapped to [-1, 1].
  Id input(const Image& img) const {
    if (img.width != bundle_.geom.input_hw || img.height != bundle_.geom.input_hw)
      fail(Errc::shape_mismatch, "image size does not match encoder input");
    std::vector<T> data(img.pixels.size());
    for (size_t i = 0; i < data.size(); ++i)
      data[i] = static_cast<T>(img.pixels[i]) * (T(2) / T(255)) - T(1);
    return tape_.leaf({1, img.height, img.width}, std::span<const T>(data), false);
  }

  Id encode(Id x) const {
    Id h = x;
    for (const auto& [w, b] : bundle_.ids.enc_convs) {
      h = tape_.relu(tape_.conv2d(h, pid(w), pid(b), 2, 1));
    }
    const auto& fcs = bundle_.ids.enc_fcs;
    for (size_t i = 0; i + 1 < fcs.size(); ++i) {
      h = tape_.relu(tape_.linear(h, pid(fcs[i].first), pid(fcs[i].second)));
    }
    return tape_.linear(h, pid(fcs.back().first), pid(fcs.back().second));
  }

  Id encode_image(const Image& img) const { return encode(input(img)); }

  // T(z): residual keeps z + delta, plain returns the network output alone.
  Id predict(Id z) const {
    Id h = tape_.relu(tape_.linear(z, pid(bundle_.ids.pred_fc1_w), pid(bundle_.ids.pred_fc1_b)));
    Id delta = tape_.linear(h, pid(bundle_.ids.pred_fc2_w), pid(bundle_.ids.pred_fc2_b));
    return bundle_.cfg.predictor == PredictorKind::residual ? tape_.add(z, delta) : delta;
  }

  Id relation(Id za, Id zb) const {
    if (!bundle_.cfg.has_relation_head()) fail(Errc::missing_head, "variant has no relation head");
    const std::array<Id, 2> parts{za, zb};
    Id h = tape_.concat(std::span<const Id>(parts));
    h = tape_.relu(tape_.linear(h, pid(bundle_.ids.head_fc1_w), pid(bundle_.ids.head_fc1_b)));
    return tape_.sigmoid(tape_.linear(h, pid(bundle_.ids.head_fc2_w), pid(bundle_.ids.head_fc2_b)));
  }

  Id zeros(int len) const {
    std::vector<T> z(static_cast<size_t>(len), T(0));
    return tape_.leaf({len}, std::span<const T>(z), false);
  }

  Id rnn_step(Id z, Id c_prev) const {
    const auto& ids = bundle_.ids;
    Id zb = zeros(bundle_.cfg.latent_dim);
    Id a = tape_.linear(z, pid(ids.rnn_wz), pid(ids.rnn_b));
    Id b = tape_.linear(c_prev, pid(ids.rnn_wc), zb);
    return tape_.tanh_(tape_.add(a, b));
  }

  struct LstmState {
    Id h, c;
  };

  LstmState lstm_step(Id z, LstmState s) const {
    const auto& ids = bundle_.ids;
    auto gate = [&](int g) {
      Id zb = zeros(bundle_.cfg.latent_dim);
      Id a = tape_.linear(z, pid(ids.lstm_wz[static_cast<size_t>(g)]), pid(ids.lstm_b[static_cast<size_t>(g)]));
      Id b = tape_.linear(s.h, pid(ids.lstm_wh[static_cast<size_t>(g)]), zb);
      return tape_.add(a, b);
    };
    Id i = tape_.sigmoid(gate(0));
    Id f = tape_.sigmoid(gate(1));
    Id g = tape_.tanh_(gate(2));
    Id o = tape_.sigmoid(gate(3));
    Id c = tape_.add(tape_.mul(f, s.c), tape_.mul(i, g));
    Id h = tape_.mul(o, tape_.tanh_(c));
    return {h, c};
  }

  // Applies one optimizer step from the gradients accumulated on this tape.
  // Must be handed the same bundle the runner was built from.
  void apply_step(ModelBundle<T>& bundle) const {
    if (&bundle != &bundle_) fail(Errc::bad_argument, "apply_step on a different bundle");
    for (size_t i = 0; i < pids_.size(); ++i) {
      const auto& g = tape_.grad(pids_[i]);
      auto& data = bundle.params.tensors[i].data;
      if (g.empty()) continue;  // parameter not touched by the loss
      optimizer_step(bundle.cfg.optim, bundle.opt, i, std::span<T>(data), std::span<const T>(g));
    }
  }

 private:
  Tape<T>& tape_;
  const ModelBundle<T>& bundle_;
  std::vector<Id> pids_;
};

}  // namespace sce
