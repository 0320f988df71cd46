#pragma once

#include <span>
#include <string>
#include <vector>

#include "sce/image.hpp"
#include "sce/model_config.hpp"
#include "sce/nn.hpp"
#include "sce/tensor.hpp"

namespace sce {

// Latents plus the prediction source at each step: src[j] is what T is applied
// to when predicting step j+1. Markov variants predict from z_j itself;
// recurrent variants predict from the context state after consuming z_j.
template <typename T>
struct EncodedSeq {
  std::vector<typename Tape<T>::Id> z;
  std::vector<typename Tape<T>::Id> src;
};

template <typename T>
EncodedSeq<T> encode_sequence(ModelRunner<T>& r, std::span<const Image> images) {
  EncodedSeq<T> e;
  e.z.reserve(images.size());
  for (const Image& img : images) e.z.push_back(r.encode_image(img));
  switch (r.bundle().cfg.context) {
    case ContextKind::markov:
      e.src = e.z;
      break;
    case ContextKind::rnn: {
      auto c = r.zeros(r.bundle().cfg.latent_dim);
      for (auto z : e.z) {
        c = r.rnn_step(z, c);
        e.src.push_back(c);
      }
      break;
    }
    case ContextKind::lstm: {
      typename ModelRunner<T>::LstmState s{r.zeros(r.bundle().cfg.latent_dim),
                                           r.zeros(r.bundle().cfg.latent_dim)};
      for (auto z : e.z) {
        s = r.lstm_step(z, s);
        e.src.push_back(s.h);
      }
      break;
    }
  }
  return e;
}

// eps(pred, z) = ||pred - z||^2, summed over latent dimensions.
template <typename T>
typename Tape<T>::Id prediction_error(Tape<T>& t, typename Tape<T>::Id pred, typename Tape<T>::Id z) {
  return t.sum(t.square(t.sub(pred, z)));
}

// InfoNCE over a sequence of m latents:
//   L = -(1/(m-1)) sum_{j=1}^{m-1} log( exp(-eps_{j,j+1}) / sum_{j'} exp(-eps_{j,j'}) )
// computed as (1/(m-1)) sum_j [ eps_{j,j+1} + logsumexp_{j'}(-eps_{j,j'}) ].
// The j' set covers all m latents, or all but j itself with exclude_self.
template <typename T>
typename Tape<T>::Id infonce_from_latents(ModelRunner<T>& r,
                                          std::span<const typename Tape<T>::Id> z,
                                          std::span<const typename Tape<T>::Id> src,
                                          Negatives negatives) {
  using Id = typename Tape<T>::Id;
  Tape<T>& t = r.tape();
  const size_t m = z.size();
  if (m < 2) fail(Errc::too_short, "sequence loss needs at least 2 frames, got " + std::to_string(m));
  if (src.size() + 1 < m) fail(Errc::too_short, "missing prediction sources");

  Id total = 0;
  bool first = true;
  for (size_t j = 0; j + 1 < m; ++j) {
    const Id pred = r.predict(src[j]);
    std::vector<Id> neg;  // -eps_{j,j'} over the negative set
    neg.reserve(m);
    Id pos = 0;
    for (size_t jp = 0; jp < m; ++jp) {
      if (negatives == Negatives::exclude_self && jp == j) continue;
      const Id eps = prediction_error(t, pred, z[jp]);
      if (jp == j + 1) pos = eps;
      neg.push_back(t.scale(eps, T(-1)));
    }
    const Id lse = t.logsumexp(t.concat(std::span<const Id>(neg)));
    const Id lj = t.add(pos, lse);
    total = first ? lj : t.add(total, lj);
    first = false;
  }
  return t.scale(total, T(1) / T(m - 1));
}

// Mean successor prediction error, no negatives:
//   L = (1/(m-1)) sum_{j=1}^{m-1} eps_{j,j+1}
template <typename T>
typename Tape<T>::Id nocontrast_from_latents(ModelRunner<T>& r,
                                             std::span<const typename Tape<T>::Id> z,
                                             std::span<const typename Tape<T>::Id> src) {
  using Id = typename Tape<T>::Id;
  Tape<T>& t = r.tape();
  const size_t m = z.size();
  if (m < 2) fail(Errc::too_short, "sequence loss needs at least 2 frames, got " + std::to_string(m));
  if (src.size() + 1 < m) fail(Errc::too_short, "missing prediction sources");

  Id total = 0;
  for (size_t j = 0; j + 1 < m; ++j) {
    const Id eps = prediction_error(t, r.predict(src[j]), z[j + 1]);
    total = (j == 0) ? eps : t.add(total, eps);
  }
  return t.scale(total, T(1) / T(m - 1));
}

// Relation loss: g scores every ordered pair (a,b), a != b, against the target
// "b immediately follows a". Squared error, averaged over the m*(m-1) pairs.
template <typename T>
typename Tape<T>::Id relation_from_latents(ModelRunner<T>& r,
                                           std::span<const typename Tape<T>::Id> z) {
  using Id = typename Tape<T>::Id;
  Tape<T>& t = r.tape();
  const size_t m = z.size();
  if (m < 2) fail(Errc::too_short, "sequence loss needs at least 2 frames, got " + std::to_string(m));

  Id total = 0;
  bool first = true;
  size_t pairs = 0;
  for (size_t a = 0; a < m; ++a) {
    for (size_t b = 0; b < m; ++b) {
      if (a == b) continue;
      const Id y = t.scalar_leaf(b == a + 1 ? T(1) : T(0));
      const Id term = t.square(t.sub(r.relation(z[a], z[b]), y));
      total = first ? term : t.add(total, term);
      first = false;
      ++pairs;
    }
  }
  return t.scale(total, T(1) / T(pairs));
}

// Loss of the variant's own kind over already-encoded latents.
template <typename T>
typename Tape<T>::Id sequence_loss_from_latents(ModelRunner<T>& r,
                                                std::span<const typename Tape<T>::Id> z,
                                                std::span<const typename Tape<T>::Id> src,
                                                Negatives negatives) {
  switch (r.bundle().cfg.loss) {
    case LossKind::infonce:
      return infonce_from_latents(r, z, src, negatives);
    case LossKind::nocontrast:
      return nocontrast_from_latents(r, z, src);
    case LossKind::relation:
      return relation_from_latents(r, z);
  }
  fail(Errc::bad_argument, "unknown loss kind");
}

// Full image-level loss: encode, then score.
template <typename T>
typename Tape<T>::Id sequence_loss(ModelRunner<T>& r, std::span<const Image> images,
                                   Negatives negatives) {
  if (images.size() < 2)
    fail(Errc::too_short, "sequence loss needs at least 2 frames, got " + std::to_string(images.size()));
  const EncodedSeq<T> e = encode_sequence(r, images);
  return sequence_loss_from_latents(r, std::span<const typename Tape<T>::Id>(e.z),
                                    std::span<const typename Tape<T>::Id>(e.src), negatives);
}

}  // namespace sce
