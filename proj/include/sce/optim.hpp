#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sce/errors.hpp"

namespace sce {

enum class OptKind { rmsprop, sgd };

// RMSprop hyperparameters beyond the learning rate follow the common
// framework defaults: alpha 0.99, eps 1e-8, no momentum, no centering.
struct OptimizerConfig {
  OptKind kind = OptKind::rmsprop;
  double lr = 4e-4;
  double alpha = 0.99;
  double eps = 1e-8;
};

// Per-parameter-tensor optimizer state. Zero-initialized on first use; value
// semantics, so copying a model bundle copies (and isolates) its state.
template <typename T>
struct OptimizerState {
  std::vector<std::vector<T>> sq;  // RMSprop running squared-gradient average
};

// In-place update of one parameter tensor.
//   RMSprop: s <- alpha*s + (1-alpha)*g^2; theta <- theta - lr*g/(sqrt(s)+eps)
//   SGD:     theta <- theta - lr*g
template <typename T>
void optimizer_step(const OptimizerConfig& cfg, OptimizerState<T>& state, size_t param_idx,
                    std::span<T> params, std::span<const T> grads) {
  if (params.size() != grads.size())
    fail(Errc::shape_mismatch, "optimizer_step: param/grad size mismatch");
  if (cfg.kind == OptKind::sgd) {
    const T lr = static_cast<T>(cfg.lr);
    for (size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
    return;
  }
  if (state.sq.size() <= param_idx) state.sq.resize(param_idx + 1);
  auto& s = state.sq[param_idx];
  if (s.empty()) s.assign(params.size(), T(0));
  if (s.size() != params.size()) fail(Errc::shape_mismatch, "optimizer_step: state size mismatch");
  const T lr = static_cast<T>(cfg.lr);
  const T alpha = static_cast<T>(cfg.alpha);
  const T eps = static_cast<T>(cfg.eps);
  for (size_t i = 0; i < params.size(); ++i) {
    const T g = grads[i];
    s[i] = alpha * s[i] + (T(1) - alpha) * g * g;
    params[i] -= lr * g / (std::sqrt(s[i]) + eps);
  }
}

}  // namespace sce
