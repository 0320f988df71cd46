#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "sce/features.hpp"
#include "sce/image.hpp"
#include "sce/render.hpp"
#include "sce/rng.hpp"

namespace sce {

struct SCETest {
  TestSpec spec;
  Rule rule;
  std::vector<FeatureVector> sequence_features;
  std::vector<FeatureVector> choice_features;
  int correct_idx = 0;
  std::vector<Image> sequence_images;
  std::vector<Image> choice_images;
};

inline int monotonic_min(Feature f) { return f == Feature::number ? kNumberMin : 0; }
inline int monotonic_max(Feature f) { return f == Feature::number ? kNumberMax : domain_size(f) - 1; }

// Successor of `value` under `rule`. Total and deterministic on its domain.
inline FeatureValue apply_rule(const Rule& rule, const FeatureValue& value) {
  if (rule.kind == Rule::Kind::monotonic_step) {
    if (!std::holds_alternative<int>(value)) fail(Errc::wrong_feature, "monotonic rule expects an ordered value");
    const int v = std::get<int>(value);
    if (v < monotonic_min(rule.feature) || v > monotonic_max(rule.feature))
      fail(Errc::out_of_range, "value outside feature domain");
    const int next = v + rule.direction;
    if (next < monotonic_min(rule.feature) || next > monotonic_max(rule.feature))
      fail(Errc::out_of_range, "monotonic step exits the domain");
    return next;
  }
  if (!std::holds_alternative<Shape>(value)) fail(Errc::wrong_feature, "alternating rule expects a shape");
  const Shape s = std::get<Shape>(value);
  if (s == rule.shape_a) return rule.shape_b;
  if (s == rule.shape_b) return rule.shape_a;
  fail(Errc::wrong_feature, "shape is not part of the alternating pair");
}

struct GenOptions {
  // Alternation uses triangle<->square unless this picks a random distinct pair.
  bool random_shape_pair = false;
  RenderConfig render;
  bool render_images = true;
};

namespace detail {

// Start values are forced so the rule applies K times plus once for the
// correct choice without leaving the domain: shade/size span all 6 values,
// number starts in {1..4} ascending or {6..9} descending.
inline std::pair<Rule, FeatureValue> sample_rule(const TestSpec& spec, Rng& rng, const GenOptions& opt) {
  const Feature p = spec.predictive;
  if (p == Feature::shape) {
    Shape a = Shape::triangle, b = Shape::square;
    if (opt.random_shape_pair) {
      a = static_cast<Shape>(rng.below(kNumShapes));
      b = static_cast<Shape>(rng.below(kNumShapes - 1));
      if (b >= a) b = static_cast<Shape>(static_cast<int>(b) + 1);
    }
    Rule r = Rule::alternating(a, b);
    const Shape start = rng.coin() ? a : b;
    return {r, FeatureValue{start}};
  }
  const int dir = rng.coin() ? +1 : -1;
  Rule r = Rule::monotonic(p, dir);
  int start;
  if (p == Feature::number) {
    start = dir > 0 ? rng.range(1, 4) : rng.range(6, 9);
  } else {
    start = dir > 0 ? 0 : domain_size(p) - 1;
  }
  return {r, FeatureValue{start}};
}

inline void set_feature(FeatureVector& fv, Feature f, const FeatureValue& v) {
  switch (f) {
    case Feature::number: fv.number = std::get<int>(v); return;
    case Feature::shade: fv.shade_idx = std::get<int>(v); return;
    case Feature::size: fv.size_idx = std::get<int>(v); return;
    case Feature::shape: fv.shape = std::get<Shape>(v); return;
    case Feature::positions: return;  // handled separately
  }
}

inline FeatureValue sample_value(Feature f, Rng& rng) {
  switch (f) {
    case Feature::number: return rng.range(kNumberMin, kNumberMax);
    case Feature::shade: return static_cast<int>(rng.below(kShadeLevels));
    case Feature::size: return static_cast<int>(rng.below(kSizeLevels));
    case Feature::shape: return static_cast<Shape>(rng.below(kNumShapes));
    case Feature::positions: return 0;  // never reached; permutations sampled in place
  }
  return 0;
}

inline std::array<int, kGridCells> sample_permutation(Rng& rng) {
  std::array<int, kGridCells> p{};
  std::iota(p.begin(), p.end(), 0);
  rng.shuffle(p.begin(), p.end());
  return p;
}

}  // namespace detail

// Deterministic test construction from (spec, rng). RNG call order is fixed:
// rule, correct_idx, constants, incorrect choice values, then per-image
// distractors (sequence images first, then choices).
inline SCETest sample_test(const TestSpec& spec, Rng& rng, const GenOptions& opt = {}) {
  spec.validate();
  const Feature p = spec.predictive;

  SCETest test;
  test.spec = spec;

  auto [rule, start] = detail::sample_rule(spec, rng, opt);
  test.rule = rule;
  test.correct_idx = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.n)));

  // Constant features, one draw each in fixed feature order.
  FeatureVector base;
  std::array<int, kGridCells> const_positions{};
  bool positions_constant = !spec.is_distractor(Feature::positions);
  for (int i = 0; i < kNumFeatures; ++i) {
    const Feature f = static_cast<Feature>(i);
    if (f == p || spec.is_distractor(f)) continue;
    if (f == Feature::positions) {
      const_positions = detail::sample_permutation(rng);
    } else {
      detail::set_feature(base, f, detail::sample_value(f, rng));
    }
  }

  // Predictive trajectory: K sequence values plus the correct continuation.
  std::vector<FeatureValue> traj(static_cast<size_t>(spec.K) + 1);
  traj[0] = start;
  for (int j = 1; j <= spec.K; ++j) traj[j] = apply_rule(rule, traj[j - 1]);
  const FeatureValue correct_value = traj[spec.K];

  // Incorrect predictive values: without replacement from domain \ {correct}.
  std::vector<FeatureValue> pool;
  for (int v = 0; v < domain_size(p); ++v) {
    FeatureValue fv = (p == Feature::shape) ? FeatureValue{static_cast<Shape>(v)}
                      : (p == Feature::number) ? FeatureValue{v + kNumberMin}
                                               : FeatureValue{v};
    if (fv != correct_value) pool.push_back(fv);
  }
  if (static_cast<int>(pool.size()) < spec.n - 1)
    fail(Errc::infeasible_spec, "domain cannot supply n-1 distinct incorrect values");
  std::vector<FeatureValue> incorrect;
  for (int i = 0; i < spec.n - 1; ++i) {
    const auto j = rng.below(pool.size());
    incorrect.push_back(pool[j]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
  }

  // Assemble per-image feature vectors; distractors drawn i.i.d. per image.
  auto make_image_features = [&](const FeatureValue& predictive_value) {
    FeatureVector fv = base;
    detail::set_feature(fv, p, predictive_value);
    for (int i = 0; i < kNumFeatures; ++i) {
      const Feature f = static_cast<Feature>(i);
      if (!spec.is_distractor(f)) continue;
      if (f == Feature::positions) {
        fv.positions = detail::sample_permutation(rng);
      } else {
        detail::set_feature(fv, f, detail::sample_value(f, rng));
      }
    }
    if (positions_constant) fv.positions = const_positions;
    return fv;
  };

  for (int j = 0; j < spec.K; ++j) test.sequence_features.push_back(make_image_features(traj[j]));
  int wrong = 0;
  for (int c = 0; c < spec.n; ++c) {
    const FeatureValue v = (c == test.correct_idx) ? correct_value : incorrect[wrong++];
    test.choice_features.push_back(make_image_features(v));
  }

  if (opt.render_images) {
    for (const auto& fv : test.sequence_features) test.sequence_images.push_back(render(fv, opt.render));
    for (const auto& fv : test.choice_features) test.choice_images.push_back(render(fv, opt.render));
  }
  return test;
}

inline SCETest make_test(const TestSpec& spec, const GenOptions& opt = {}) {
  Rng rng(spec.seed);
  return sample_test(spec, rng, opt);
}

// All 2^4 distractor subsets for one predictive feature, ordered by
// (difficulty, alphabetical feature names).
inline std::vector<TestSpec> condition_grid(Feature predictive) {
  if (predictive == Feature::positions) fail(Errc::bad_argument, "positions cannot be predictive");
  std::vector<Feature> others;
  for (int i = 0; i < kNumFeatures; ++i) {
    const Feature f = static_cast<Feature>(i);
    if (f != predictive) others.push_back(f);
  }
  std::vector<TestSpec> specs;
  for (unsigned mask = 0; mask < 16; ++mask) {
    TestSpec s;
    s.predictive = predictive;
    for (int b = 0; b < 4; ++b) {
      if (mask & (1u << b)) s.distractor[static_cast<int>(others[b])] = true;
    }
    specs.push_back(s);
  }
  std::sort(specs.begin(), specs.end(), [](const TestSpec& a, const TestSpec& b) {
    if (a.difficulty() != b.difficulty()) return a.difficulty() < b.difficulty();
    return distractor_string(a) < distractor_string(b);
  });
  return specs;
}

// The full 64-condition grid, predictive features in enum order.
inline std::vector<TestSpec> full_grid() {
  std::vector<TestSpec> all;
  for (Feature p : kPredictableFeatures) {
    auto g = condition_grid(p);
    all.insert(all.end(), g.begin(), g.end());
  }
  return all;
}

}  // namespace sce
