#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "sce/errors.hpp"

namespace sce {

// The five image features. `shade` is the gray level (sometimes called color),
// `positions` the placement order of objects on the 3x3 grid.
enum class Feature : int { number = 0, shade = 1, shape = 2, size = 3, positions = 4 };

enum class Shape : int { circle = 0, triangle = 1, square = 2, star = 3, hexagon = 4 };

inline constexpr int kNumFeatures = 5;
inline constexpr int kNumShapes = 5;
inline constexpr int kNumberMin = 1;
inline constexpr int kNumberMax = 9;
inline constexpr int kShadeLevels = 6;
inline constexpr int kSizeLevels = 6;
inline constexpr int kGridCells = 9;

inline constexpr std::array<Feature, 4> kPredictableFeatures = {Feature::number, Feature::shade,
                                                                Feature::shape, Feature::size};

inline const char* to_string(Feature f) {
  switch (f) {
    case Feature::number: return "number";
    case Feature::shade: return "shade";
    case Feature::shape: return "shape";
    case Feature::size: return "size";
    case Feature::positions: return "positions";
  }
  return "?";
}

inline const char* to_string(Shape s) {
  switch (s) {
    case Shape::circle: return "circle";
    case Shape::triangle: return "triangle";
    case Shape::square: return "square";
    case Shape::star: return "star";
    case Shape::hexagon: return "hexagon";
  }
  return "?";
}

// Accepts "color" as an alias for "shade".
inline Feature parse_feature(const std::string& s) {
  if (s == "number") return Feature::number;
  if (s == "shade" || s == "color") return Feature::shade;
  if (s == "shape") return Feature::shape;
  if (s == "size") return Feature::size;
  if (s == "positions") return Feature::positions;
  fail(Errc::bad_argument, "unknown feature '" + s + "'");
}

inline Shape parse_shape(const std::string& s) {
  for (int i = 0; i < kNumShapes; ++i) {
    if (s == to_string(static_cast<Shape>(i))) return static_cast<Shape>(i);
  }
  fail(Errc::bad_argument, "unknown shape '" + s + "'");
}

// Domain cardinality of a feature (9! for positions does not fit an int; the
// generator never needs it, so positions reports 0 here).
inline int domain_size(Feature f) {
  switch (f) {
    case Feature::number: return kNumberMax - kNumberMin + 1;
    case Feature::shade: return kShadeLevels;
    case Feature::shape: return kNumShapes;
    case Feature::size: return kSizeLevels;
    case Feature::positions: return 0;
  }
  return 0;
}

inline bool is_ordered(Feature f) {
  return f == Feature::number || f == Feature::shade || f == Feature::size;
}

// One image's description. The first `number` entries of `positions` are the
// occupied grid cells (row-major 0..8); being a permutation they are distinct.
struct FeatureVector {
  int number = 1;
  int shade_idx = 0;
  Shape shape = Shape::circle;
  int size_idx = 0;
  std::array<int, kGridCells> positions{0, 1, 2, 3, 4, 5, 6, 7, 8};

  void validate() const {
    if (number < kNumberMin || number > kNumberMax) fail(Errc::out_of_range, "number");
    if (shade_idx < 0 || shade_idx >= kShadeLevels) fail(Errc::out_of_range, "shade_idx");
    if (size_idx < 0 || size_idx >= kSizeLevels) fail(Errc::out_of_range, "size_idx");
    std::array<bool, kGridCells> seen{};
    for (int p : positions) {
      if (p < 0 || p >= kGridCells || seen[p]) fail(Errc::out_of_range, "positions not a permutation");
      seen[p] = true;
    }
  }
};

// The deterministic sequence rule: a +/-1 step on an ordered feature, or an
// alternation between two distinct shapes.
struct Rule {
  enum class Kind { monotonic_step, alternating };

  Kind kind = Kind::monotonic_step;
  Feature feature = Feature::size;
  int direction = +1;                // monotonic_step only
  Shape shape_a = Shape::triangle;   // alternating only
  Shape shape_b = Shape::square;

  static Rule monotonic(Feature f, int direction) {
    if (!is_ordered(f)) fail(Errc::wrong_feature, "monotonic rule needs an ordered feature");
    if (direction != 1 && direction != -1) fail(Errc::bad_argument, "direction must be +1 or -1");
    Rule r;
    r.kind = Kind::monotonic_step;
    r.feature = f;
    r.direction = direction;
    return r;
  }

  static Rule alternating(Shape a, Shape b) {
    if (a == b) fail(Errc::bad_argument, "alternating shapes must differ");
    Rule r;
    r.kind = Kind::alternating;
    r.feature = Feature::shape;
    r.shape_a = a;
    r.shape_b = b;
    return r;
  }
};

// Value of a single feature: an integer for number/shade/size (shade and size
// as domain indices), a Shape for shape.
using FeatureValue = std::variant<int, Shape>;

struct TestSpec {
  Feature predictive = Feature::size;
  std::array<bool, kNumFeatures> distractor{};  // indexed by Feature
  int K = 5;
  int n = 4;
  std::uint64_t seed = 0;

  bool is_distractor(Feature f) const { return distractor[static_cast<int>(f)]; }

  int difficulty() const {
    int d = 0;
    for (bool b : distractor) d += b ? 1 : 0;
    return d;
  }

  void validate() const {
    if (predictive == Feature::positions) fail(Errc::bad_argument, "positions cannot be predictive");
    if (is_distractor(predictive)) fail(Errc::bad_argument, "predictive feature cannot be a distractor");
    if (K < 2) fail(Errc::bad_argument, "K must be >= 2");
    if (n < 2) fail(Errc::bad_argument, "n must be >= 2");
  }

  static TestSpec make(Feature predictive, std::initializer_list<Feature> distractors,
                       std::uint64_t seed = 0) {
    TestSpec s;
    s.predictive = predictive;
    for (Feature f : distractors) s.distractor[static_cast<int>(f)] = true;
    s.seed = seed;
    s.validate();
    return s;
  }
};

// Stable numeric id of a (predictive, distractor set) condition, used for
// per-test seed derivation and CSV grouping.
inline std::uint64_t condition_id(const TestSpec& s) {
  std::uint64_t mask = 0;
  for (int i = 0; i < kNumFeatures; ++i) {
    if (s.distractor[i]) mask |= 1ull << i;
  }
  return static_cast<std::uint64_t>(s.predictive) * 32 + mask;
}

inline std::string distractor_string(const TestSpec& s) {
  // Alphabetical feature order, ';'-joined; "none" for difficulty 0.
  static constexpr std::array<Feature, kNumFeatures> alpha = {
      Feature::number, Feature::positions, Feature::shade, Feature::shape, Feature::size};
  std::string out;
  for (Feature f : alpha) {
    if (!s.is_distractor(f)) continue;
    if (!out.empty()) out += ';';
    out += to_string(f);
  }
  return out.empty() ? "none" : out;
}

inline std::string condition_string(const TestSpec& s) {
  return std::string(to_string(s.predictive)) + "/" + distractor_string(s);
}

}  // namespace sce
