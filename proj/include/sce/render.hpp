#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "sce/features.hpp"
#include "sce/image.hpp"

namespace sce {

// Rasterization of a FeatureVector into a grayscale image: `number` identical
// shapes, each centered in its grid cell, drawn by 2x2 supersampled binary
// coverage tests. Pure function of (features, config); run-to-run identical.
struct RenderConfig {
  int width = 64;
  int height = 64;
  int grid = 3;
  std::uint8_t background = 255;
  // Fill gray per shade index: 6 linearly spaced values, darkest first.
  std::array<int, kShadeLevels> shade_lut{0, 42, 84, 126, 168, 210};
  // Enclosing-circle diameter in pixels per size index.
  std::array<double, kSizeLevels> size_lut{6, 8, 10, 12, 14, 16};
};

namespace detail {

struct Vec2 {
  double x, y;
};

// Crossing-number point-in-polygon; half-open edge rule keeps ties consistent.
inline bool point_in_polygon(double px, double py, const Vec2* v, int n) {
  bool inside = false;
  for (int i = 0, j = n - 1; i < n; j = i++) {
    if ((v[i].y > py) != (v[j].y > py)) {
      const double xint = v[i].x + (py - v[i].y) * (v[j].x - v[i].x) / (v[j].y - v[i].y);
      if (px < xint) inside = !inside;
    }
  }
  return inside;
}

// Vertices of the shape inscribed in a circle of radius r at (cx, cy).
// Image coordinates: y grows downward; all shapes point up.
inline int shape_vertices(Shape s, double cx, double cy, double r, Vec2* out) {
  constexpr double pi = std::numbers::pi;
  auto at = [&](double theta) { return Vec2{cx + r * std::cos(theta), cy + r * std::sin(theta)}; };
  switch (s) {
    case Shape::circle:
      return 0;
    case Shape::triangle: {
      for (int k = 0; k < 3; ++k) out[k] = at(-pi / 2 + k * 2 * pi / 3);
      return 3;
    }
    case Shape::square: {
      for (int k = 0; k < 4; ++k) out[k] = at(-pi / 4 + k * pi / 2);
      return 4;
    }
    case Shape::star: {
      // 5-pointed star; inner radius at the pentagram ratio cos72/cos36.
      const double inner = r * 0.3819660112501051;
      for (int k = 0; k < 5; ++k) {
        out[2 * k] = at(-pi / 2 + k * 2 * pi / 5);
        const double theta = -pi / 2 + (2 * k + 1) * pi / 5;
        out[2 * k + 1] = Vec2{cx + inner * std::cos(theta), cy + inner * std::sin(theta)};
      }
      return 10;
    }
    case Shape::hexagon: {
      for (int k = 0; k < 6; ++k) out[k] = at(-pi / 2 + k * pi / 3);
      return 6;
    }
  }
  return 0;
}

}  // namespace detail

inline Image render(const FeatureVector& fv, const RenderConfig& cfg = {}) {
  fv.validate();
  Image img(cfg.width, cfg.height, cfg.background);
  const double cell_w = static_cast<double>(cfg.width) / cfg.grid;
  const double cell_h = static_cast<double>(cfg.height) / cfg.grid;
  const double r = cfg.size_lut[fv.size_idx] / 2.0;
  const int shade = cfg.shade_lut[fv.shade_idx];
  const int bg = cfg.background;

  detail::Vec2 verts[10];
  for (int obj = 0; obj < fv.number; ++obj) {
    const int cell = fv.positions[obj];
    const double cx = (cell % cfg.grid + 0.5) * cell_w;
    const double cy = (cell / cfg.grid + 0.5) * cell_h;
    const int nverts = detail::shape_vertices(fv.shape, cx, cy, r, verts);

    const int x0 = std::max(0, static_cast<int>(std::floor(cx - r - 1)));
    const int x1 = std::min(cfg.width - 1, static_cast<int>(std::ceil(cx + r + 1)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - r - 1)));
    const int y1 = std::min(cfg.height - 1, static_cast<int>(std::ceil(cy + r + 1)));

    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        int covered = 0;
        for (int sy = 0; sy < 2; ++sy) {
          for (int sx = 0; sx < 2; ++sx) {
            const double px = x + 0.25 + 0.5 * sx;
            const double py = y + 0.25 + 0.5 * sy;
            bool inside;
            if (fv.shape == Shape::circle) {
              const double dx = px - cx, dy = py - cy;
              inside = dx * dx + dy * dy <= r * r;
            } else {
              inside = detail::point_in_polygon(px, py, verts, nverts);
            }
            covered += inside ? 1 : 0;
          }
        }
        if (covered > 0) {
          img.at(x, y) = static_cast<std::uint8_t>((covered * shade + (4 - covered) * bg + 2) / 4);
        }
      }
    }
  }
  return img;
}

}  // namespace sce
