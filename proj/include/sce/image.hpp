#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sce/errors.hpp"

namespace sce {

// 8-bit grayscale image, row-major, 0 = black, 255 = white.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 255)
      : width(w), height(h), pixels(static_cast<size_t>(w) * h, fill) {}

  std::uint8_t& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }

  bool operator==(const Image&) const = default;
};

inline std::string encode_pgm(const Image& img) {
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
  return out;
}

inline void write_pgm(const std::string& path, const Image& img) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(Errc::io_error, "cannot open '" + path + "' for writing");
  const std::string data = encode_pgm(img);
  f.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!f) fail(Errc::io_error, "write failed for '" + path + "'");
}

namespace detail {
inline int pnm_next_int(std::istream& in) {
  // Skips whitespace and '#' comments.
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  if (c == EOF || !std::isdigit(c)) fail(Errc::io_error, "malformed PNM header");
  int v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    c = in.get();
  }
  return v;
}
}  // namespace detail

inline Image decode_pgm(std::istream& in) {
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5') fail(Errc::io_error, "not a binary PGM (P5)");
  const int w = detail::pnm_next_int(in);
  const int h = detail::pnm_next_int(in);
  const int maxval = detail::pnm_next_int(in);
  if (w <= 0 || h <= 0 || maxval != 255) fail(Errc::io_error, "unsupported PGM geometry");
  Image img(w, h);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!in) fail(Errc::io_error, "truncated PGM payload");
  return img;
}

inline Image read_pgm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(Errc::io_error, "cannot open '" + path + "'");
  return decode_pgm(f);
}

}  // namespace sce
