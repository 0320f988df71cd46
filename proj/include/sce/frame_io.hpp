#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "sce/errors.hpp"
#include "sce/image.hpp"

#ifdef SCE_WITH_PNG
#include <png.h>
#endif

namespace sce {

// Raw decoded frame: 8-bit, interleaved when channels == 3.
struct FrameBuffer {
  int width = 0;
  int height = 0;
  int channels = 1;  // 1 = gray, 3 = RGB
  std::vector<std::uint8_t> data;

  std::uint8_t at(int x, int y, int c = 0) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
};

namespace detail {

inline int pnm_token(std::istream& in) {
  // Skips whitespace and '#' comments between header fields.
  while (true) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int v = -1;
  in >> v;
  return v;
}

}  // namespace detail

inline FrameBuffer decode_pnm(const std::string& bytes, const std::string& what) {
  std::istringstream in(bytes);
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P6") fail(Errc::io_error, what + ": not a P5/P6 PNM file");
  FrameBuffer f;
  f.channels = magic == "P6" ? 3 : 1;
  f.width = detail::pnm_token(in);
  f.height = detail::pnm_token(in);
  const int maxval = detail::pnm_token(in);
  if (f.width <= 0 || f.height <= 0 || maxval <= 0 || maxval > 255)
    fail(Errc::io_error, what + ": bad PNM header");
  in.get();  // single whitespace before raster
  const size_t n = static_cast<size_t>(f.width) * f.height * f.channels;
  f.data.resize(n);
  in.read(reinterpret_cast<char*>(f.data.data()), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n) fail(Errc::io_error, what + ": truncated PNM raster");
  return f;
}

#ifdef SCE_WITH_PNG
inline FrameBuffer decode_png_file(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) fail(Errc::io_error, path + ": cannot open");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(Errc::io_error, path + ": libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(Errc::io_error, path + ": libpng decode failed");
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const int ch = static_cast<int>(png_get_channels(png, info));
  FrameBuffer f;
  f.width = static_cast<int>(w);
  f.height = static_cast<int>(h);
  f.channels = ch >= 3 ? 3 : 1;
  f.data.resize(static_cast<size_t>(f.width) * f.height * f.channels);
  std::vector<std::uint8_t> row(static_cast<size_t>(f.width) * ch);
  for (png_uint_32 y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < f.width; ++x) {
      for (int c = 0; c < f.channels; ++c) {
        f.data[(static_cast<size_t>(y) * f.width + x) * f.channels + c] =
            row[static_cast<size_t>(x) * ch + c];
      }
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return f;
}
#endif

inline FrameBuffer load_frame(const std::string& path) {
  const std::string ext = std::filesystem::path(path).extension().string();
  if (ext == ".png" || ext == ".PNG") {
#ifdef SCE_WITH_PNG
    return decode_png_file(path);
#else
    fail(Errc::io_error, path + ": built without PNG support");
#endif
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, path + ": cannot open");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_pnm(bytes, path);
}

// '*' and '?' wildcards against a file name.
inline bool glob_match(const std::string& pat, const std::string& name) {
  size_t p = 0, s = 0, star = std::string::npos, mark = 0;
  while (s < name.size()) {
    if (p < pat.size() && (pat[p] == '?' || pat[p] == name[s])) {
      ++p;
      ++s;
    } else if (p < pat.size() && pat[p] == '*') {
      star = p++;
      mark = s;
    } else if (star != std::string::npos) {
      p = star + 1;
      s = ++mark;
    } else {
      return false;
    }
  }
  while (p < pat.size() && pat[p] == '*') ++p;
  return p == pat.size();
}

// Matching files in dir, ordered by name (byte-wise), which fixes frame order.
inline std::vector<std::string> list_frames(const std::string& dir, const std::string& pattern) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) fail(Errc::io_error, dir + ": not a directory");
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    if (glob_match(pattern, name)) names.push_back(name);
  }
  std::sort(names.begin(), names.end());
  std::vector<std::string> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back((fs::path(dir) / n).string());
  return out;
}

}  // namespace sce
