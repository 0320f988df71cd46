#pragma once

#include <cstdio>
#include <fstream>
#include <string>

#include "sce/errors.hpp"

namespace sce {

// Fixed-precision decimal; deterministic bytes for identical doubles.
inline std::string fmt_fixed(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

// Shortest-ish general form for free-scale values (anomaly scores, losses).
inline std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline void write_text_file(const std::string& path, const std::string& data) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(Errc::io_error, "cannot open '" + path + "' for writing");
  f.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!f) fail(Errc::io_error, "write failed for '" + path + "'");
}

}  // namespace sce
