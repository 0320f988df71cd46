#pragma once

#include <stdexcept>
#include <string>

namespace sce {

enum class Errc {
  out_of_range,
  wrong_feature,
  infeasible_spec,
  shape_mismatch,
  not_scalar,
  dimension_mismatch,
  too_short,
  missing_head,
  too_small,
  insufficient_frames,
  io_error,
  bad_argument,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::out_of_range: return "OutOfRange";
    case Errc::wrong_feature: return "WrongFeature";
    case Errc::infeasible_spec: return "InfeasibleSpec";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::not_scalar: return "NotScalar";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::too_short: return "TooShort";
    case Errc::missing_head: return "MissingHead";
    case Errc::too_small: return "TooSmall";
    case Errc::insufficient_frames: return "InsufficientFrames";
    case Errc::io_error: return "IoError";
    case Errc::bad_argument: return "BadArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace sce
