#pragma once

#include <stdexcept>
#include <string>

namespace frog {

/// Error categories used across the library.
enum class errc {
  dimension_mismatch,
  non_finite,
  unsupported_primitive,
  zero_tangent,
  k_too_large,
  bad_angle,
  degenerate_draw,
  rank_deficient,
  zero_vector,
  bad_dimension,
  shape_mismatch,
  io_error,
  bad_config,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::non_finite: return "NonFinite";
    case errc::unsupported_primitive: return "UnsupportedPrimitive";
    case errc::zero_tangent: return "ZeroTangent";
    case errc::k_too_large: return "KTooLarge";
    case errc::bad_angle: return "BadAngle";
    case errc::degenerate_draw: return "DegenerateDraw";
    case errc::rank_deficient: return "RankDeficient";
    case errc::zero_vector: return "ZeroVector";
    case errc::bad_dimension: return "BadDimension";
    case errc::shape_mismatch: return "ShapeMismatch";
    case errc::io_error: return "IoError";
    case errc::bad_config: return "BadConfig";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, errc code, const std::string& what) {
  if (!condition) raise(code, what);
}

}  // namespace frog
