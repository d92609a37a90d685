// Copyright 2026 The conflab Authors. Licensed under the Apache License 2.0.
#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace conflab {

using VertexId = std::int32_t;
inline constexpr VertexId kNoVertex = -1;

// Coordinates are padded to four entries; unused trailing entries are zero.
using Point = std::array<double, 4>;

enum class ErrorCode : int {
  invalid_argument = 1,
  budget_exceeded = 2,
  degenerate_field = 3,
  solver_failure = 4,
  io_error = 5,
  format_error = 6,
  chart_overflow = 7,
  stage_failure = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::invalid_argument, what);
}

}  // namespace conflab
