#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wlr {

enum class ErrorCode {
  kInvalidInput,
  kInvalidRank,
  kRankDeficient,
  kDegenerateObservation,
  kNeedsCross,
  kInvalidStep,
  kInvalidLeverage,
  kInvalidDims,
  kInvalidMarginals,
  kSingularWeight,
  kUndefinedReference,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

/// Exception carrying a stable, machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace wlr
