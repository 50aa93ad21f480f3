#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace csec {

enum class ErrorCode {
  kInvalidParameters,
  kNonMds,
  kBudgetExceeded,
  kShape,
  kNotDecodable,
  kInternal,
  kInfeasibleTolerance,
  kInvalidLoad,
  kInfeasibleCounts,
  kLookup,
  kProtocol,
  kStepFailure,
  kInfeasibleStep,
  kBreakdown,
  kDiverged,
  kConfig,
  kIo,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this type; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace csec
