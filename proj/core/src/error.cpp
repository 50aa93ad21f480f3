#include "csec/error.hpp"

namespace csec {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidParameters: return "invalid-parameters";
    case ErrorCode::kNonMds: return "non-mds";
    case ErrorCode::kBudgetExceeded: return "budget-exceeded";
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kNotDecodable: return "not-decodable";
    case ErrorCode::kInternal: return "internal";
    case ErrorCode::kInfeasibleTolerance: return "infeasible-straggler-tolerance";
    case ErrorCode::kInvalidLoad: return "invalid-load";
    case ErrorCode::kInfeasibleCounts: return "infeasible-counts";
    case ErrorCode::kLookup: return "lookup";
    case ErrorCode::kProtocol: return "protocol";
    case ErrorCode::kStepFailure: return "step-failure";
    case ErrorCode::kInfeasibleStep: return "infeasible-step";
    case ErrorCode::kBreakdown: return "breakdown";
    case ErrorCode::kDiverged: return "diverged";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

}  // namespace csec
