#include "gwharm/error.hpp"

namespace gwharm {

const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::ZeroOffspringMass: return "ZeroOffspringMass";
    case ErrorCode::DegenerateAtOne: return "DegenerateAtOne";
    case ErrorCode::NotNormalizable: return "NotNormalizable";
    case ErrorCode::InfiniteMean: return "InfiniteMean";
    case ErrorCode::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorCode::StepMismatch: return "StepMismatch";
    case ErrorCode::NonFiniteIntegrand: return "NonFiniteIntegrand";
    case ErrorCode::NotTransient: return "NotTransient";
    case ErrorCode::StepTooCoarse: return "StepTooCoarse";
    case ErrorCode::EmptyChildren: return "EmptyChildren";
    case ErrorCode::BoundaryMass: return "BoundaryMass";
    case ErrorCode::SupportLeakage: return "SupportLeakage";
    case ErrorCode::NodeBudgetExceeded: return "NodeBudgetExceeded";
    case ErrorCode::DepthExhausted: return "DepthExhausted";
    case ErrorCode::DomainViolation: return "DomainViolation";
    case ErrorCode::NonFiniteEstimate: return "NonFiniteEstimate";
    case ErrorCode::NoBracket: return "NoBracket";
    case ErrorCode::DivergentDenominator: return "DivergentDenominator";
    case ErrorCode::WrongModel: return "WrongModel";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::IoError:
        return 2;
    case ErrorCode::BoundaryMass:
    case ErrorCode::SupportLeakage:
    case ErrorCode::NodeBudgetExceeded:
    case ErrorCode::DepthExhausted:
    case ErrorCode::NonFiniteEstimate:
    case ErrorCode::NoBracket:
    case ErrorCode::DivergentDenominator:
        return 4;
    default:
        return 3;
    }
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

} // namespace gwharm
