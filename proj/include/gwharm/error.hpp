#pragma once

#include <stdexcept>
#include <string>

namespace gwharm {

enum class ErrorCode {
    // laws
    ZeroOffspringMass,
    DegenerateAtOne,
    NotNormalizable,
    InfiniteMean,
    AlphaOutOfRange,
    // griddist
    StepMismatch,
    NonFiniteIntegrand,
    // conductance / dimension
    NotTransient,
    StepTooCoarse,
    EmptyChildren,
    BoundaryMass,
    SupportLeakage,
    // mctree
    NodeBudgetExceeded,
    DepthExhausted,
    // reclen
    DomainViolation,
    NonFiniteEstimate,
    NoBracket,
    DivergentDenominator,
    WrongModel,
    // generic
    InvalidArgument,
    ParseError,
    IoError,
};

const char* to_string(ErrorCode code);

/// Exit status the command-line front end reports for an error of this kind:
/// 2 for configuration problems, 3 for numeric precondition violations and
/// 4 for convergence or diagnostic failures.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

} // namespace gwharm
