#pragma once

#include <stdexcept>
#include <string>

namespace crthte {

enum class ErrorCode {
    EmptyDesign,
    ArmCountOutOfRange,
    NonIntegerSubgroupCount,
    NonIntegerPatternEntry,
    InvalidSubgroupSpec,
    InvalidSigma,
    InvalidRho,
    DomainError,
    DegenerateAssignment,
    DegenerateDenominator,
    TooFewClusters,
    UnequalArms,
    EnumerationTooLarge,
    SingularTheta,
    SingularInformation,
    NotUnivariate,
    NoRootInBracket,
    NonPositiveDiscriminant,
    IoError,
};

const char* error_code_name(ErrorCode code);

// Single exception type carrying a machine-readable code; the CLI maps
// codes onto exit statuses.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

}  // namespace crthte
