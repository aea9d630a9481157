#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qfresh {

enum class Errc {
    NotSquare,
    TooSmall,
    RowSumViolation,
    NegativeOffDiagonal,
    NotIrreducible,
    NegativeTime,
    NotReversible,
    NoUniqueMaximum,
    InvalidThresholds,
    MissingAuxStage,
    RandomizedEstimatorUnsupported,
    NonpositiveRate,
    SingularSystem,
    MaxIterationsExceeded,
    BracketingFailure,
    InfeasibleBounds,
    InvalidArgument,
    ParseError,
};

std::string_view to_string(Errc code);

// Config and usage problems map to ParseError / InvalidArgument; everything
// else is a numerical failure.
bool is_config_error(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what);
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace qfresh
