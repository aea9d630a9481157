#include "qfresh/error.hpp"

namespace qfresh {

std::string_view to_string(Errc code) {
    switch (code) {
    case Errc::NotSquare: return "NotSquare";
    case Errc::TooSmall: return "TooSmall";
    case Errc::RowSumViolation: return "RowSumViolation";
    case Errc::NegativeOffDiagonal: return "NegativeOffDiagonal";
    case Errc::NotIrreducible: return "NotIrreducible";
    case Errc::NegativeTime: return "NegativeTime";
    case Errc::NotReversible: return "NotReversible";
    case Errc::NoUniqueMaximum: return "NoUniqueMaximum";
    case Errc::InvalidThresholds: return "InvalidThresholds";
    case Errc::MissingAuxStage: return "MissingAuxStage";
    case Errc::RandomizedEstimatorUnsupported: return "RandomizedEstimatorUnsupported";
    case Errc::NonpositiveRate: return "NonpositiveRate";
    case Errc::SingularSystem: return "SingularSystem";
    case Errc::MaxIterationsExceeded: return "MaxIterationsExceeded";
    case Errc::BracketingFailure: return "BracketingFailure";
    case Errc::InfeasibleBounds: return "InfeasibleBounds";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ParseError: return "ParseError";
    }
    return "Unknown";
}

bool is_config_error(Errc code) {
    switch (code) {
    case Errc::ParseError:
    case Errc::InvalidArgument:
    case Errc::NotSquare:
    case Errc::TooSmall:
    case Errc::RowSumViolation:
    case Errc::NegativeOffDiagonal:
    case Errc::NotIrreducible:
    case Errc::NegativeTime:
    case Errc::InvalidThresholds:
    case Errc::NonpositiveRate:
    case Errc::InfeasibleBounds:
        return true;
    default:
        return false;
    }
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace qfresh
