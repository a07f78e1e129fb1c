#include "nldiff/error.hpp"

namespace nldiff {

const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::IsolatedNode: return "IsolatedNode";
    case ErrorKind::AsymmetricWeights: return "AsymmetricWeights";
    case ErrorKind::EmptyStencil: return "EmptyStencil";
    case ErrorKind::EmptyZ: return "EmptyZ";
    case ErrorKind::NotConnected: return "NotConnected";
    case ErrorKind::InvalidParameter: return "InvalidParameter";
    case ErrorKind::InvalidExponent: return "InvalidExponent";
    case ErrorKind::WeightOutOfRange: return "WeightOutOfRange";
    case ErrorKind::MissingValues: return "MissingValues";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::SolverDiverged: return "SolverDiverged";
    case ErrorKind::RangeInfeasible: return "RangeInfeasible";
    case ErrorKind::CompatibilityViolated: return "CompatibilityViolated";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::NonlinearCase: return "NonlinearCase";
    case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

}
