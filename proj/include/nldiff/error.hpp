#pragma once

#include <stdexcept>
#include <string>

namespace nldiff {

enum class ErrorKind {
    IsolatedNode,
    AsymmetricWeights,
    EmptyStencil,
    EmptyZ,
    NotConnected,
    InvalidParameter,
    InvalidExponent,
    WeightOutOfRange,
    MissingValues,
    NumericalFailure,
    SolverDiverged,
    RangeInfeasible,
    CompatibilityViolated,
    TooLarge,
    NonlinearCase,
    ConfigError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

}
